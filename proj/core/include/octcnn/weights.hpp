#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "octcnn/model.hpp"
#include "octcnn/tensor.hpp"

namespace octcnn {

/// Ordered named-tensor map used to transport model weights.
class WeightArchive {
  public:
    /// Throws DataError on duplicate names.
    void add(std::string name, Tensor t);
    const Tensor* find(const std::string& name) const;
    const std::vector<std::pair<std::string, Tensor>>& tensors() const { return tensors_; }

  private:
    std::vector<std::pair<std::string, Tensor>> tensors_;
};

WeightArchive save_weights(const ModelState& state);

/// strict: every spec tensor must be present with a matching shape.
/// Non-strict additionally allows the head (dense) tensors to be missing;
/// missing ones are freshly initialized from rng. Shape mismatches are
/// errors in both modes.
ModelState load_weights(const ModelSpec& spec, const WeightArchive& archive, bool strict,
                        SeededRng& rng);

/// CWT1 container, little-endian, bit-exact:
///   magic "CWT1"; u32 tensor count;
///   per tensor: u16 name length, UTF-8 name, u8 rank, rank x u32 extents,
///               u8 dtype (0 = float32), raw row-major values.
void write_archive(const WeightArchive& archive, const std::filesystem::path& path);
WeightArchive read_archive(const std::filesystem::path& path);

} // namespace octcnn
