#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "octcnn/tensor.hpp"

namespace octcnn {

/// Class convention everywhere: glaucoma is the positive class, index 0.
enum class Label : int { glaucoma = 0, normal = 1 };

const char* label_name(Label l);
/// Parses exactly "glaucoma" or "normal"; anything else throws DataError.
Label parse_label(const std::string& token);

struct Sample {
    std::string sample_id;
    std::string patient_id;
    Label label = Label::normal;
    Tensor image; // H x W x 1, intensities in [0,1]
};

struct Dataset {
    std::vector<Sample> samples;
    std::filesystem::path manifest_path;

    int count(Label l) const;
    const Sample* find(const std::string& sample_id) const;
};

/// Reads a comma-separated manifest with header
///   sample_id,path,label,patient_id
/// Image paths are resolved relative to the manifest's directory; images
/// must be 8-bit grayscale PGM or PNG and are scaled to [0,1]. Sample order
/// equals row order. Errors name the offending row.
Dataset load_dataset(const std::filesystem::path& manifest);

/// Subset in id order given; unknown ids throw DataError.
Dataset subset(const Dataset& d, const std::vector<std::string>& sample_ids);

/// Fine-tune input preparation: bilinear downsample to ceil(H/2) x
/// ceil(W/2), then replicate the grayscale channel x3. Intensities are the
/// raw [0,1] values; no dataset normalisation is applied.
Tensor preprocess_for_finetune(const Tensor& image);

} // namespace octcnn
