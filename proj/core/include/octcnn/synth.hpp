#pragma once

#include <cstdint>
#include <filesystem>

#include "octcnn/dataset.hpp"
#include "octcnn/rng.hpp"

namespace octcnn {

/// Generator of circumpapillary-B-scan-like phantoms: stacked smooth
/// horizontal bands on a dark background, with a bright upper band whose
/// thickness carries the class signal (thin = glaucoma, thick = normal).
struct SynthConfig {
    int height = 496;
    int width = 768;
    float glaucoma_thickness_min = 4.0f;
    float glaucoma_thickness_max = 10.0f;
    float normal_thickness_min = 14.0f;
    float normal_thickness_max = 24.0f;
    int layer_count = 5;       // tissue bands rendered below the bright band
    float noise = 0.05f;       // additive speckle amplitude
    std::uint64_t seed = 0;

    /// Thickness ranges must be valid and strictly separated
    /// (glaucoma_thickness_max < normal_thickness_min).
    void validate() const;
};

struct SynthSample {
    Sample sample;
    Tensor band_mask; // H x W x 1, 1 inside the bright band
};

/// Deterministic per rng state; the band mask is exact (it marks the rows
/// actually rendered as the bright band in each column).
SynthSample generate_sample(const SynthConfig& cfg, Label label, SeededRng& rng);

/// Renders n_glaucoma + n_normal samples into out_dir/images/*.pgm (plus
/// out_dir/masks/*.pgm when write_masks), assigns samples round-robin to
/// synthetic patients, and writes out_dir/manifest.csv in the data-pipeline
/// format. Per-sample randomness is derived from (cfg.seed, class, index),
/// so a given config always produces identical files.
Dataset generate_dataset(const SynthConfig& cfg, int n_glaucoma, int n_normal,
                         int patients_per_class, const std::filesystem::path& out_dir,
                         bool write_masks = true);

} // namespace octcnn
