#pragma once

#include "octcnn/dataset.hpp"
#include "octcnn/rng.hpp"
#include "octcnn/tensor.hpp"

namespace octcnn {

/// On-the-fly augmentation policy. factor scales every transform bound:
///   shift    up to factor * extent (per axis)
///   rotation up to factor * 15 degrees
///   zoom     in [1 - factor, 1 + factor]
///   elastic  displacement field, raw amplitude factor * 10 px, smoothed
///            by a Gaussian of sigma 8 px (truncated at 2 sigma)
struct AugmentConfig {
    float factor = 0.0f;
    bool shift = true;
    bool rotation = true;
    bool zoom = true;
    bool elastic = true;

    bool active() const { return factor > 0.0f && (shift || rotation || zoom || elastic); }
};

/// Randomly transformed copy of the image (shape preserved, zero fill
/// outside the source). Draw order is fixed: shift y, shift x, rotation,
/// zoom, then the elastic field (dy,dx interleaved per pixel, row-major);
/// disabled transforms consume no randomness. factor == 0 returns the
/// input bitwise.
Tensor augment_image(const Tensor& image, const AugmentConfig& cfg, SeededRng& rng);

/// Same, keeping label / patient identity / sample id.
Sample augment(const Sample& s, const AugmentConfig& cfg, SeededRng& rng);

} // namespace octcnn
