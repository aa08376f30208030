#pragma once

#include <filesystem>
#include <string>

#include "octcnn/dataset.hpp"
#include "octcnn/model.hpp"

namespace octcnn {

/// Per-class spatial relevance map at input resolution, min-max normalized
/// to [0,1]. A constant raw map cannot be normalized; it comes back as all
/// zeros with the constant flag set.
struct CamMap {
    Tensor map; // H x W x 1
    Label target = Label::glaucoma;
    std::string sample_id;
    bool constant = false;
};

/// raw(i,j) = sum_k w[k,class] * f_k(i,j) over the feature maps entering
/// the GMP layer and the dense head's weight column for the class, then
/// bilinear upsampling to the input extents and min-max normalization.
/// Negative raw values participate in the normalization (no rectification).
/// Requires a GMP -> (dropout) -> dense -> softmax head; runs in
/// evaluation mode.
CamMap compute_cam(const ModelState& state, const Tensor& x, Label target);

/// Writes the raw map as an 8-bit grayscale image and a 24-bit color
/// overlay that blends the base image with a monotone black-red-yellow-
/// white ramp at 50% opacity. Output format follows the file extension
/// (.png or .pgm/.ppm).
void export_heatmap(const CamMap& cam, const Tensor& base_image,
                    const std::filesystem::path& raw_out,
                    const std::filesystem::path& overlay_out);

/// The overlay color ramp, exposed for tests: v in [0,1] -> (r,g,b) in [0,1].
void heat_ramp(float v, float& r, float& g, float& b);

} // namespace octcnn
