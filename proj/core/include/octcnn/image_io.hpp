#pragma once

#include <filesystem>

#include "octcnn/tensor.hpp"

namespace octcnn {

/// Reads an 8-bit grayscale PGM (P5 or P2) or PNG image into an H x W x 1
/// tensor scaled to [0,1]. The container is picked by file content, not
/// extension. Anything that is not 8-bit grayscale is a DataError.
Tensor read_image_gray(const std::filesystem::path& path);

/// 8-bit writers; values are clamped to [0,1] and quantized as
/// round(v * 255).
void write_pgm(const std::filesystem::path& path, const Tensor& gray);           // H x W x 1
void write_png_gray(const std::filesystem::path& path, const Tensor& gray);      // H x W x 1
void write_png_rgb(const std::filesystem::path& path, const Tensor& rgb);        // H x W x 3
void write_ppm(const std::filesystem::path& path, const Tensor& rgb);            // H x W x 3

} // namespace octcnn
