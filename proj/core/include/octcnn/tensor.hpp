#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "octcnn/rng.hpp"

namespace octcnn {

/// Dense row-major float32 array of rank 1-4.
///
/// Layout conventions, fixed for the whole engine:
///   images / feature maps  H x W x C
///   conv kernels           KH x KW x Cin x Cout
///   dense kernels          In x Out
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, float fill = 0.0f);

    static Tensor from_data(std::vector<int> shape, std::vector<float> data);

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator()(int i) { return data_[static_cast<std::size_t>(i)]; }
    float operator()(int i) const { return data_[static_cast<std::size_t>(i)]; }
    float& operator()(int i, int j) {
        return data_[static_cast<std::size_t>(i) * shape_[1] + j];
    }
    float operator()(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * shape_[1] + j];
    }
    float& operator()(int i, int j, int k) {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float operator()(int i, int j, int k) const {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float& operator()(int i, int j, int k, int l) {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) *
                         shape_[3] +
                     l];
    }
    float operator()(int i, int j, int k, int l) const {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) *
                         shape_[3] +
                     l];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    std::string shape_str() const;

  private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

std::string shape_str(const std::vector<int>& shape);

/// Standard matrix product of rank-2 tensors [m x k] * [k x n] -> [m x n].
/// Summation runs over k in ascending order (deterministic).
Tensor matmul(const Tensor& a, const Tensor& b);

/// Bilinear resize of an H x W x C tensor to out_h x out_w x C.
///
/// Corner-aligned convention: output index o samples source coordinate
///   s(o) = o * (in - 1) / (out - 1)      for out >= 2
///   s(0) = (in - 1) / 2                  for out == 1 (centroid)
/// so corners map to corners and resizing to the same size is the identity.
/// Interpolation uses the lerp form a + t*(b-a), which maps constant
/// inputs to exactly the same constant.
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

/// Uniform init in [-b, b] with b = sqrt(6 / fan_in) (Glorot-style bound
/// driven by the receiving fan only). Values are drawn in row-major order.
Tensor random_init(const std::vector<int>& shape, SeededRng& rng, int fan_in);

} // namespace octcnn
