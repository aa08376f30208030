#pragma once

#include <cstdint>
#include <vector>

#include "octcnn/rng.hpp"
#include "octcnn/tensor.hpp"

namespace octcnn {

/// Weights of one parametered layer.
/// Conv: kernel KH x KW x Cin x Cout, bias Cout.
/// Dense: kernel In x Out, bias Out.
struct LayerParams {
    Tensor kernel;
    Tensor bias;
};

struct LayerGrads {
    Tensor d_kernel;
    Tensor d_bias;
    Tensor d_input;
};

/// Same-padded stride-1 convolution (zero padding, odd kernel extents).
/// y[i,j,co] = bias[co] + sum_{u,v,ci} x[i+u-ph, j+v-pw, ci] * k[u,v,ci,co]
Tensor conv2d_forward(const Tensor& x, const LayerParams& p);

/// Analytic gradients of conv2d_forward. d_input is skipped (left empty)
/// when need_input_grad is false, which saves the dominant cost for the
/// first layer of a network.
LayerGrads conv2d_backward(const Tensor& x, const LayerParams& p, const Tensor& d_out,
                           bool need_input_grad = true);

Tensor relu(const Tensor& x);
/// Subgradient at exactly 0 is 0: gradient passes only where x > 0.
Tensor relu_backward(const Tensor& x, const Tensor& d_out);

struct PoolResult {
    Tensor y;
    /// Flat input index of the window maximum per output cell; ties break
    /// to the first occurrence in row-major scan order.
    std::vector<std::int32_t> argmax;
};

/// Non-overlapping 2x2 window maxima; odd trailing row/column dropped.
PoolResult maxpool2x2_forward(const Tensor& x);
Tensor maxpool2x2_backward(const std::vector<int>& input_shape, const PoolResult& fwd,
                           const Tensor& d_out);

struct GmpResult {
    Tensor y; // rank-1 [C]
    std::vector<std::int32_t> argmax;
};

/// Per-channel spatial maximum; argmax records the first occurrence in
/// row-major order so the backward routing is deterministic.
GmpResult global_max_pool(const Tensor& x);
Tensor global_max_pool_backward(const std::vector<int>& input_shape, const GmpResult& fwd,
                                const Tensor& d_out);

/// y = x^T W + b for rank-1 x [In], kernel [In x Out].
Tensor dense_forward(const Tensor& x, const LayerParams& p);
LayerGrads dense_backward(const Tensor& x, const LayerParams& p, const Tensor& d_out);

/// Max-shifted softmax over a rank-1 tensor, K >= 2.
Tensor softmax(const Tensor& z);

struct DropoutResult {
    Tensor y;
    /// Per-unit multiplier: 0 for dropped units, 1/(1-rate) for survivors.
    /// Empty in evaluation mode (identity path).
    Tensor mask;
};

/// Inverted dropout: in training mode unit u is zeroed when the u-th draw
/// of rng.next_float() is < rate, survivors are scaled by 1/(1-rate).
/// Evaluation mode is the identity and consumes no randomness.
DropoutResult dropout_forward(const Tensor& x, float rate, SeededRng& rng, bool training);
Tensor dropout_backward(const DropoutResult& fwd, const Tensor& d_out);

} // namespace octcnn
