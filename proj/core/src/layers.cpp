#include "octcnn/layers.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "octcnn/error.hpp"

namespace octcnn {

namespace {

void require_hwc(const Tensor& x, const char* op) {
    if (x.rank() != 3)
        throw DimensionError(std::string(op) + " needs an HxWxC tensor, got " + x.shape_str());
}

void check_conv_shapes(const Tensor& x, const LayerParams& p) {
    require_hwc(x, "conv2d");
    if (p.kernel.rank() != 4)
        throw DimensionError("conv2d kernel must be KHxKWxCinxCout, got " +
                             p.kernel.shape_str());
    if (p.kernel.extent(0) % 2 == 0 || p.kernel.extent(1) % 2 == 0)
        throw DimensionError("conv2d kernel extents must be odd for same padding, got " +
                             p.kernel.shape_str());
    if (p.kernel.extent(2) != x.extent(2))
        throw DimensionError("conv2d channel mismatch: input " + x.shape_str() + " vs kernel " +
                             p.kernel.shape_str());
    if (p.bias.rank() != 1 || p.bias.extent(0) != p.kernel.extent(3))
        throw DimensionError("conv2d bias shape " + p.bias.shape_str() +
                             " does not match kernel " + p.kernel.shape_str());
}

} // namespace

Tensor conv2d_forward(const Tensor& x, const LayerParams& p) {
    check_conv_shapes(x, p);
    const int h = x.extent(0), w = x.extent(1), cin = x.extent(2);
    const int kh = p.kernel.extent(0), kw = p.kernel.extent(1), cout = p.kernel.extent(3);
    const int ph = kh / 2, pw = kw / 2;

    Tensor y({h, w, cout});
    const float* xp = x.data();
    const float* kp = p.kernel.data();
    const float* bp = p.bias.data();
    float* yp = y.data();

    for (std::size_t pos = 0; pos < static_cast<std::size_t>(h) * w; ++pos)
        std::memcpy(yp + pos * cout, bp, sizeof(float) * static_cast<std::size_t>(cout));

    for (int i = 0; i < h; ++i) {
        for (int u = 0; u < kh; ++u) {
            const int xi = i + u - ph;
            if (xi < 0 || xi >= h) continue;
            for (int j = 0; j < w; ++j) {
                float* yo = yp + (static_cast<std::size_t>(i) * w + j) * cout;
                for (int v = 0; v < kw; ++v) {
                    const int xj = j + v - pw;
                    if (xj < 0 || xj >= w) continue;
                    const float* xrow = xp + (static_cast<std::size_t>(xi) * w + xj) * cin;
                    const float* krow =
                        kp + (static_cast<std::size_t>(u) * kw + v) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const float xv = xrow[ci];
                        const float* kc = krow + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) yo[co] += xv * kc[co];
                    }
                }
            }
        }
    }
    return y;
}

LayerGrads conv2d_backward(const Tensor& x, const LayerParams& p, const Tensor& d_out,
                           bool need_input_grad) {
    check_conv_shapes(x, p);
    const int h = x.extent(0), w = x.extent(1), cin = x.extent(2);
    const int kh = p.kernel.extent(0), kw = p.kernel.extent(1), cout = p.kernel.extent(3);
    const int ph = kh / 2, pw = kw / 2;
    if (d_out.rank() != 3 || d_out.extent(0) != h || d_out.extent(1) != w ||
        d_out.extent(2) != cout)
        throw DimensionError("conv2d_backward d_out shape " + d_out.shape_str() +
                             " does not match forward output [" + std::to_string(h) + "x" +
                             std::to_string(w) + "x" + std::to_string(cout) + "]");

    LayerGrads g;
    g.d_kernel = Tensor({kh, kw, cin, cout});
    g.d_bias = Tensor({cout});
    if (need_input_grad) g.d_input = Tensor({h, w, cin});

    const float* xp = x.data();
    const float* kp = p.kernel.data();
    const float* gp = d_out.data();
    float* dkp = g.d_kernel.data();
    float* dbp = g.d_bias.data();
    float* dip = need_input_grad ? g.d_input.data() : nullptr;

    for (std::size_t pos = 0; pos < static_cast<std::size_t>(h) * w; ++pos) {
        const float* go = gp + pos * cout;
        for (int co = 0; co < cout; ++co) dbp[co] += go[co];
    }

    for (int i = 0; i < h; ++i) {
        for (int u = 0; u < kh; ++u) {
            const int xi = i + u - ph;
            if (xi < 0 || xi >= h) continue;
            for (int j = 0; j < w; ++j) {
                const float* go = gp + (static_cast<std::size_t>(i) * w + j) * cout;
                for (int v = 0; v < kw; ++v) {
                    const int xj = j + v - pw;
                    if (xj < 0 || xj >= w) continue;
                    const std::size_t xoff = (static_cast<std::size_t>(xi) * w + xj) * cin;
                    const float* xrow = xp + xoff;
                    const std::size_t koff =
                        (static_cast<std::size_t>(u) * kw + v) * cin * cout;
                    float* dkrow = dkp + koff;
                    for (int ci = 0; ci < cin; ++ci) {
                        const float xv = xrow[ci];
                        float* dkc = dkrow + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) dkc[co] += xv * go[co];
                    }
                    if (dip) {
                        const float* krow = kp + koff;
                        float* di = dip + xoff;
                        for (int ci = 0; ci < cin; ++ci) {
                            const float* kc = krow + static_cast<std::size_t>(ci) * cout;
                            float acc = 0.0f;
                            for (int co = 0; co < cout; ++co) acc += kc[co] * go[co];
                            di[ci] += acc;
                        }
                    }
                }
            }
        }
    }
    return g;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    float* p = y.data();
    for (std::size_t i = 0; i < y.size(); ++i) p[i] = p[i] > 0.0f ? p[i] : 0.0f;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& d_out) {
    if (!x.same_shape(d_out))
        throw DimensionError("relu_backward shape mismatch: " + x.shape_str() + " vs " +
                             d_out.shape_str());
    Tensor g(x.shape());
    const float* xp = x.data();
    const float* gp = d_out.data();
    float* out = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = xp[i] > 0.0f ? gp[i] : 0.0f;
    return g;
}

PoolResult maxpool2x2_forward(const Tensor& x) {
    require_hwc(x, "maxpool2x2");
    const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
    if (h < 2 || w < 2)
        throw DimensionError("maxpool2x2 needs spatial extents >= 2, got " + x.shape_str());
    const int oh = h / 2, ow = w / 2;

    PoolResult r;
    r.y = Tensor({oh, ow, c});
    r.argmax.assign(static_cast<std::size_t>(oh) * ow * c, 0);
    const float* xp = x.data();
    float* yp = r.y.data();

    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            for (int ch = 0; ch < c; ++ch) {
                float best = -std::numeric_limits<float>::infinity();
                std::int32_t best_idx = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t idx =
                            (static_cast<std::size_t>(2 * i + dy) * w + (2 * j + dx)) * c + ch;
                        if (xp[idx] > best) {
                            best = xp[idx];
                            best_idx = static_cast<std::int32_t>(idx);
                        }
                    }
                }
                const std::size_t out = (static_cast<std::size_t>(i) * ow + j) * c + ch;
                yp[out] = best;
                r.argmax[out] = best_idx;
            }
        }
    }
    return r;
}

Tensor maxpool2x2_backward(const std::vector<int>& input_shape, const PoolResult& fwd,
                           const Tensor& d_out) {
    if (!d_out.same_shape(fwd.y))
        throw DimensionError("maxpool2x2_backward d_out shape " + d_out.shape_str() +
                             " does not match pooled shape " + fwd.y.shape_str());
    Tensor g(input_shape);
    float* gp = g.data();
    const float* dp = d_out.data();
    for (std::size_t i = 0; i < d_out.size(); ++i)
        gp[static_cast<std::size_t>(fwd.argmax[i])] += dp[i];
    return g;
}

GmpResult global_max_pool(const Tensor& x) {
    require_hwc(x, "global_max_pool");
    const int h = x.extent(0), w = x.extent(1), c = x.extent(2);

    GmpResult r;
    r.y = Tensor({c});
    r.argmax.assign(static_cast<std::size_t>(c), 0);
    const float* xp = x.data();
    float* yp = r.y.data();

    for (int ch = 0; ch < c; ++ch) {
        float best = -std::numeric_limits<float>::infinity();
        std::int32_t best_idx = 0;
        for (std::size_t pos = 0; pos < static_cast<std::size_t>(h) * w; ++pos) {
            const float v = xp[pos * c + ch];
            if (v > best) {
                best = v;
                best_idx = static_cast<std::int32_t>(pos * c + ch);
            }
        }
        yp[ch] = best;
        r.argmax[static_cast<std::size_t>(ch)] = best_idx;
    }
    return r;
}

Tensor global_max_pool_backward(const std::vector<int>& input_shape, const GmpResult& fwd,
                                const Tensor& d_out) {
    if (d_out.rank() != 1 || d_out.extent(0) != fwd.y.extent(0))
        throw DimensionError("global_max_pool_backward d_out shape " + d_out.shape_str() +
                             " does not match pooled shape " + fwd.y.shape_str());
    Tensor g(input_shape);
    float* gp = g.data();
    const float* dp = d_out.data();
    for (int ch = 0; ch < d_out.extent(0); ++ch)
        gp[static_cast<std::size_t>(fwd.argmax[static_cast<std::size_t>(ch)])] += dp[ch];
    return g;
}

Tensor dense_forward(const Tensor& x, const LayerParams& p) {
    if (x.rank() != 1)
        throw DimensionError("dense needs a rank-1 input, got " + x.shape_str());
    if (p.kernel.rank() != 2 || p.kernel.extent(0) != x.extent(0))
        throw DimensionError("dense extent mismatch: input " + x.shape_str() + " vs kernel " +
                             p.kernel.shape_str());
    const int in = p.kernel.extent(0), out = p.kernel.extent(1);
    if (p.bias.rank() != 1 || p.bias.extent(0) != out)
        throw DimensionError("dense bias shape " + p.bias.shape_str() +
                             " does not match kernel " + p.kernel.shape_str());
    Tensor y({out});
    const float* xp = x.data();
    const float* kp = p.kernel.data();
    float* yp = y.data();
    for (int o = 0; o < out; ++o) yp[o] = p.bias(o);
    for (int i = 0; i < in; ++i) {
        const float xv = xp[i];
        const float* krow = kp + static_cast<std::size_t>(i) * out;
        for (int o = 0; o < out; ++o) yp[o] += xv * krow[o];
    }
    return y;
}

LayerGrads dense_backward(const Tensor& x, const LayerParams& p, const Tensor& d_out) {
    const int in = p.kernel.extent(0), out = p.kernel.extent(1);
    if (x.rank() != 1 || x.extent(0) != in)
        throw DimensionError("dense_backward input shape " + x.shape_str() +
                             " does not match kernel " + p.kernel.shape_str());
    if (d_out.rank() != 1 || d_out.extent(0) != out)
        throw DimensionError("dense_backward d_out shape " + d_out.shape_str() +
                             " does not match kernel " + p.kernel.shape_str());
    LayerGrads g;
    g.d_kernel = Tensor({in, out});
    g.d_bias = d_out;
    g.d_input = Tensor({in});
    const float* xp = x.data();
    const float* kp = p.kernel.data();
    const float* gp = d_out.data();
    float* dkp = g.d_kernel.data();
    float* dip = g.d_input.data();
    for (int i = 0; i < in; ++i) {
        const float xv = xp[i];
        float* dkrow = dkp + static_cast<std::size_t>(i) * out;
        const float* krow = kp + static_cast<std::size_t>(i) * out;
        float acc = 0.0f;
        for (int o = 0; o < out; ++o) {
            dkrow[o] = xv * gp[o];
            acc += krow[o] * gp[o];
        }
        dip[i] = acc;
    }
    return g;
}

Tensor softmax(const Tensor& z) {
    if (z.rank() != 1 || z.extent(0) < 2)
        throw DimensionError("softmax needs a rank-1 tensor with K >= 2, got " + z.shape_str());
    const int k = z.extent(0);
    Tensor y({k});
    const float* zp = z.data();
    float* yp = y.data();
    float zmax = zp[0];
    for (int i = 1; i < k; ++i) zmax = zp[i] > zmax ? zp[i] : zmax;
    float sum = 0.0f;
    for (int i = 0; i < k; ++i) {
        yp[i] = std::exp(zp[i] - zmax);
        sum += yp[i];
    }
    for (int i = 0; i < k; ++i) yp[i] /= sum;
    return y;
}

DropoutResult dropout_forward(const Tensor& x, float rate, SeededRng& rng, bool training) {
    if (rate < 0.0f || rate >= 1.0f)
        throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
    DropoutResult r;
    if (!training || rate == 0.0f) {
        r.y = x;
        return r;
    }
    const float scale = 1.0f / (1.0f - rate);
    r.mask = Tensor(x.shape());
    r.y = Tensor(x.shape());
    const float* xp = x.data();
    float* mp = r.mask.data();
    float* yp = r.y.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        mp[i] = rng.next_float() < rate ? 0.0f : scale;
        yp[i] = xp[i] * mp[i];
    }
    return r;
}

Tensor dropout_backward(const DropoutResult& fwd, const Tensor& d_out) {
    if (fwd.mask.empty()) return d_out; // identity path
    if (!fwd.mask.same_shape(d_out))
        throw DimensionError("dropout_backward shape mismatch: " + fwd.mask.shape_str() +
                             " vs " + d_out.shape_str());
    Tensor g(d_out.shape());
    const float* mp = fwd.mask.data();
    const float* dp = d_out.data();
    float* gp = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) gp[i] = dp[i] * mp[i];
    return g;
}

} // namespace octcnn
