#include "octcnn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "octcnn/error.hpp"

namespace octcnn {

namespace {

std::size_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4)
        throw DimensionError("tensor rank must be 1..4, got " + shape_str(shape));
    std::size_t n = 1;
    for (int e : shape) {
        if (e < 1) throw DimensionError("tensor extents must be >= 1, got " + shape_str(shape));
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

} // namespace

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(std::vector<int> shape, float fill)
    : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data) {
    Tensor t;
    std::size_t n = checked_numel(shape);
    if (n != data.size())
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + octcnn::shape_str(shape));
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const { return octcnn::shape_str(shape_); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw DimensionError("matmul needs rank-2 operands, got " + a.shape_str() + " and " +
                             b.shape_str());
    const int m = a.extent(0), k = a.extent(1);
    const int k2 = b.extent(0), n = b.extent(1);
    if (k != k2)
        throw DimensionError("matmul inner extents disagree: " + a.shape_str() + " vs " +
                             b.shape_str());
    Tensor y({m, n});
    const float* ap = a.data();
    const float* bp = b.data();
    float* yp = y.data();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (int t = 0; t < k; ++t) acc += ap[i * k + t] * bp[t * n + j];
            yp[i * n + j] = acc;
        }
    }
    return y;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    if (x.rank() != 3)
        throw DimensionError("bilinear_resize needs an HxWxC tensor, got " + x.shape_str());
    if (out_h < 1 || out_w < 1)
        throw DimensionError("bilinear_resize target extents must be >= 1, got [" +
                             std::to_string(out_h) + "x" + std::to_string(out_w) + "]");
    const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
    if (out_h == h && out_w == w) return x;

    Tensor y({out_h, out_w, c});
    const float* xp = x.data();
    float* yp = y.data();

    auto src_coord = [](int o, int out, int in) -> double {
        if (out == 1) return (in - 1) / 2.0;
        return static_cast<double>(o) * (in - 1) / (out - 1);
    };

    for (int i = 0; i < out_h; ++i) {
        const double sy = src_coord(i, out_h, h);
        const int y0 = static_cast<int>(sy);
        const int y1 = y0 + 1 < h ? y0 + 1 : y0;
        const float fy = static_cast<float>(sy - y0);
        for (int j = 0; j < out_w; ++j) {
            const double sx = src_coord(j, out_w, w);
            const int x0 = static_cast<int>(sx);
            const int x1 = x0 + 1 < w ? x0 + 1 : x0;
            const float fx = static_cast<float>(sx - x0);
            const float* p00 = xp + (static_cast<std::size_t>(y0) * w + x0) * c;
            const float* p01 = xp + (static_cast<std::size_t>(y0) * w + x1) * c;
            const float* p10 = xp + (static_cast<std::size_t>(y1) * w + x0) * c;
            const float* p11 = xp + (static_cast<std::size_t>(y1) * w + x1) * c;
            float* out = yp + (static_cast<std::size_t>(i) * out_w + j) * c;
            for (int ch = 0; ch < c; ++ch) {
                const float top = p00[ch] + fx * (p01[ch] - p00[ch]);
                const float bot = p10[ch] + fx * (p11[ch] - p10[ch]);
                out[ch] = top + fy * (bot - top);
            }
        }
    }
    return y;
}

Tensor random_init(const std::vector<int>& shape, SeededRng& rng, int fan_in) {
    if (fan_in < 1) throw ConfigError("random_init fan_in must be >= 1");
    Tensor t(shape);
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    float* p = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rng.uniform(-bound, bound);
    return t;
}

} // namespace octcnn
