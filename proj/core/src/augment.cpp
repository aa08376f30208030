#include "octcnn/augment.hpp"

#include <cmath>
#include <vector>

#include "octcnn/error.hpp"

namespace octcnn {

namespace {

constexpr float kPi = 3.14159265358979323846f;
constexpr float kMaxRotationDeg = 15.0f;
constexpr float kElasticAmplitudePx = 10.0f;
constexpr float kElasticSigmaPx = 8.0f;

/// Separable Gaussian blur, sigma in pixels, kernel truncated at 2*sigma.
void gaussian_blur(std::vector<float>& field, int h, int w, float sigma) {
    const int radius = static_cast<int>(2.0f * sigma);
    std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
    float sum = 0.0f;
    for (int i = -radius; i <= radius; ++i) {
        const float v = std::exp(-0.5f * static_cast<float>(i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& k : kernel) k /= sum;

    std::vector<float> tmp(field.size());
    // horizontal pass (clamped borders)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i) {
                int sx = x + i;
                sx = sx < 0 ? 0 : (sx >= w ? w - 1 : sx);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       field[static_cast<std::size_t>(y) * w + sx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    // vertical pass
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i) {
                int sy = y + i;
                sy = sy < 0 ? 0 : (sy >= h ? h - 1 : sy);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       tmp[static_cast<std::size_t>(sy) * w + x];
            }
            field[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
}

float sample_bilinear_zero(const float* img, int h, int w, float sy, float sx) {
    if (sy <= -1.0f || sx <= -1.0f || sy >= static_cast<float>(h) ||
        sx >= static_cast<float>(w))
        return 0.0f;
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const float fy = sy - static_cast<float>(y0);
    const float fx = sx - static_cast<float>(x0);
    auto at = [&](int y, int x) -> float {
        if (y < 0 || y >= h || x < 0 || x >= w) return 0.0f;
        return img[static_cast<std::size_t>(y) * w + x];
    };
    const float top = at(y0, x0) + fx * (at(y0, x0 + 1) - at(y0, x0));
    const float bot = at(y0 + 1, x0) + fx * (at(y0 + 1, x0 + 1) - at(y0 + 1, x0));
    return top + fy * (bot - top);
}

} // namespace

Tensor augment_image(const Tensor& image, const AugmentConfig& cfg, SeededRng& rng) {
    if (image.rank() != 3 || image.extent(2) != 1)
        throw DimensionError("augment needs an HxWx1 image, got " + image.shape_str());
    if (cfg.factor < 0.0f) throw ConfigError("augmentation factor must be >= 0");
    if (!cfg.active()) return image;

    const int h = image.extent(0), w = image.extent(1);
    const float f = cfg.factor;

    float shift_y = 0.0f, shift_x = 0.0f;
    if (cfg.shift) {
        shift_y = rng.uniform(-f * static_cast<float>(h), f * static_cast<float>(h));
        shift_x = rng.uniform(-f * static_cast<float>(w), f * static_cast<float>(w));
    }
    float theta = 0.0f;
    if (cfg.rotation)
        theta = rng.uniform(-f * kMaxRotationDeg, f * kMaxRotationDeg) * kPi / 180.0f;
    float zoom = 1.0f;
    if (cfg.zoom) zoom = rng.uniform(1.0f - f, 1.0f + f);

    std::vector<float> dy, dx;
    if (cfg.elastic) {
        const float amp = f * kElasticAmplitudePx;
        dy.resize(static_cast<std::size_t>(h) * w);
        dx.resize(dy.size());
        for (std::size_t i = 0; i < dy.size(); ++i) {
            dy[i] = rng.uniform(-amp, amp);
            dx[i] = rng.uniform(-amp, amp);
        }
        gaussian_blur(dy, h, w, kElasticSigmaPx);
        gaussian_blur(dx, h, w, kElasticSigmaPx);
    }

    // Inverse mapping: rotate/zoom about the image center, then shift, then
    // displace by the elastic field evaluated at the output pixel.
    const float cy = static_cast<float>(h - 1) / 2.0f;
    const float cx = static_cast<float>(w - 1) / 2.0f;
    const float cos_t = std::cos(theta), sin_t = std::sin(theta);
    const float inv_zoom = 1.0f / zoom;

    Tensor out({h, w, 1});
    const float* src = image.data();
    float* dst = out.data();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float py = static_cast<float>(y) - cy;
            const float px = static_cast<float>(x) - cx;
            float sy = (cos_t * py - sin_t * px) * inv_zoom + cy - shift_y;
            float sx = (sin_t * py + cos_t * px) * inv_zoom + cx - shift_x;
            if (cfg.elastic) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                sy += dy[i];
                sx += dx[i];
            }
            dst[static_cast<std::size_t>(y) * w + x] = sample_bilinear_zero(src, h, w, sy, sx);
        }
    }
    return out;
}

Sample augment(const Sample& s, const AugmentConfig& cfg, SeededRng& rng) {
    Sample out = s;
    out.image = augment_image(s.image, cfg, rng);
    return out;
}

} // namespace octcnn
