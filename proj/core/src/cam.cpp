#include "octcnn/cam.hpp"

#include <algorithm>
#include <cmath>

#include "octcnn/error.hpp"
#include "octcnn/image_io.hpp"

namespace octcnn {

namespace {

/// The dense head's weight column for a class, validated against the
/// GMP -> (dropout) -> dense -> softmax structure.
const LayerParams& head_params(const ModelState& state) {
    const auto& layers = state.spec.layers;
    int gmp_pos = -1, dense_pos = -1;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::gmp) gmp_pos = static_cast<int>(i);
        if (layers[i].kind == LayerKind::dense) dense_pos = static_cast<int>(i);
    }
    bool ok = gmp_pos >= 0 && dense_pos > gmp_pos &&
              layers.back().kind == LayerKind::softmax &&
              dense_pos == static_cast<int>(layers.size()) - 2;
    if (ok) {
        for (int i = gmp_pos + 1; i < dense_pos; ++i)
            if (layers[static_cast<std::size_t>(i)].kind != LayerKind::dropout) ok = false;
    }
    if (!ok)
        throw ConfigError("compute_cam supports only models with a GMP -> (dropout) -> "
                          "dense-softmax head, got arch '" +
                          state.spec.arch + "'");
    return state.params.back();
}

} // namespace

CamMap compute_cam(const ModelState& state, const Tensor& x, Label target) {
    const LayerParams& head = head_params(state);

    ForwardCache cache;
    model_forward(state, x, /*training=*/false, nullptr, &cache);
    const Tensor& features = cache.final_conv_features();
    const int fh = features.extent(0), fw = features.extent(1), fc = features.extent(2);
    const int cls = static_cast<int>(target);

    Tensor raw({fh, fw, 1});
    const float* fp = features.data();
    const float* wp = head.kernel.data(); // [fc x 2]
    float* rp = raw.data();
    for (std::size_t pos = 0; pos < static_cast<std::size_t>(fh) * fw; ++pos) {
        float acc = 0.0f;
        const float* frow = fp + pos * fc;
        for (int k = 0; k < fc; ++k) acc += wp[2 * k + cls] * frow[k];
        rp[pos] = acc;
    }

    Tensor up = bilinear_resize(raw, x.extent(0), x.extent(1));

    CamMap cam;
    cam.target = target;
    float lo = up.data()[0], hi = up.data()[0];
    for (std::size_t i = 0; i < up.size(); ++i) {
        lo = std::min(lo, up.data()[i]);
        hi = std::max(hi, up.data()[i]);
    }
    if (hi - lo <= 0.0f) {
        cam.map = Tensor({x.extent(0), x.extent(1), 1}); // zeros
        cam.constant = true;
        return cam;
    }
    const float scale = 1.0f / (hi - lo);
    float* p = up.data();
    for (std::size_t i = 0; i < up.size(); ++i) p[i] = (p[i] - lo) * scale;
    cam.map = std::move(up);
    return cam;
}

void heat_ramp(float v, float& r, float& g, float& b) {
    v = std::clamp(v, 0.0f, 1.0f);
    r = std::clamp(3.0f * v, 0.0f, 1.0f);
    g = std::clamp(3.0f * v - 1.0f, 0.0f, 1.0f);
    b = std::clamp(3.0f * v - 2.0f, 0.0f, 1.0f);
}

void export_heatmap(const CamMap& cam, const Tensor& base_image,
                    const std::filesystem::path& raw_out,
                    const std::filesystem::path& overlay_out) {
    if (!cam.map.same_shape(base_image))
        throw DimensionError("heat map extents " + cam.map.shape_str() +
                             " do not match the base image " + base_image.shape_str());

    const int h = cam.map.extent(0), w = cam.map.extent(1);
    Tensor overlay({h, w, 3});
    const float* cp = cam.map.data();
    const float* bp = base_image.data();
    float* op = overlay.data();
    for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
        float r, g, b;
        heat_ramp(cp[i], r, g, b);
        op[3 * i] = 0.5f * bp[i] + 0.5f * r;
        op[3 * i + 1] = 0.5f * bp[i] + 0.5f * g;
        op[3 * i + 2] = 0.5f * bp[i] + 0.5f * b;
    }

    auto is_netpbm = [](const std::filesystem::path& p) {
        const auto ext = p.extension().string();
        return ext == ".pgm" || ext == ".ppm";
    };
    if (is_netpbm(raw_out))
        write_pgm(raw_out, cam.map);
    else
        write_png_gray(raw_out, cam.map);
    if (is_netpbm(overlay_out))
        write_ppm(overlay_out, overlay);
    else
        write_png_rgb(overlay_out, overlay);
}

} // namespace octcnn
