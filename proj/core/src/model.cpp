#include "octcnn/model.hpp"

#include <algorithm>
#include <cctype>

#include "octcnn/error.hpp"

namespace octcnn {

namespace {

int pooled(int e) { return e / 2; }

bool has_params(const LayerDesc& d) {
    return d.kind == LayerKind::conv || d.kind == LayerKind::dense;
}

} // namespace

std::vector<const LayerDesc*> ModelSpec::param_layers() const {
    std::vector<const LayerDesc*> out;
    for (const auto& d : layers)
        if (has_params(d)) out.push_back(&d);
    return out;
}

std::vector<ShapeRow> ModelSpec::shape_table() const {
    std::vector<ShapeRow> rows;
    rows.push_back({"Input", {input_shape[0], input_shape[1], input_shape[2]}});
    int h = input_shape[0], w = input_shape[1], c = input_shape[2];
    for (const auto& d : layers) {
        switch (d.kind) {
        case LayerKind::conv: {
            c = d.out_channels;
            std::string display = d.name;
            if (!display.empty()) display[0] = static_cast<char>(std::toupper(display[0]));
            rows.push_back({std::move(display), {h, w, c}});
            break;
        }
        case LayerKind::maxpool:
            h = pooled(h);
            w = pooled(w);
            rows.push_back({"MaxPooling", {h, w, c}});
            break;
        case LayerKind::gmp:
            rows.push_back({"MaxGlobalPool", {c}});
            break;
        case LayerKind::dense:
            c = d.out_channels;
            rows.push_back({"Dense", {c}});
            break;
        case LayerKind::relu:
        case LayerKind::dropout:
        case LayerKind::softmax:
            break;
        }
    }
    return rows;
}

std::int64_t ModelSpec::param_count() const {
    std::int64_t n = 0;
    int h = input_shape[0], w = input_shape[1], c = input_shape[2];
    for (const auto& d : layers) {
        switch (d.kind) {
        case LayerKind::conv:
            n += (9LL * c + 1) * d.out_channels;
            c = d.out_channels;
            break;
        case LayerKind::maxpool:
            h = pooled(h);
            w = pooled(w);
            break;
        case LayerKind::dense:
            n += (static_cast<std::int64_t>(c) + 1) * d.out_channels;
            c = d.out_channels;
            break;
        default:
            break;
        }
    }
    return n;
}

std::int64_t ModelSpec::trainable_param_count() const {
    std::int64_t n = 0;
    int c = input_shape[2];
    for (const auto& d : layers) {
        switch (d.kind) {
        case LayerKind::conv:
            if (d.trainable) n += (9LL * c + 1) * d.out_channels;
            c = d.out_channels;
            break;
        case LayerKind::dense:
            if (d.trainable) n += (static_cast<std::int64_t>(c) + 1) * d.out_channels;
            c = d.out_channels;
            break;
        default:
            break;
        }
    }
    return n;
}

ModelSpec build_scratch_cnn(int height, int width, int channels, int filter_div) {
    if (height < 8 || width < 8)
        throw ConfigError("scratch model needs input extents >= 8 to survive three pooling "
                          "stages, got [" +
                          std::to_string(height) + "x" + std::to_string(width) + "]");
    if (channels < 1) throw ConfigError("scratch model needs >= 1 input channel");
    if (filter_div < 1) throw ConfigError("filter_div must be >= 1");

    const int f1 = std::max(1, 32 / filter_div);
    const int f2 = std::max(1, 64 / filter_div);
    const int f3 = std::max(1, 128 / filter_div);
    const int f4 = std::max(1, 256 / filter_div);

    ModelSpec spec;
    spec.arch = "scratch";
    spec.input_shape = {height, width, channels};
    spec.layers = {
        {LayerKind::conv, "conv1_1", f1}, {LayerKind::relu, "", 0},
        {LayerKind::maxpool, "", 0},      {LayerKind::conv, "conv2_1", f2},
        {LayerKind::relu, "", 0},         {LayerKind::maxpool, "", 0},
        {LayerKind::conv, "conv3_1", f3}, {LayerKind::relu, "", 0},
        {LayerKind::maxpool, "", 0},      {LayerKind::conv, "conv4_1", f4},
        {LayerKind::relu, "", 0},         {LayerKind::gmp, "", 0},
        {LayerKind::dense, "dense", 2},   {LayerKind::softmax, "", 0},
    };
    return spec;
}

ModelSpec build_vgg(int variant, int height, int width, int filter_div,
                    int freeze_through_block) {
    if (variant != 16 && variant != 19)
        throw ConfigError("unknown VGG variant " + std::to_string(variant) +
                          " (supported: 16, 19)");
    if (height < 32 || width < 32)
        throw ConfigError("VGG needs input extents >= 32 to survive five pooling stages, "
                          "got [" +
                          std::to_string(height) + "x" + std::to_string(width) + "]");
    if (filter_div < 1) throw ConfigError("filter_div must be >= 1");

    const int convs_per_block[5] = {2, 2, variant == 16 ? 3 : 4, variant == 16 ? 3 : 4,
                                    variant == 16 ? 3 : 4};
    const int widths[5] = {std::max(1, 64 / filter_div), std::max(1, 128 / filter_div),
                           std::max(1, 256 / filter_div), std::max(1, 512 / filter_div),
                           std::max(1, 512 / filter_div)};

    ModelSpec spec;
    spec.arch = variant == 16 ? "vgg16" : "vgg19";
    spec.input_shape = {height, width, 3};
    for (int b = 0; b < 5; ++b) {
        for (int i = 0; i < convs_per_block[b]; ++i) {
            LayerDesc conv{LayerKind::conv,
                           "block" + std::to_string(b + 1) + "_conv" + std::to_string(i + 1),
                           widths[b]};
            conv.trainable = b + 1 > freeze_through_block;
            conv.block = b + 1;
            spec.layers.push_back(conv);
            spec.layers.push_back({LayerKind::relu, "", 0});
        }
        spec.layers.push_back({LayerKind::maxpool, "", 0});
    }
    spec.layers.push_back({LayerKind::gmp, "", 0});
    LayerDesc drop{LayerKind::dropout, "", 0};
    drop.rate = 0.4f;
    spec.layers.push_back(drop);
    spec.layers.push_back({LayerKind::dense, "dense", 2});
    spec.layers.push_back({LayerKind::softmax, "", 0});
    return spec;
}

const LayerParams& ModelState::param_by_name(const std::string& name) const {
    auto descs = spec.param_layers();
    for (std::size_t i = 0; i < descs.size(); ++i)
        if (descs[i]->name == name) return params[i];
    throw ConfigError("no parametered layer named '" + name + "' in " + spec.arch);
}

ModelState init_state(const ModelSpec& spec, SeededRng& rng) {
    ModelState state;
    state.spec = spec;
    int c = spec.input_shape[2];
    for (const auto& d : spec.layers) {
        if (d.kind == LayerKind::conv) {
            LayerParams p;
            p.kernel = random_init({3, 3, c, d.out_channels}, rng, 9 * c);
            p.bias = Tensor({d.out_channels});
            state.params.push_back(std::move(p));
            c = d.out_channels;
        } else if (d.kind == LayerKind::dense) {
            LayerParams p;
            p.kernel = random_init({c, d.out_channels}, rng, c);
            p.bias = Tensor({d.out_channels});
            state.params.push_back(std::move(p));
            c = d.out_channels;
        }
    }
    return state;
}

const Tensor& ForwardCache::final_conv_features() const {
    if (gmp_input_index_ < 0)
        throw ConfigError("forward cache holds no GMP input (model has no GMP head?)");
    return acts[static_cast<std::size_t>(gmp_input_index_)];
}

Tensor model_forward(const ModelState& state, const Tensor& x, bool training, SeededRng* rng,
                     ForwardCache* cache) {
    const auto& in = state.spec.input_shape;
    if (x.rank() != 3 || x.extent(0) != in[0] || x.extent(1) != in[1] || x.extent(2) != in[2])
        throw DimensionError("model input shape " + x.shape_str() + " does not match spec [" +
                             std::to_string(in[0]) + "x" + std::to_string(in[1]) + "x" +
                             std::to_string(in[2]) + "]");

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.acts.clear();
    c.pools.clear();
    c.gmps.clear();
    c.dropouts.clear();
    c.acts.push_back(x);

    std::size_t param_idx = 0;
    Tensor cur = x;
    for (const auto& d : state.spec.layers) {
        switch (d.kind) {
        case LayerKind::conv:
            cur = conv2d_forward(cur, state.params[param_idx++]);
            break;
        case LayerKind::relu:
            cur = relu(cur);
            break;
        case LayerKind::maxpool: {
            PoolResult r = maxpool2x2_forward(cur);
            cur = r.y;
            c.pools.push_back(std::move(r));
            break;
        }
        case LayerKind::gmp: {
            c.gmp_input_index_ = static_cast<int>(c.acts.size()) - 1;
            GmpResult r = global_max_pool(cur);
            cur = r.y;
            c.gmps.push_back(std::move(r));
            break;
        }
        case LayerKind::dropout: {
            if (training && d.rate > 0.0f && rng == nullptr)
                throw ConfigError("training-mode dropout needs an rng");
            SeededRng dummy(0);
            DropoutResult r = dropout_forward(cur, d.rate, rng ? *rng : dummy, training);
            cur = r.y;
            c.dropouts.push_back(std::move(r));
            break;
        }
        case LayerKind::dense:
            cur = dense_forward(cur, state.params[param_idx++]);
            break;
        case LayerKind::softmax:
            cur = softmax(cur);
            break;
        }
        c.acts.push_back(cur);
    }
    return cur;
}

std::vector<ParamGrads> model_backward(const ModelState& state, const ForwardCache& cache,
                                       const Tensor& d_logits) {
    const auto& layers = state.spec.layers;
    if (layers.empty() || layers.back().kind != LayerKind::softmax)
        throw ConfigError("model_backward expects a softmax-terminated graph");
    if (cache.acts.size() != layers.size() + 1)
        throw ConfigError("forward cache does not match the model graph");

    std::vector<ParamGrads> grads(state.params.size());
    std::size_t param_idx = state.params.size();
    std::size_t pool_idx = cache.pools.size();
    std::size_t gmp_idx = cache.gmps.size();
    std::size_t drop_idx = cache.dropouts.size();

    // Start below the softmax layer: d_logits is already the gradient at
    // the dense output.
    Tensor g = d_logits;
    for (std::size_t li = layers.size() - 1; li-- > 0;) {
        const auto& d = layers[li];
        const Tensor& input = cache.acts[li];
        switch (d.kind) {
        case LayerKind::conv: {
            --param_idx;
            LayerGrads lg =
                conv2d_backward(input, state.params[param_idx], g, param_idx != 0);
            grads[param_idx].d_kernel = std::move(lg.d_kernel);
            grads[param_idx].d_bias = std::move(lg.d_bias);
            if (param_idx == 0) return grads; // first layer: input grad not needed
            g = std::move(lg.d_input);
            break;
        }
        case LayerKind::relu:
            g = relu_backward(input, g);
            break;
        case LayerKind::maxpool:
            g = maxpool2x2_backward(input.shape(), cache.pools[--pool_idx], g);
            break;
        case LayerKind::gmp:
            g = global_max_pool_backward(input.shape(), cache.gmps[--gmp_idx], g);
            break;
        case LayerKind::dropout:
            g = dropout_backward(cache.dropouts[--drop_idx], g);
            break;
        case LayerKind::dense: {
            --param_idx;
            LayerGrads lg = dense_backward(input, state.params[param_idx], g);
            grads[param_idx].d_kernel = std::move(lg.d_kernel);
            grads[param_idx].d_bias = std::move(lg.d_bias);
            g = std::move(lg.d_input);
            break;
        }
        case LayerKind::softmax:
            throw ConfigError("unexpected softmax layer inside the graph");
        }
    }
    return grads;
}

void accumulate_grads(std::vector<ParamGrads>& acc, const std::vector<ParamGrads>& g) {
    if (acc.empty()) {
        acc = g;
        return;
    }
    if (acc.size() != g.size()) throw DimensionError("gradient lists differ in length");
    for (std::size_t i = 0; i < acc.size(); ++i) {
        float* ak = acc[i].d_kernel.data();
        const float* gk = g[i].d_kernel.data();
        for (std::size_t j = 0; j < acc[i].d_kernel.size(); ++j) ak[j] += gk[j];
        float* ab = acc[i].d_bias.data();
        const float* gb = g[i].d_bias.data();
        for (std::size_t j = 0; j < acc[i].d_bias.size(); ++j) ab[j] += gb[j];
    }
}

void scale_grads(std::vector<ParamGrads>& grads, float s) {
    for (auto& g : grads) {
        float* k = g.d_kernel.data();
        for (std::size_t j = 0; j < g.d_kernel.size(); ++j) k[j] *= s;
        float* b = g.d_bias.data();
        for (std::size_t j = 0; j < g.d_bias.size(); ++j) b[j] *= s;
    }
}

} // namespace octcnn
