#include "octcnn/optimizer.hpp"

#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numeric>
#include <thread>

#include "octcnn/error.hpp"

namespace octcnn {

ClassWeights compute_class_weights(int n_glaucoma, int n_normal) {
    if (n_glaucoma < 1 || n_normal < 1)
        throw ConfigError("class weights need at least one sample per class, got glaucoma=" +
                          std::to_string(n_glaucoma) + " normal=" + std::to_string(n_normal));
    const float total = static_cast<float>(n_glaucoma + n_normal);
    return {total / (2.0f * static_cast<float>(n_glaucoma)),
            total / (2.0f * static_cast<float>(n_normal))};
}

WceResult weighted_cross_entropy(const Tensor& probs, Label label, const ClassWeights& w) {
    if (probs.rank() != 1 || probs.extent(0) != 2)
        throw DimensionError("weighted_cross_entropy needs a probability 2-vector, got " +
                             probs.shape_str());
    const int li = static_cast<int>(label);
    const float wl = w.of(label);
    const float p = probs(li) > 1e-12f ? probs(li) : 1e-12f;
    WceResult r;
    r.loss = -wl * std::log(p);
    r.d_logits = probs;
    r.d_logits(li) -= 1.0f;
    r.d_logits(0) *= wl;
    r.d_logits(1) *= wl;
    return r;
}

AdadeltaState make_adadelta(const ModelState& state, float lr, float rho, float eps) {
    AdadeltaState opt;
    opt.lr = lr;
    opt.rho = rho;
    opt.eps = eps;
    auto descs = state.spec.param_layers();
    opt.slots.resize(descs.size());
    for (std::size_t i = 0; i < descs.size(); ++i) {
        if (!descs[i]->trainable) continue;
        AdadeltaState::Slot s;
        s.eg2_kernel = Tensor(state.params[i].kernel.shape());
        s.edx2_kernel = Tensor(state.params[i].kernel.shape());
        s.eg2_bias = Tensor(state.params[i].bias.shape());
        s.edx2_bias = Tensor(state.params[i].bias.shape());
        opt.slots[i] = std::move(s);
    }
    return opt;
}

namespace {

void adadelta_update(float lr, float rho, float eps, Tensor& param, const Tensor& grad,
                     Tensor& eg2, Tensor& edx2) {
    if (!param.same_shape(grad))
        throw DimensionError("adadelta gradient shape " + grad.shape_str() +
                             " does not match parameter " + param.shape_str());
    float* p = param.data();
    const float* g = grad.data();
    float* a = eg2.data();
    float* d = edx2.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        a[i] = rho * a[i] + (1.0f - rho) * g[i] * g[i];
        const float raw = -std::sqrt(d[i] + eps) / std::sqrt(a[i] + eps) * g[i];
        p[i] += lr * raw;
        d[i] = rho * d[i] + (1.0f - rho) * raw * raw;
    }
}

} // namespace

void adadelta_step(AdadeltaState& opt, ModelState& state, const std::vector<ParamGrads>& grads) {
    if (grads.size() != state.params.size())
        throw DimensionError("gradient list length does not match the model");
    for (std::size_t i = 0; i < state.params.size(); ++i) {
        if (!opt.slots[i]) continue; // frozen layer
        auto& s = *opt.slots[i];
        adadelta_update(opt.lr, opt.rho, opt.eps, state.params[i].kernel, grads[i].d_kernel,
                        s.eg2_kernel, s.edx2_kernel);
        adadelta_update(opt.lr, opt.rho, opt.eps, state.params[i].bias, grads[i].d_bias,
                        s.eg2_bias, s.edx2_bias);
    }
}

Tensor prepare_input(const Tensor& image, InputPrep prep) {
    return prep == InputPrep::finetune ? preprocess_for_finetune(image) : image;
}

namespace {

struct SampleResult {
    std::vector<ParamGrads> grads;
    float loss = 0.0f;
};

SampleResult process_sample(const ModelState& state, const Sample& s, const TrainConfig& cfg,
                            const ClassWeights& weights, int epoch) {
    // Independent per-(seed, sample, epoch) stream: augmentation and
    // dropout draws do not depend on batch composition or thread count.
    SeededRng srng(mix_seed(mix_seed(cfg.seed, hash_string(s.sample_id)),
                            static_cast<std::uint64_t>(epoch)));
    Tensor img = s.image;
    if (cfg.augment.active()) img = augment_image(img, cfg.augment, srng);
    img = prepare_input(img, cfg.prep);

    ForwardCache cache;
    Tensor probs = model_forward(state, img, /*training=*/true, &srng, &cache);
    WceResult wce = weighted_cross_entropy(probs, s.label, weights);
    SampleResult r;
    r.loss = wce.loss;
    r.grads = model_backward(state, cache, wce.d_logits);
    return r;
}

/// Runs fn(i) for i in [0,n) on `threads` workers and merges the results
/// strictly in index order, so the reduction is bit-identical to the
/// serial run for any thread count.
template <typename Fn, typename Merge>
void ordered_parallel(int n, int threads, Fn fn, Merge merge) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) merge(fn(i));
        return;
    }
    std::mutex m;
    std::condition_variable cv;
    int next_claim = 0;
    int next_merge = 0;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            int idx;
            {
                std::lock_guard<std::mutex> lock(m);
                if (failure || next_claim >= n) return;
                idx = next_claim++;
            }
            try {
                auto result = fn(idx);
                std::unique_lock<std::mutex> lock(m);
                cv.wait(lock, [&] { return failure || next_merge == idx; });
                if (failure) return;
                merge(std::move(result));
                ++next_merge;
                cv.notify_all();
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!failure) failure = std::current_exception();
                cv.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const int nw = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(nw));
    for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace

std::vector<EpochStat> fit(ModelState& state, const Dataset& train, const TrainConfig& config) {
    if (train.samples.empty()) throw ConfigError("fit: training set is empty");
    if (config.epochs < 1 || config.batch_size < 1)
        throw ConfigError("fit: epochs and batch_size must be >= 1");
    const int n_g = train.count(Label::glaucoma);
    const int n_n = train.count(Label::normal);
    if (n_g == 0 || n_n == 0)
        throw ConfigError("fit: training set contains a single class; class weights are "
                          "undefined (glaucoma=" +
                          std::to_string(n_g) + ", normal=" + std::to_string(n_n) + ")");
    const ClassWeights weights =
        config.class_weights ? *config.class_weights : compute_class_weights(n_g, n_n);

    AdadeltaState opt = make_adadelta(state, config.lr);
    SeededRng shuffle_rng(mix_seed(config.seed, 0x5a5a5a5aULL));

    std::vector<int> order(train.samples.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStat> trace;
    trace.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const int bsz = static_cast<int>(
                std::min(order.size() - start, static_cast<std::size_t>(config.batch_size)));

            std::vector<ParamGrads> batch_grads;
            double batch_loss = 0.0;
            ordered_parallel(
                bsz, config.threads,
                [&](int bi) {
                    const Sample& s = train.samples[static_cast<std::size_t>(
                        order[start + static_cast<std::size_t>(bi)])];
                    return process_sample(state, s, config, weights, epoch);
                },
                [&](SampleResult r) {
                    batch_loss += r.loss;
                    accumulate_grads(batch_grads, r.grads);
                });

            scale_grads(batch_grads, 1.0f / static_cast<float>(bsz));
            adadelta_step(opt, state, batch_grads);
            epoch_loss += batch_loss;
        }
        trace.push_back(
            {epoch, static_cast<float>(epoch_loss / static_cast<double>(order.size()))});
    }
    return trace;
}

} // namespace octcnn
