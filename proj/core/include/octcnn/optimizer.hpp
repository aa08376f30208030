#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "octcnn/augment.hpp"
#include "octcnn/dataset.hpp"
#include "octcnn/model.hpp"

namespace octcnn {

struct ClassWeights {
    float glaucoma = 1.0f;
    float normal = 1.0f;

    float of(Label l) const { return l == Label::glaucoma ? glaucoma : normal; }
};

/// Balanced inverse-frequency weights: w_c = N_total / (2 * n_c).
ClassWeights compute_class_weights(int n_glaucoma, int n_normal);

struct WceResult {
    float loss = 0.0f;
    Tensor d_logits; // gradient w.r.t. the pre-softmax logits
};

/// loss = -w_label * ln(p[label]); p[label] is clamped at 1e-12 before the
/// log. d_logits = w_label * (p - onehot(label)).
WceResult weighted_cross_entropy(const Tensor& probs, Label label, const ClassWeights& w);

/// Adadelta with decayed accumulators of squared gradients and squared raw
/// updates. lr is a plain multiplier on the classic parameter-free update:
///   Eg2  <- rho*Eg2 + (1-rho)*g^2
///   d_raw = -sqrt(Edx2 + eps) / sqrt(Eg2 + eps) * g
///   param += lr * d_raw
///   Edx2 <- rho*Edx2 + (1-rho)*d_raw^2
/// Accumulating d_raw (not lr*d_raw) keeps the accumulators scale-free.
/// Accumulators exist only for trainable layers; frozen layers are never
/// touched.
struct AdadeltaState {
    float lr = 0.05f;
    float rho = 0.95f;
    float eps = 1e-7f;

    struct Slot {
        Tensor eg2_kernel, edx2_kernel;
        Tensor eg2_bias, edx2_bias;
    };
    std::vector<std::optional<Slot>> slots; // aligned with param layers
};

AdadeltaState make_adadelta(const ModelState& state, float lr, float rho = 0.95f,
                            float eps = 1e-7f);

void adadelta_step(AdadeltaState& opt, ModelState& state,
                   const std::vector<ParamGrads>& grads);

enum class InputPrep { raw, finetune };

struct TrainConfig {
    int epochs = 150;
    int batch_size = 16;
    float lr = 0.05f;
    std::optional<ClassWeights> class_weights; // computed from data when unset
    AugmentConfig augment;
    InputPrep prep = InputPrep::raw;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct EpochStat {
    int epoch = 0;      // 1-based
    float mean_loss = 0; // mean per-sample weighted loss over the epoch
};

/// Full training loop: per epoch, shuffle sample order with the run rng,
/// then for each batch average per-sample gradients (samples reduced in
/// batch order regardless of thread count) and apply one Adadelta step.
/// Per-sample augmentation/dropout randomness comes from a stream derived
/// from (seed, sample_id, epoch), so results are bit-identical for a given
/// seed and independent of config.threads.
std::vector<EpochStat> fit(ModelState& state, const Dataset& train, const TrainConfig& config);

/// Model-ready input for one sample under the given preparation mode.
Tensor prepare_input(const Tensor& image, InputPrep prep);

} // namespace octcnn
