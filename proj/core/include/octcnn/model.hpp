#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "octcnn/layers.hpp"
#include "octcnn/tensor.hpp"

namespace octcnn {

enum class LayerKind { conv, relu, maxpool, gmp, dropout, dense, softmax };

struct LayerDesc {
    LayerKind kind;
    std::string name;      // param layers carry unique names (archive keys)
    int out_channels = 0;  // conv / dense
    float rate = 0.0f;     // dropout
    bool trainable = true; // conv / dense
    int block = 0;         // VGG block id; 0 for the scratch model
};

struct ShapeRow {
    std::string name;
    std::vector<int> shape;
};

/// Declarative sequential layer graph. Class convention throughout the
/// engine: output index 0 = glaucoma (positive class), index 1 = normal.
struct ModelSpec {
    std::string arch; // "scratch" | "vgg16" | "vgg19"
    std::array<int, 3> input_shape{}; // H, W, C
    std::vector<LayerDesc> layers;

    /// Output shape per displayed layer (input row, conv/pool/gmp/dense
    /// rows; relu/dropout/softmax do not change shape and are omitted).
    std::vector<ShapeRow> shape_table() const;

    /// Descriptors of parametered layers (conv + dense) in graph order.
    std::vector<const LayerDesc*> param_layers() const;

    std::int64_t param_count() const;
    std::int64_t trainable_param_count() const;
};

/// Four conv blocks (32, 64, 128, 256 filters, each conv ReLU-activated,
/// first three followed by 2x2 max-pooling), then global max pooling and a
/// 2-way softmax dense head. No batch normalisation or dropout.
/// filter_div shrinks every filter count (and the head input) for
/// desk-scale runs. Spatial extents must be >= 8 so that each of the three
/// pooling stages sees at least 2 rows/columns; odd extents are floored by
/// the pools (124 -> 62 -> 31 -> 15).
ModelSpec build_scratch_cnn(int height, int width, int channels = 1, int filter_div = 1);

/// Canonical VGG16/VGG19 conv base (channel widths 64,128,256,512,512;
/// 2,2,3,3,3 convs per block for VGG16 and 2,2,4,4,4 for VGG19, each block
/// closed by a 2x2 max-pool), with the ImageNet fully-connected head
/// replaced by GMP -> dropout(0.4) -> 2-way softmax dense. Convs in blocks
/// 1..freeze_through_block are marked non-trainable.
ModelSpec build_vgg(int variant, int height, int width, int filter_div = 1,
                    int freeze_through_block = 3);

/// Parameter values for a ModelSpec, aligned with spec.param_layers().
struct ModelState {
    ModelSpec spec;
    std::vector<LayerParams> params;

    const LayerParams& param_by_name(const std::string& name) const;
};

/// Fresh state: kernels from random_init (fan_in = receptive volume),
/// biases zero. Draw order is the param-layer order, kernel before bias.
ModelState init_state(const ModelSpec& spec, SeededRng& rng);

/// Activations retained by a forward pass, for backprop and CAM.
struct ForwardCache {
    std::vector<Tensor> acts; // acts[0] = input, acts[i+1] = output of layer i
    std::vector<PoolResult> pools;
    std::vector<GmpResult> gmps;
    std::vector<DropoutResult> dropouts;

    /// Feature maps entering the GMP layer (the conv base output).
    const Tensor& final_conv_features() const;

  private:
    friend Tensor model_forward(const ModelState&, const Tensor&, bool, SeededRng*,
                                ForwardCache*);
    int gmp_input_index_ = -1;
};

/// Runs the graph; returns class probabilities (rank-1 [2]).
/// Evaluation mode (training=false) is deterministic and consumes no rng.
Tensor model_forward(const ModelState& state, const Tensor& x, bool training,
                     SeededRng* rng = nullptr, ForwardCache* cache = nullptr);

/// Per-param-layer gradients, aligned with spec.param_layers().
struct ParamGrads {
    Tensor d_kernel;
    Tensor d_bias;
};

/// Backprop from d_logits (the gradient at the dense-layer output, i.e.
/// pre-softmax; the softmax layer itself is folded into the loss gradient).
std::vector<ParamGrads> model_backward(const ModelState& state, const ForwardCache& cache,
                                       const Tensor& d_logits);

void accumulate_grads(std::vector<ParamGrads>& acc, const std::vector<ParamGrads>& g);
void scale_grads(std::vector<ParamGrads>& grads, float s);

} // namespace octcnn
