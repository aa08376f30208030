#include "doctest.h"

#include "gradcheck.hpp"
#include "octcnn/model.hpp"
#include "octcnn/optimizer.hpp"
#include "reference.hpp"

using namespace octcnn;

TEST_CASE("conv gradients match central finite differences") {
    auto r = gradcheck::check_conv(20, 101);
    CAPTURE(r.worst_comp);
    CAPTURE(r.worst_vec);
    CHECK(r.instances == 20);
    CHECK(r.worst_fwd < 1e-4);
    CHECK(r.worst_comp < 1e-3);
    CHECK(r.worst_vec < 1e-3);
}

TEST_CASE("dense gradients match central finite differences") {
    auto r = gradcheck::check_dense(20, 202);
    CHECK(r.instances == 20);
    CHECK(r.worst_fwd < 1e-4);
    CHECK(r.worst_comp < 1e-3);
    CHECK(r.worst_vec < 1e-3);
}

TEST_CASE("weighted loss d_logits matches central finite differences") {
    auto r = gradcheck::check_wce(50, 303);
    CHECK(r.worst_fwd < 1e-5);
    CHECK(r.worst_comp < 1e-4); // the optimization contract is tighter here
    CHECK(r.worst_vec < 1e-4);
}

TEST_CASE("relu gradient matches finite differences away from zero") {
    using namespace refmath;
    SeededRng rng(404);
    Tensor x = gradcheck::rand_tensor({6, 5, 2}, rng, -1.0f, 1.0f);
    Tensor cot = gradcheck::rand_tensor({6, 5, 2}, rng, -1.0f, 1.0f);
    Tensor g = relu_backward(x, cot);

    const dvec xd = to_double(x), cd = to_double(cot);
    dvec fd = fd_grad(xd, [&](const dvec& t) {
        double L = 0.0;
        const dvec y = relu(t);
        for (std::size_t i = 0; i < y.size(); ++i) L += cd[i] * y[i];
        return L;
    });
    for (std::size_t i = 0; i < fd.size(); ++i) {
        if (std::abs(xd[i]) < 5e-3) continue; // kink neighbourhood excluded
        CHECK(std::abs(fd[i] - g.data()[i]) <
              1e-3 * std::max({std::abs(fd[i]), static_cast<double>(std::abs(g.data()[i])), 0.01}));
    }
}

// End-to-end: full scratch-topology model, loss gradient w.r.t. every
// parameter against finite differences over a double-precision replica of
// the whole graph (eps 1e-5 keeps pooling and relu decisions stable).
TEST_CASE("whole-model backprop matches finite differences") {
    using namespace refmath;
    SeededRng rng(505);
    ModelSpec spec = build_scratch_cnn(12, 16, 1, 32); // filters 1,2,4,8
    ModelState state = init_state(spec, rng);
    // positive biases keep every unit alive; zero-initialized biases let
    // relu-dead regions cascade into exactly-tied pool windows, where a
    // two-sided difference quotient measures average slopes instead of the
    // one-sided subgradient the engine implements
    for (auto& p : state.params)
        for (std::size_t i = 0; i < p.bias.size(); ++i)
            p.bias.data()[i] = rng.uniform(0.02f, 0.10f);
    Tensor x = gradcheck::rand_tensor({12, 16, 1}, rng, 0.1f, 1.0f);
    const Label label = Label::glaucoma;
    const ClassWeights w{1.35f, 0.79f};

    ForwardCache cache;
    Tensor probs = model_forward(state, x, false, nullptr, &cache);
    WceResult wce = weighted_cross_entropy(probs, label, w);
    std::vector<ParamGrads> grads = model_backward(state, cache, wce.d_logits);

    // double replica of the graph, parameters packed layer by layer
    auto run_ref = [&](const std::vector<dvec>& kernels, const std::vector<dvec>& biases) {
        dvec act = to_double(x);
        int h = 12, wd = 16, c = 1;
        const int widths[4] = {1, 2, 4, 8};
        for (int layer = 0; layer < 4; ++layer) {
            act = conv2d(act, h, wd, c, kernels[static_cast<std::size_t>(layer)], 3, 3,
                         widths[layer], biases[static_cast<std::size_t>(layer)]);
            c = widths[layer];
            act = relu(act);
            if (layer < 3) {
                act = maxpool2x2(act, h, wd, c);
                h /= 2;
                wd /= 2;
            }
        }
        act = gmp(act, h, wd, c);
        act = dense(act, c, kernels[4], 2, biases[4]);
        return wce_loss(softmax(act), static_cast<int>(label),
                        static_cast<double>(w.of(label)));
    };

    std::vector<dvec> kernels, biases;
    for (const auto& p : state.params) {
        kernels.push_back(to_double(p.kernel));
        biases.push_back(to_double(p.bias));
    }
    const double base = run_ref(kernels, biases);
    CHECK(std::abs(base - static_cast<double>(wce.loss)) < 1e-4);

    const double eps = 1e-5;
    for (std::size_t layer = 0; layer < state.params.size(); ++layer) {
        refmath::GradCompare ck = compare_grads(
            grads[layer].d_kernel.data(), fd_grad(kernels[layer], [&](const dvec& t) {
                auto ks = kernels;
                ks[layer] = t;
                return run_ref(ks, biases);
            }, eps));
        CAPTURE(layer);
        CHECK(ck.vec_rel < 1e-3);

        refmath::GradCompare cb = compare_grads(
            grads[layer].d_bias.data(), fd_grad(biases[layer], [&](const dvec& t) {
                auto bs = biases;
                bs[layer] = t;
                return run_ref(kernels, bs);
            }, eps));
        CHECK(cb.vec_rel < 1e-3);
    }
}
