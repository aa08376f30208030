#include <benchmark/benchmark.h>

#include "octcnn/augment.hpp"
#include "octcnn/layers.hpp"
#include "octcnn/model.hpp"
#include "octcnn/tensor.hpp"

using namespace octcnn;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    SeededRng rng(seed);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0f, 1.0f);
    return t;
}

LayerParams conv_params(int cin, int cout, std::uint64_t seed) {
    SeededRng rng(seed);
    LayerParams p;
    p.kernel = random_init({3, 3, cin, cout}, rng, 9 * cin);
    p.bias = Tensor({cout});
    return p;
}

void BM_Conv2dForward(benchmark::State& state) {
    const int h = static_cast<int>(state.range(0));
    const int w = static_cast<int>(state.range(1));
    const int cin = static_cast<int>(state.range(2));
    const int cout = static_cast<int>(state.range(3));
    Tensor x = random_tensor({h, w, cin}, 1);
    LayerParams p = conv_params(cin, cout, 2);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, p));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h) * w * 9 * cin *
                            cout);
}
BENCHMARK(BM_Conv2dForward)
    ->Args({124, 192, 1, 8})
    ->Args({62, 96, 8, 16})
    ->Args({31, 48, 16, 32})
    ->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
    const int h = static_cast<int>(state.range(0));
    const int w = static_cast<int>(state.range(1));
    const int cin = static_cast<int>(state.range(2));
    const int cout = static_cast<int>(state.range(3));
    Tensor x = random_tensor({h, w, cin}, 3);
    LayerParams p = conv_params(cin, cout, 4);
    Tensor d_out = random_tensor({h, w, cout}, 5);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(x, p, d_out));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h) * w * 9 * cin *
                            cout * 3);
}
BENCHMARK(BM_Conv2dBackward)
    ->Args({124, 192, 1, 8})
    ->Args({62, 96, 8, 16})
    ->Unit(benchmark::kMillisecond);

void BM_Matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Tensor a = random_tensor({n, n}, 6);
    Tensor b = random_tensor({n, n}, 7);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_BilinearResize(benchmark::State& state) {
    Tensor x = random_tensor({496, 768, 1}, 8);
    for (auto _ : state) benchmark::DoNotOptimize(bilinear_resize(x, 248, 384));
}
BENCHMARK(BM_BilinearResize)->Unit(benchmark::kMillisecond);

void BM_MaxPool(benchmark::State& state) {
    Tensor x = random_tensor({124, 192, 32}, 9);
    for (auto _ : state) benchmark::DoNotOptimize(maxpool2x2_forward(x));
}
BENCHMARK(BM_MaxPool)->Unit(benchmark::kMillisecond);

void BM_Augment(benchmark::State& state) {
    Tensor x = random_tensor({124, 192, 1}, 10);
    AugmentConfig cfg;
    cfg.factor = 0.2f;
    SeededRng rng(11);
    for (auto _ : state) benchmark::DoNotOptimize(augment_image(x, cfg, rng));
    state.SetLabel("shift+rotation+zoom+elastic");
}
BENCHMARK(BM_Augment)->Unit(benchmark::kMillisecond);

void BM_ScratchForwardReduced(benchmark::State& state) {
    SeededRng rng(12);
    ModelState model = init_state(build_scratch_cnn(124, 192, 1, 4), rng);
    Tensor x = random_tensor({124, 192, 1}, 13);
    for (auto _ : state) benchmark::DoNotOptimize(model_forward(model, x, false));
}
BENCHMARK(BM_ScratchForwardReduced)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
