#include "doctest.h"

#include <cmath>
#include <numeric>

#include "octcnn/error.hpp"
#include "octcnn/layers.hpp"

using namespace octcnn;

namespace {

LayerParams conv_params(int cin, int cout, float kval, float bval) {
    LayerParams p;
    p.kernel = Tensor({3, 3, cin, cout}, kval);
    p.bias = Tensor({cout}, bval);
    return p;
}

} // namespace

TEST_CASE("conv 1x1 identity kernel passes the input through") {
    Tensor x = Tensor::from_data({1, 1, 1}, {5.0f});
    LayerParams p;
    p.kernel = Tensor::from_data({1, 1, 1, 1}, {1.0f});
    p.bias = Tensor({1});
    Tensor y = conv2d_forward(x, p);
    CHECK(y(0, 0, 0) == 5.0f);
}

TEST_CASE("conv all-ones 3x3 counts the zero-padded neighbourhood") {
    Tensor x({3, 3, 1}, 1.0f);
    LayerParams p = conv_params(1, 1, 1.0f, 0.0f);
    Tensor y = conv2d_forward(x, p);
    CHECK(y(1, 1, 0) == 9.0f); // center
    CHECK(y(0, 1, 0) == 6.0f); // edge middle
    CHECK(y(0, 0, 0) == 4.0f); // corner
}

TEST_CASE("conv shape follows the filter count") {
    Tensor x({16, 24, 1}, 0.5f);
    LayerParams p = conv_params(1, 32, 0.01f, 0.0f);
    Tensor y = conv2d_forward(x, p);
    CHECK(y.shape() == std::vector<int>{16, 24, 32});
}

TEST_CASE("conv rejects channel mismatch") {
    Tensor x({4, 4, 2});
    LayerParams p = conv_params(3, 1, 0.0f, 0.0f);
    CHECK_THROWS_AS(conv2d_forward(x, p), DimensionError);
}

TEST_CASE("conv backward zero cotangent gives zero grads") {
    Tensor x({4, 5, 2}, 0.3f);
    LayerParams p = conv_params(2, 3, 0.1f, 0.1f);
    Tensor d_out({4, 5, 3});
    LayerGrads g = conv2d_backward(x, p, d_out);
    for (std::size_t i = 0; i < g.d_kernel.size(); ++i) CHECK(g.d_kernel.data()[i] == 0.0f);
    for (std::size_t i = 0; i < g.d_bias.size(); ++i) CHECK(g.d_bias.data()[i] == 0.0f);
    for (std::size_t i = 0; i < g.d_input.size(); ++i) CHECK(g.d_input.data()[i] == 0.0f);
}

TEST_CASE("conv backward 1x1 scalar chain rule") {
    Tensor x = Tensor::from_data({1, 1, 1}, {3.0f});
    LayerParams p;
    p.kernel = Tensor::from_data({1, 1, 1, 1}, {2.0f});
    p.bias = Tensor({1});
    Tensor d_out = Tensor::from_data({1, 1, 1}, {7.0f});
    LayerGrads g = conv2d_backward(x, p, d_out);
    CHECK(g.d_kernel(0, 0, 0, 0) == 21.0f); // x * d_out
    CHECK(g.d_input(0, 0, 0) == 14.0f);     // k * d_out
    CHECK(g.d_bias(0) == 7.0f);
}

TEST_CASE("conv backward rejects mismatched cotangent") {
    Tensor x({4, 4, 1});
    LayerParams p = conv_params(1, 2, 0.0f, 0.0f);
    Tensor d_out({4, 4, 3});
    CHECK_THROWS_AS(conv2d_backward(x, p, d_out), DimensionError);
}

TEST_CASE("relu clamps negatives and keeps positives") {
    Tensor x = Tensor::from_data({3}, {-1.0f, 0.0f, 2.0f});
    Tensor y = relu(x);
    CHECK(y(0) == 0.0f);
    CHECK(y(1) == 0.0f);
    CHECK(y(2) == 2.0f);
}

TEST_CASE("relu gradient mask blocks x <= 0") {
    Tensor x = Tensor::from_data({3}, {-1.0f, 0.0f, 2.0f});
    Tensor d = Tensor::from_data({3}, {1.0f, 1.0f, 1.0f});
    Tensor g = relu_backward(x, d);
    CHECK(g(0) == 0.0f);
    CHECK(g(1) == 0.0f); // subgradient at 0 is 0
    CHECK(g(2) == 1.0f);
}

TEST_CASE("maxpool single window") {
    Tensor x = Tensor::from_data({2, 2, 1}, {1, 2, 3, 4});
    PoolResult r = maxpool2x2_forward(x);
    CHECK(r.y.shape() == std::vector<int>{1, 1, 1});
    CHECK(r.y(0, 0, 0) == 4.0f);
}

TEST_CASE("maxpool halves the scan extents") {
    Tensor x({496, 768, 2}, 1.0f);
    PoolResult r = maxpool2x2_forward(x);
    CHECK(r.y.shape() == std::vector<int>{248, 384, 2});
}

TEST_CASE("maxpool keeps constants and drops odd trailing extents") {
    Tensor x({5, 7, 1}, 3.5f);
    PoolResult r = maxpool2x2_forward(x);
    CHECK(r.y.shape() == std::vector<int>{2, 3, 1});
    for (std::size_t i = 0; i < r.y.size(); ++i) CHECK(r.y.data()[i] == 3.5f);
}

TEST_CASE("maxpool rejects tiny inputs") {
    Tensor x({1, 4, 1});
    CHECK_THROWS_AS(maxpool2x2_forward(x), DimensionError);
}

TEST_CASE("maxpool backward routes all mass to recorded argmaxes") {
    Tensor x = Tensor::from_data({2, 4, 1}, {1, 9, 2, 3, 4, 5, 6, 7});
    PoolResult r = maxpool2x2_forward(x);
    Tensor d_out = Tensor::from_data({1, 2, 1}, {10.0f, 20.0f});
    Tensor g = maxpool2x2_backward(x.shape(), r, d_out);
    const float total_in = 30.0f;
    float total_routed = 0.0f;
    for (std::size_t i = 0; i < g.size(); ++i) total_routed += g.data()[i];
    CHECK(total_routed == total_in);
    CHECK(g(0, 1, 0) == 10.0f); // 9 is the first-window max
    CHECK(g(1, 3, 0) == 20.0f); // 7 is the second-window max
}

TEST_CASE("maxpool tie breaks to the first occurrence in row-major order") {
    Tensor x({2, 2, 1}, 1.0f); // all equal
    PoolResult r = maxpool2x2_forward(x);
    CHECK(r.argmax[0] == 0);
}

TEST_CASE("global max pool over constant channels") {
    Tensor x({4, 6, 3});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j)
            for (int c = 0; c < 3; ++c) x(i, j, c) = static_cast<float>(c) + 0.5f;
    GmpResult r = global_max_pool(x);
    CHECK(r.y.shape() == std::vector<int>{3});
    for (int c = 0; c < 3; ++c) CHECK(r.y(c) == static_cast<float>(c) + 0.5f);
}

TEST_CASE("global max pool output length equals the channel count") {
    Tensor x({62, 96, 256}, 0.0f);
    GmpResult r = global_max_pool(x);
    CHECK(r.y.shape() == std::vector<int>{256});
}

TEST_CASE("global max pool routes gradient to the peak cell") {
    Tensor x({3, 3, 1});
    x(1, 2, 0) = 7.0f;
    GmpResult r = global_max_pool(x);
    CHECK(r.y(0) == 7.0f);
    Tensor d_out = Tensor::from_data({1}, {2.5f});
    Tensor g = global_max_pool_backward(x.shape(), r, d_out);
    CHECK(g(1, 2, 0) == 2.5f);
    float total = 0.0f;
    for (std::size_t i = 0; i < g.size(); ++i) total += g.data()[i];
    CHECK(total == 2.5f);
}

TEST_CASE("dense identity") {
    LayerParams p;
    p.kernel = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    p.bias = Tensor({3});
    Tensor x = Tensor::from_data({3}, {1.5f, -2.0f, 3.0f});
    Tensor y = dense_forward(x, p);
    for (int i = 0; i < 3; ++i) CHECK(y(i) == x(i));
}

TEST_CASE("dense head shape 256 -> 2") {
    LayerParams p;
    p.kernel = Tensor({256, 2}, 0.01f);
    p.bias = Tensor({2});
    Tensor x({256}, 1.0f);
    Tensor y = dense_forward(x, p);
    CHECK(y.shape() == std::vector<int>{2});
}

TEST_CASE("dense rejects extent mismatch") {
    LayerParams p;
    p.kernel = Tensor({4, 2});
    p.bias = Tensor({2});
    Tensor x({5});
    CHECK_THROWS_AS(dense_forward(x, p), DimensionError);
}

TEST_CASE("softmax symmetry and closed form") {
    Tensor z0 = Tensor::from_data({2}, {0.0f, 0.0f});
    Tensor p0 = softmax(z0);
    CHECK(p0(0) == doctest::Approx(0.5));
    CHECK(p0(1) == doctest::Approx(0.5));

    Tensor z1 = Tensor::from_data({2}, {std::log(2.0f), 0.0f});
    Tensor p1 = softmax(z1);
    CHECK(p1(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(p1(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("softmax is shift invariant and a probability vector") {
    SeededRng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor z({4});
        for (int i = 0; i < 4; ++i) z(i) = rng.uniform(-5.0f, 5.0f);
        Tensor p = softmax(z);
        float sum = 0.0f;
        for (int i = 0; i < 4; ++i) {
            CHECK(p(i) >= 0.0f);
            sum += p(i);
        }
        CHECK(std::abs(sum - 1.0f) < 1e-6f);

        const float c = rng.uniform(-50.0f, 50.0f);
        Tensor zs = z;
        for (int i = 0; i < 4; ++i) zs(i) += c;
        Tensor ps = softmax(zs);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(ps(i) - p(i)) < 1e-6f);
    }
}

TEST_CASE("softmax survives huge logits") {
    Tensor z = Tensor::from_data({2}, {1000.0f, -1000.0f});
    Tensor p = softmax(z);
    CHECK(p.all_finite());
    CHECK(p(0) == doctest::Approx(1.0));
}

TEST_CASE("dropout rate 0 is the identity in both modes") {
    Tensor x = Tensor::from_data({4}, {1, -2, 3, -4});
    SeededRng rng(1);
    for (bool training : {false, true}) {
        DropoutResult r = dropout_forward(x, 0.0f, rng, training);
        for (int i = 0; i < 4; ++i) CHECK(r.y(i) == x(i));
    }
}

TEST_CASE("dropout evaluation mode is the identity at any rate") {
    Tensor x = Tensor::from_data({3}, {1.0f, 2.0f, 3.0f});
    SeededRng rng(1);
    DropoutResult r = dropout_forward(x, 0.4f, rng, false);
    for (int i = 0; i < 3; ++i) CHECK(r.y(i) == x(i));
    CHECK(r.mask.empty());
}

TEST_CASE("dropout statistics at rate 0.4") {
    const int n = 100000;
    Tensor x({n}, 1.0f);
    SeededRng rng(2024);
    DropoutResult r = dropout_forward(x, 0.4f, rng, true);
    int survivors = 0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (r.y(i) != 0.0f) ++survivors;
        sum += r.y(i);
    }
    // binomial: mean 0.6 n, sigma = sqrt(n*0.4*0.6)
    const double sigma = std::sqrt(n * 0.4 * 0.6);
    CHECK(std::abs(survivors - 0.6 * n) < 3.0 * sigma);
    CHECK(std::abs(sum / n - 1.0) < 0.02); // inverted scaling keeps E[output] = input
}

TEST_CASE("dropout rejects rate >= 1") {
    Tensor x({2});
    SeededRng rng(1);
    CHECK_THROWS_AS(dropout_forward(x, 1.0f, rng, true), ConfigError);
}

TEST_CASE("conv block shape algebra halves even extents") {
    SeededRng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const int h = 2 * (2 + static_cast<int>(rng.next_below(30)));
        const int w = 2 * (2 + static_cast<int>(rng.next_below(30)));
        const int cin = 1 + static_cast<int>(rng.next_below(3));
        const int cout = 1 + static_cast<int>(rng.next_below(4));
        Tensor x({h, w, cin}, 0.1f);
        LayerParams p = conv_params(cin, cout, 0.05f, 0.0f);
        PoolResult pooled = maxpool2x2_forward(conv2d_forward(x, p));
        REQUIRE(pooled.y.shape() == std::vector<int>{h / 2, w / 2, cout});
    }
}
