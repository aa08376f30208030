#include "doctest.h"

#include <cmath>

#include "octcnn/error.hpp"
#include "octcnn/rng.hpp"
#include "octcnn/tensor.hpp"

using octcnn::SeededRng;
using octcnn::Tensor;

TEST_CASE("tensor construction validates shape") {
    CHECK_THROWS_AS(Tensor({0}), octcnn::DimensionError);
    CHECK_THROWS_AS(Tensor({2, -1}), octcnn::DimensionError);
    CHECK_THROWS_AS(Tensor({1, 1, 1, 1, 1}), octcnn::DimensionError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
}

TEST_CASE("from_data length check") {
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0f, 2.0f, 3.0f}), octcnn::DimensionError);
}

TEST_CASE("matmul identity") {
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor m = Tensor::from_data({2, 2}, {3, 4, 5, 6});
    Tensor y = octcnn::matmul(eye, m);
    for (int i = 0; i < 4; ++i) CHECK(y(i / 2, i % 2) == m(i / 2, i % 2));
}

TEST_CASE("matmul hand example") {
    Tensor a = Tensor::from_data({1, 2}, {1, 2});
    Tensor b = Tensor::from_data({2, 1}, {3, 4});
    Tensor y = octcnn::matmul(a, b);
    CHECK(y(0, 0) == 11.0f);
}

TEST_CASE("matmul zero annihilator") {
    Tensor z({3, 3});
    SeededRng rng(1);
    Tensor m = octcnn::random_init({3, 3}, rng, 3);
    Tensor y = octcnn::matmul(z, m);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.0f);
}

TEST_CASE("matmul shape errors name both operands") {
    Tensor a({2, 3}), b({4, 2});
    CHECK_THROWS_WITH_AS(octcnn::matmul(a, b),
                         doctest::Contains("[2x3]"), octcnn::DimensionError);
}

TEST_CASE("matmul associativity within 1e-4 relative on random 8x8") {
    SeededRng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor a = octcnn::random_init({8, 8}, rng, 8);
        Tensor b = octcnn::random_init({8, 8}, rng, 8);
        Tensor c = octcnn::random_init({8, 8}, rng, 8);
        Tensor left = octcnn::matmul(octcnn::matmul(a, b), c);
        Tensor right = octcnn::matmul(a, octcnn::matmul(b, c));
        for (std::size_t i = 0; i < left.size(); ++i) {
            const float l = left.data()[i], r = right.data()[i];
            CHECK(std::abs(l - r) <= 1e-4f * std::max({std::abs(l), std::abs(r), 1.0f}));
        }
    }
}

TEST_CASE("bilinear resize to the same size is the identity") {
    SeededRng rng(3);
    Tensor x = octcnn::random_init({5, 7, 2}, rng, 4);
    Tensor y = octcnn::bilinear_resize(x, 5, 7);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y.data()[i] == x.data()[i]);
}

TEST_CASE("bilinear resize maps constants to constants") {
    Tensor x({6, 9, 1}, 7.0f);
    for (auto [oh, ow] : {std::pair{3, 4}, {13, 17}, {1, 1}, {6, 2}}) {
        Tensor y = octcnn::bilinear_resize(x, oh, ow);
        CHECK(y.extent(0) == oh);
        CHECK(y.extent(1) == ow);
        for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y.data()[i] == 7.0f);
    }
}

TEST_CASE("bilinear 2x2 to 1x1 samples the centroid") {
    Tensor x = Tensor::from_data({2, 2, 1}, {0, 2, 2, 4});
    Tensor y = octcnn::bilinear_resize(x, 1, 1);
    CHECK(y(0, 0, 0) == doctest::Approx(2.0f));
}

TEST_CASE("bilinear downsample halves the scan extents") {
    Tensor x({496, 768, 1}, 0.25f);
    Tensor y = octcnn::bilinear_resize(x, 248, 384);
    CHECK(y.shape() == std::vector<int>{248, 384, 1});
}

TEST_CASE("bilinear rejects zero target extents") {
    Tensor x({4, 4, 1});
    CHECK_THROWS_AS(octcnn::bilinear_resize(x, 0, 4), octcnn::DimensionError);
}

TEST_CASE("output shape is a pure function of input shape") {
    SeededRng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int h = 1 + static_cast<int>(rng.next_below(8));
        const int w = 1 + static_cast<int>(rng.next_below(8));
        const int c = 1 + static_cast<int>(rng.next_below(3));
        const int oh = 1 + static_cast<int>(rng.next_below(8));
        const int ow = 1 + static_cast<int>(rng.next_below(8));
        Tensor x({h, w, c}, 1.0f);
        Tensor y = octcnn::bilinear_resize(x, oh, ow);
        REQUIRE(y.shape() == std::vector<int>{oh, ow, c});
    }
}

TEST_CASE("random_init is deterministic per seed") {
    SeededRng a(9), b(9);
    Tensor t1 = octcnn::random_init({3, 3, 2, 4}, a, 18);
    Tensor t2 = octcnn::random_init({3, 3, 2, 4}, b, 18);
    for (std::size_t i = 0; i < t1.size(); ++i) REQUIRE(t1.data()[i] == t2.data()[i]);
}

TEST_CASE("random_init bound shrinks monotonically with fan_in") {
    SeededRng rng(1);
    float prev_max = 1e9f;
    for (int fan : {4, 16, 64, 256, 1024}) {
        Tensor t = octcnn::random_init({1000}, rng, fan);
        float mx = 0.0f;
        for (std::size_t i = 0; i < t.size(); ++i) mx = std::max(mx, std::abs(t.data()[i]));
        const float bound = std::sqrt(6.0f / static_cast<float>(fan));
        CHECK(mx <= bound);
        CHECK(mx < prev_max);
        prev_max = mx;
    }
}

TEST_CASE("random_init sample mean is within 3 sigma of zero") {
    SeededRng rng(21);
    const int n = 10000;
    const int fan = 50;
    Tensor t = octcnn::random_init({n}, rng, fan);
    double mean = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) mean += t.data()[i];
    mean /= n;
    // U(-b,b): var = b^2/3, so sigma of the mean is b / sqrt(3n)
    const double b = std::sqrt(6.0 / fan);
    const double sigma_mean = b / std::sqrt(3.0 * n);
    CHECK(std::abs(mean) < 3.0 * sigma_mean);
}

TEST_CASE("random_init rejects non-positive fan_in") {
    SeededRng rng(1);
    CHECK_THROWS_AS(octcnn::random_init({4}, rng, 0), octcnn::ConfigError);
}
