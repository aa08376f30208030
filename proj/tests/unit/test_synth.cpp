#include "doctest.h"

#include <filesystem>
#include <set>

#include "octcnn/dataset.hpp"
#include "octcnn/error.hpp"
#include "octcnn/split.hpp"
#include "octcnn/synth.hpp"

using namespace octcnn;

namespace {

std::filesystem::path work_dir(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "octcnn_synth_test" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Band height of a mask column (count of marked rows).
int column_height(const Tensor& mask, int x) {
    int n = 0;
    for (int y = 0; y < mask.extent(0); ++y) n += mask(y, x, 0) > 0.5f ? 1 : 0;
    return n;
}

double mean_mask_thickness(const Tensor& mask) {
    double total = 0.0;
    for (int x = 0; x < mask.extent(1); ++x) total += column_height(mask, x);
    return total / mask.extent(1);
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a)
        if (b.count(x)) return false;
    return true;
}

} // namespace

TEST_CASE("fixed thickness renders a band of that height in every column") {
    SynthConfig cfg;
    cfg.height = 64;
    cfg.width = 96;
    cfg.glaucoma_thickness_min = 6.0f;
    cfg.glaucoma_thickness_max = 6.0f;
    cfg.normal_thickness_min = 10.0f;
    cfg.normal_thickness_max = 14.0f;
    cfg.noise = 0.0f;
    SeededRng rng(1);
    SynthSample s = generate_sample(cfg, Label::glaucoma, rng);
    for (int x = 0; x < cfg.width; ++x) {
        const int hgt = column_height(s.band_mask, x);
        CHECK(hgt >= 5);
        CHECK(hgt <= 7);
    }
}

TEST_CASE("generation is bitwise deterministic per seed") {
    SynthConfig cfg;
    cfg.height = 48;
    cfg.width = 64;
    cfg.glaucoma_thickness_min = 3.0f;
    cfg.glaucoma_thickness_max = 5.0f;
    cfg.normal_thickness_min = 7.0f;
    cfg.normal_thickness_max = 11.0f;
    SeededRng r1(33), r2(33);
    SynthSample a = generate_sample(cfg, Label::normal, r1);
    SynthSample b = generate_sample(cfg, Label::normal, r2);
    for (std::size_t i = 0; i < a.sample.image.size(); ++i)
        REQUIRE(a.sample.image.data()[i] == b.sample.image.data()[i]);
}

TEST_CASE("distinct sample indices give distinct images") {
    SynthConfig cfg;
    cfg.height = 48;
    cfg.width = 64;
    cfg.glaucoma_thickness_min = 3.0f;
    cfg.glaucoma_thickness_max = 5.0f;
    cfg.normal_thickness_min = 7.0f;
    cfg.normal_thickness_max = 11.0f;
    SeededRng r1(1), r2(2);
    SynthSample a = generate_sample(cfg, Label::normal, r1);
    SynthSample b = generate_sample(cfg, Label::normal, r2);
    int differing = 0;
    for (std::size_t i = 0; i < a.sample.image.size(); ++i)
        differing += a.sample.image.data()[i] != b.sample.image.data()[i] ? 1 : 0;
    CHECK(differing > 100);
}

TEST_CASE("class thickness distributions do not overlap") {
    SynthConfig cfg; // defaults: 4-10 vs 14-24 at 496x768
    cfg.height = 124;
    cfg.width = 192;
    double max_g = 0.0, min_n = 1e9;
    for (int i = 0; i < 100; ++i) {
        SeededRng rg(mix_seed(7, static_cast<std::uint64_t>(i)));
        SeededRng rn(mix_seed(8, static_cast<std::uint64_t>(i)));
        max_g = std::max(max_g, mean_mask_thickness(generate_sample(cfg, Label::glaucoma, rg).band_mask));
        min_n = std::min(min_n, mean_mask_thickness(generate_sample(cfg, Label::normal, rn).band_mask));
    }
    CHECK(max_g < min_n); // separable by construction
    // a mid-gap threshold classifies every sample correctly
    const double threshold = 12.0;
    CHECK(max_g < threshold);
    CHECK(min_n > threshold);
}

TEST_CASE("the bright band is the brightest structure in the scan") {
    SynthConfig cfg;
    cfg.height = 64;
    cfg.width = 96;
    cfg.glaucoma_thickness_min = 4.0f;
    cfg.glaucoma_thickness_max = 6.0f;
    cfg.normal_thickness_min = 8.0f;
    cfg.normal_thickness_max = 12.0f;
    cfg.noise = 0.0f;
    SeededRng rng(5);
    SynthSample s = generate_sample(cfg, Label::normal, rng);
    double in_band = 0.0, out_band = 0.0;
    int n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < s.sample.image.size(); ++i) {
        if (s.band_mask.data()[i] > 0.5f) {
            in_band += s.sample.image.data()[i];
            ++n_in;
        } else {
            out_band += s.sample.image.data()[i];
            ++n_out;
        }
    }
    CHECK(in_band / n_in > 3.0 * (out_band / n_out));
}

TEST_CASE("intensities stay inside [0,1] even with heavy noise") {
    SynthConfig cfg;
    cfg.height = 48;
    cfg.width = 64;
    cfg.glaucoma_thickness_min = 3.0f;
    cfg.glaucoma_thickness_max = 5.0f;
    cfg.normal_thickness_min = 7.0f;
    cfg.normal_thickness_max = 11.0f;
    cfg.noise = 0.5f;
    SeededRng rng(6);
    SynthSample s = generate_sample(cfg, Label::glaucoma, rng);
    for (std::size_t i = 0; i < s.sample.image.size(); ++i) {
        CHECK(s.sample.image.data()[i] >= 0.0f);
        CHECK(s.sample.image.data()[i] <= 1.0f);
    }
}

TEST_CASE("inverted thickness ranges are rejected") {
    SynthConfig cfg;
    cfg.glaucoma_thickness_min = 14.0f;
    cfg.glaucoma_thickness_max = 24.0f;
    cfg.normal_thickness_min = 4.0f;
    cfg.normal_thickness_max = 10.0f;
    SeededRng rng(7);
    CHECK_THROWS_AS(generate_sample(cfg, Label::normal, rng), ConfigError);
}

TEST_CASE("generated corpus round-trips through the manifest loader") {
    auto dir = work_dir("roundtrip");
    SynthConfig cfg;
    cfg.height = 32;
    cfg.width = 48;
    cfg.glaucoma_thickness_min = 2.0f;
    cfg.glaucoma_thickness_max = 3.0f;
    cfg.normal_thickness_min = 5.0f;
    cfg.normal_thickness_max = 8.0f;
    cfg.seed = 11;
    Dataset d = generate_dataset(cfg, 6, 9, 3, dir);

    CHECK(d.samples.size() == 15);
    Dataset loaded = load_dataset(dir / "manifest.csv");
    REQUIRE(loaded.samples.size() == 15);
    for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
        CHECK(loaded.samples[i].sample_id == d.samples[i].sample_id);
        CHECK(loaded.samples[i].patient_id == d.samples[i].patient_id);
        CHECK(loaded.samples[i].label == d.samples[i].label);
        REQUIRE(loaded.samples[i].image.same_shape(d.samples[i].image));
        for (std::size_t px = 0; px < loaded.samples[i].image.size(); ++px)
            REQUIRE(loaded.samples[i].image.data()[px] == d.samples[i].image.data()[px]);
    }
    // masks exist for every sample
    for (const auto& s : loaded.samples)
        CHECK(std::filesystem::exists(dir / "masks" / (s.sample_id + ".pgm")));
}

TEST_CASE("patients are assigned round-robin") {
    auto dir = work_dir("patients");
    SynthConfig cfg;
    cfg.height = 32;
    cfg.width = 48;
    cfg.glaucoma_thickness_min = 2.0f;
    cfg.glaucoma_thickness_max = 3.0f;
    cfg.normal_thickness_min = 5.0f;
    cfg.normal_thickness_max = 8.0f;
    Dataset d = generate_dataset(cfg, 7, 5, 3, dir, false);

    std::set<std::string> g_patients, n_patients;
    for (const auto& s : d.samples)
        (s.label == Label::glaucoma ? g_patients : n_patients).insert(s.patient_id);
    CHECK(g_patients.size() == 3);
    CHECK(n_patients.size() == 3);
    CHECK(disjoint(g_patients, n_patients));
}

TEST_CASE("single-patient corpora cannot be split") {
    auto dir = work_dir("singlepatient");
    SynthConfig cfg;
    cfg.height = 32;
    cfg.width = 48;
    cfg.glaucoma_thickness_min = 2.0f;
    cfg.glaucoma_thickness_max = 3.0f;
    cfg.normal_thickness_min = 5.0f;
    cfg.normal_thickness_max = 8.0f;
    Dataset d = generate_dataset(cfg, 4, 4, 1, dir, false);
    SeededRng rng(12);
    CHECK_THROWS_AS(split_train_test(d, 0.2, rng), DataError);
}
