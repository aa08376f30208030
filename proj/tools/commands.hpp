#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace octcnn::cli {

struct SynthArgs {
    std::string out;
    int glaucoma = 93;
    int normal = 156;
    int patients_per_class = 12;
    int height = 496;
    int width = 768;
    float noise = 0.05f;
    float g_thick_min = 4.0f, g_thick_max = 10.0f;
    float n_thick_min = 14.0f, n_thick_max = 24.0f;
    int layer_count = 5;
    std::uint64_t seed = 7;
    bool no_masks = false;
};

struct TrainArgs {
    std::string manifest;
    std::string out;
    std::string arch = "scratch";
    bool reduced = false;
    int epochs = -1;     // -1: per-arch default (scratch 150, vgg 125)
    int batch = 16;
    double lr = -1.0;    // -1: per-arch default (scratch 0.05, vgg 0.001)
    bool with_da = false;
    double da_factor = 0.2;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string weights; // optional pretrained archive for vgg modes
};

struct CrossvalArgs {
    TrainArgs train; // shared knobs (manifest, out, arch, ...)
    int folds = 5;
    double test_fraction = 0.2;
};

struct EvaluateArgs {
    std::string manifest;
    std::string weights;
    std::string out;
    std::string arch = "scratch";
    bool reduced = false;
    double threshold = 0.5;
};

struct CamArgs {
    std::string manifest;
    std::string weights;
    std::string out;
    std::string arch = "scratch";
    bool reduced = false;
    std::string samples;    // comma-separated sample ids
    std::string classes = "both"; // both | glaucoma | normal
    std::string masks_dir;  // default: <manifest dir>/masks
};

void cmd_synth(const SynthArgs& a);
void cmd_train(const TrainArgs& a);
void cmd_crossval(const CrossvalArgs& a);
void cmd_evaluate(const EvaluateArgs& a);
void cmd_cam(const CamArgs& a);

} // namespace octcnn::cli
