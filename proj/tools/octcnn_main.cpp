// octcnn: train, cross-validate, evaluate and explain small CNN classifiers
// on circumpapillary OCT B-scans, with a synthetic phantom generator for
// self-contained experiments.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 i/o error.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "octcnn/error.hpp"

namespace {

using namespace octcnn::cli;

void add_train_options(CLI::App* sub, TrainArgs& a) {
    sub->add_option("--manifest", a.manifest, "training manifest (csv)")->required();
    sub->add_option("--out", a.out, "output directory")->required();
    sub->add_option("--arch", a.arch, "scratch | vgg16 | vgg19")
        ->check(CLI::IsMember({"scratch", "vgg16", "vgg19"}))
        ->capture_default_str();
    sub->add_flag("--reduced", a.reduced,
                  "desk-scale run: expects 124x192 source images, filter counts / 4");
    sub->add_option("--epochs", a.epochs, "training epochs (default: scratch 150, vgg 125)");
    sub->add_option("--batch", a.batch, "batch size")->capture_default_str();
    sub->add_option("--lr", a.lr, "Adadelta step multiplier (default: scratch 0.05, vgg 0.001)");
    sub->add_flag("--with-da", a.with_da, "enable data augmentation");
    sub->add_option("--da-factor", a.da_factor, "augmentation magnitude")->capture_default_str();
    sub->add_option("--seed", a.seed, "run seed")->capture_default_str();
    sub->add_option("--threads", a.threads, "worker threads (results are thread-count invariant)")
        ->capture_default_str();
    sub->add_option("--weights", a.weights, "initial weight archive (vgg base import)");
}

/// Resolved-config reruns: `--config FILE` entries (key=value per line) are
/// injected as `--key=value` tokens right after the subcommand name, so
/// explicit command-line options still win (TakeLast policy).
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream is(config_path);
    if (!is) throw octcnn::IoError("cannot open config file '" + config_path + "'");
    std::vector<std::string> injected;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw octcnn::DataError("config file '" + config_path + "': bad line '" + line + "'");
        std::string value = line.substr(eq + 1);
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        injected.push_back("--" + line.substr(0, eq) + "=" + value);
    }
    // program name, subcommand, config-derived tokens, explicit tokens
    std::vector<std::string> out;
    out.push_back(args[0]);
    if (args.size() > 1) out.push_back(args[1]);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), args.begin() + std::min<std::size_t>(2, args.size()), args.end());
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CNN glaucoma-detection engine for circumpapillary OCT B-scans"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    std::string config_file; // consumed by expand_config; bound so CLI11 accepts it

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic B-scan corpus");
    synth_cmd->add_option("--config", config_file, "resolved-config file to replay");
    synth_cmd->add_option("--out", synth.out, "output directory")->required();
    synth_cmd->add_option("--glaucoma", synth.glaucoma, "glaucomatous sample count")
        ->capture_default_str();
    synth_cmd->add_option("--normal", synth.normal, "normal sample count")->capture_default_str();
    synth_cmd->add_option("--patients-per-class", synth.patients_per_class, "synthetic patients")
        ->capture_default_str();
    synth_cmd->add_option("--height", synth.height, "image height")->capture_default_str();
    synth_cmd->add_option("--width", synth.width, "image width")->capture_default_str();
    synth_cmd->add_option("--noise", synth.noise, "speckle amplitude")->capture_default_str();
    synth_cmd->add_option("--glaucoma-thickness-min", synth.g_thick_min)->capture_default_str();
    synth_cmd->add_option("--glaucoma-thickness-max", synth.g_thick_max)->capture_default_str();
    synth_cmd->add_option("--normal-thickness-min", synth.n_thick_min)->capture_default_str();
    synth_cmd->add_option("--normal-thickness-max", synth.n_thick_max)->capture_default_str();
    synth_cmd->add_option("--layers", synth.layer_count, "tissue bands below the bright band")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
    synth_cmd->add_flag("--no-masks", synth.no_masks, "skip ground-truth band masks");

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "train on a full training split");
    train_cmd->add_option("--config", config_file, "resolved-config file to replay");
    add_train_options(train_cmd, train);

    CrossvalArgs crossval;
    CLI::App* cv_cmd =
        app.add_subcommand("crossval", "patient-grouped internal cross-validation");
    cv_cmd->add_option("--config", config_file, "resolved-config file to replay");
    add_train_options(cv_cmd, crossval.train);
    cv_cmd->add_option("--folds", crossval.folds, "fold count")->capture_default_str();
    cv_cmd->add_option("--test-fraction", crossval.test_fraction, "held-out test fraction")
        ->capture_default_str();

    EvaluateArgs evaluate;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a trained model on a test set");
    eval_cmd->add_option("--config", config_file, "resolved-config file to replay");
    eval_cmd->add_option("--manifest", evaluate.manifest, "test manifest (csv)")->required();
    eval_cmd->add_option("--weights", evaluate.weights, "trained weight archive")->required();
    eval_cmd->add_option("--out", evaluate.out, "output directory")->required();
    eval_cmd->add_option("--arch", evaluate.arch, "scratch | vgg16 | vgg19")
        ->check(CLI::IsMember({"scratch", "vgg16", "vgg19"}))
        ->capture_default_str();
    eval_cmd->add_flag("--reduced", evaluate.reduced, "match a --reduced trained model");
    eval_cmd->add_option("--threshold", evaluate.threshold, "decision threshold")
        ->capture_default_str();

    CamArgs cam;
    CLI::App* cam_cmd = app.add_subcommand("cam", "export class-activation heat maps");
    cam_cmd->add_option("--config", config_file, "resolved-config file to replay");
    cam_cmd->add_option("--manifest", cam.manifest, "manifest with the samples")->required();
    cam_cmd->add_option("--weights", cam.weights, "trained weight archive")->required();
    cam_cmd->add_option("--out", cam.out, "output directory")->required();
    cam_cmd->add_option("--arch", cam.arch, "scratch | vgg16 | vgg19")
        ->check(CLI::IsMember({"scratch", "vgg16", "vgg19"}))
        ->capture_default_str();
    cam_cmd->add_flag("--reduced", cam.reduced, "match a --reduced trained model");
    cam_cmd->add_option("--samples", cam.samples, "comma-separated sample ids")->required();
    cam_cmd->add_option("--classes", cam.classes, "both | glaucoma | normal")
        ->check(CLI::IsMember({"both", "glaucoma", "normal"}))
        ->capture_default_str();
    cam_cmd->add_option("--masks-dir", cam.masks_dir,
                        "band-mask directory (default: <manifest dir>/masks)");

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const octcnn::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const octcnn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }

    try {
        // CLI11 parses the reversed token list
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        reversed.pop_back(); // drop the program name
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth_cmd->parsed()) cmd_synth(synth);
        if (train_cmd->parsed()) cmd_train(train);
        if (cv_cmd->parsed()) cmd_crossval(crossval);
        if (eval_cmd->parsed()) cmd_evaluate(evaluate);
        if (cam_cmd->parsed()) cmd_cam(cam);
    } catch (const octcnn::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const octcnn::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const octcnn::Error& e) { // DataError, DimensionError
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
