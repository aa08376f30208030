#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "octcnn/cam.hpp"
#include "octcnn/dataset.hpp"
#include "octcnn/error.hpp"
#include "octcnn/image_io.hpp"
#include "octcnn/metrics.hpp"
#include "octcnn/model.hpp"
#include "octcnn/optimizer.hpp"
#include "octcnn/split.hpp"
#include "octcnn/synth.hpp"
#include "octcnn/weights.hpp"

namespace octcnn::cli {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

bool is_vgg(const std::string& arch) { return arch == "vgg16" || arch == "vgg19"; }

/// Flat key=value lines; replayable through `--config`.
struct ConfigEcho {
    std::string text;
    void add(const std::string& key, const std::string& v) { text += key + "=" + v + "\n"; }
    void add(const std::string& key, const char* v) { text += key + "=" + v + "\n"; }
    void add(const std::string& key, bool v) { add(key, v ? "true" : "false"); }
    void add(const std::string& key, int v) { add(key, std::to_string(v)); }
    void add(const std::string& key, std::uint64_t v) { add(key, std::to_string(v)); }
    void add(const std::string& key, double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        add(key, std::string(buf));
    }
};

/// Train-family knobs with all defaults resolved.
ConfigEcho train_echo(const TrainArgs& a, const TrainConfig& cfg) {
    ConfigEcho e;
    e.add("manifest", a.manifest);
    e.add("out", a.out);
    e.add("arch", a.arch);
    e.add("reduced", a.reduced);
    e.add("epochs", cfg.epochs);
    e.add("batch", cfg.batch_size);
    e.add("lr", static_cast<double>(cfg.lr));
    e.add("with-da", a.with_da);
    e.add("da-factor", a.da_factor);
    e.add("seed", a.seed);
    e.add("threads", a.threads);
    if (!a.weights.empty()) e.add("weights", a.weights);
    return e;
}

/// Image extents shared by every sample; mixed sizes are a data error.
std::pair<int, int> dataset_extents(const Dataset& d) {
    if (d.samples.empty()) throw DataError("dataset is empty");
    const int h = d.samples[0].image.extent(0), w = d.samples[0].image.extent(1);
    for (const auto& s : d.samples)
        if (s.image.extent(0) != h || s.image.extent(1) != w)
            throw DataError("sample '" + s.sample_id + "' has extents " + s.image.shape_str() +
                            " but the dataset starts with [" + std::to_string(h) + "x" +
                            std::to_string(w) + "x1]; mixed sizes are not supported");
    return {h, w};
}

struct ModeSetup {
    ModelSpec spec;
    InputPrep prep = InputPrep::raw;
    float default_lr = 0.05f;
    int default_epochs = 150;
};

ModeSetup setup_mode(const std::string& arch, bool reduced, const Dataset& d) {
    auto [h, w] = dataset_extents(d);
    if (reduced && (h != 124 || w != 192))
        throw ConfigError("--reduced expects 124x192 source images, got " + std::to_string(h) +
                          "x" + std::to_string(w));
    const int filter_div = reduced ? 4 : 1;

    ModeSetup m;
    if (arch == "scratch") {
        m.spec = build_scratch_cnn(h, w, 1, filter_div);
        m.prep = InputPrep::raw;
        m.default_lr = 0.05f;
        m.default_epochs = 150;
    } else if (is_vgg(arch)) {
        m.spec = build_vgg(arch == "vgg16" ? 16 : 19, (h + 1) / 2, (w + 1) / 2, filter_div);
        m.prep = InputPrep::finetune;
        m.default_lr = 0.001f;
        m.default_epochs = 125;
    } else {
        throw ConfigError("unknown arch '" + arch + "' (scratch, vgg16, vgg19)");
    }
    return m;
}

/// Glaucoma probability of one already-prepared input.
float score_sample(const ModelState& state, const Tensor& prepared) {
    Tensor p = model_forward(state, prepared, false);
    return p(0);
}

struct EvalOutcome {
    MetricReport report;
    RocCurve curve;
    bool auc_defined = true;
};

EvalOutcome evaluate_on(const ModelState& state, const Dataset& d, InputPrep prep,
                        float threshold) {
    std::vector<Label> labels;
    std::vector<float> scores;
    labels.reserve(d.samples.size());
    for (const auto& s : d.samples) {
        labels.push_back(s.label);
        scores.push_back(score_sample(state, prepare_input(s.image, prep)));
    }
    EvalOutcome out;
    out.report = basic_metrics(confusion(labels, scores, threshold));
    try {
        auto [curve, auc] = roc_auc(labels, scores);
        out.curve = std::move(curve);
        out.report.auc = auc;
    } catch (const DataError&) {
        out.auc_defined = false;
    }
    return out;
}

std::string metrics_csv(const MetricReport& r) {
    std::string text = "metric,value\n";
    for (int m = 0; m < 7; ++m) {
        text += kMetricNames[m];
        text += ',';
        const auto v = metric_by_index(r, m);
        text += v ? format_value(*v) : "undefined";
        text += '\n';
    }
    return text;
}

std::string metrics_text(const MetricReport& r) {
    std::string text;
    for (int m = 0; m < 7; ++m) {
        const auto v = metric_by_index(r, m);
        char line[48];
        std::snprintf(line, sizeof line, "%-4s %s\n", kMetricNames[m],
                      v ? format_value(*v).c_str() : "undefined");
        text += line;
    }
    return text;
}

std::string roc_csv(const RocCurve& curve) {
    std::string text = "fpr,tpr,threshold\n";
    for (const auto& p : curve.points) {
        char line[96];
        std::snprintf(line, sizeof line, "%.6f,%.6f,%g\n", p.fpr, p.tpr, p.threshold);
        text += line;
    }
    return text;
}

std::string trace_csv(const std::vector<EpochStat>& trace) {
    std::string text = "epoch,loss\n";
    for (const auto& e : trace) {
        char line[64];
        std::snprintf(line, sizeof line, "%d,%.6f\n", e.epoch, e.mean_loss);
        text += line;
    }
    return text;
}

/// Subset manifest with absolute image paths (loadable from anywhere).
void write_subset_manifest(const fs::path& out, const Dataset& full,
                           const std::vector<std::string>& ids) {
    const fs::path base = fs::absolute(full.manifest_path).parent_path();
    std::ofstream os(out);
    if (!os) throw IoError("cannot open '" + out.string() + "' for writing");
    os << "sample_id,path,label,patient_id\n";
    // recover each sample's on-disk path from the original manifest
    std::ifstream in(full.manifest_path);
    if (!in) throw IoError("cannot reopen manifest '" + full.manifest_path.string() + "'");
    std::string header;
    std::getline(in, header);
    std::set<std::string> wanted(ids.begin(), ids.end());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string id = line.substr(0, comma);
        if (!wanted.count(id)) continue;
        const auto rest = line.substr(comma + 1);
        const auto path_end = rest.find(',');
        fs::path img = rest.substr(0, path_end);
        if (!img.is_absolute()) img = base / img;
        os << id << ',' << img.string() << ',' << rest.substr(path_end + 1) << '\n';
    }
    if (!os) throw IoError("write failed for '" + out.string() + "'");
}

TrainConfig make_train_config(const TrainArgs& a, const ModeSetup& mode) {
    TrainConfig cfg;
    cfg.epochs = a.epochs >= 0 ? a.epochs : mode.default_epochs;
    cfg.batch_size = a.batch;
    cfg.lr = a.lr >= 0.0 ? static_cast<float>(a.lr) : mode.default_lr;
    cfg.prep = mode.prep;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    if (a.with_da) cfg.augment.factor = static_cast<float>(a.da_factor);
    if (cfg.epochs < 1) throw ConfigError("--epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("--batch must be >= 1");
    if (cfg.lr < 0.0f) throw ConfigError("--lr must be >= 0");
    return cfg;
}

ModelState initial_state(const TrainArgs& a, const ModeSetup& mode) {
    SeededRng init_rng(mix_seed(a.seed, 0x1017ULL));
    if (a.weights.empty()) {
        if (is_vgg(a.arch))
            std::cout << "note: no --weights archive given; the " << a.arch
                      << " base starts from random initialization\n";
        return init_state(mode.spec, init_rng);
    }
    WeightArchive archive = read_archive(a.weights);
    // non-strict: a pretrained base may omit the head
    return load_weights(mode.spec, archive, false, init_rng);
}

} // namespace

void cmd_synth(const SynthArgs& a) {
    ConfigEcho echo;
    echo.add("out", a.out);
    echo.add("glaucoma", a.glaucoma);
    echo.add("normal", a.normal);
    echo.add("patients-per-class", a.patients_per_class);
    echo.add("height", a.height);
    echo.add("width", a.width);
    echo.add("noise", static_cast<double>(a.noise));
    echo.add("glaucoma-thickness-min", static_cast<double>(a.g_thick_min));
    echo.add("glaucoma-thickness-max", static_cast<double>(a.g_thick_max));
    echo.add("normal-thickness-min", static_cast<double>(a.n_thick_min));
    echo.add("normal-thickness-max", static_cast<double>(a.n_thick_max));
    echo.add("layers", a.layer_count);
    echo.add("seed", a.seed);
    echo.add("no-masks", a.no_masks);

    if (a.glaucoma < 1 || a.normal < 1)
        throw ConfigError("--glaucoma and --normal must be >= 1");
    if (a.patients_per_class < 1) throw ConfigError("--patients-per-class must be >= 1");

    SynthConfig cfg;
    cfg.height = a.height;
    cfg.width = a.width;
    cfg.noise = a.noise;
    cfg.glaucoma_thickness_min = a.g_thick_min;
    cfg.glaucoma_thickness_max = a.g_thick_max;
    cfg.normal_thickness_min = a.n_thick_min;
    cfg.normal_thickness_max = a.n_thick_max;
    cfg.layer_count = a.layer_count;
    cfg.seed = a.seed;
    cfg.validate();

    const fs::path out = a.out;
    ensure_dir(out);
    Dataset d = generate_dataset(cfg, a.glaucoma, a.normal, a.patients_per_class, out,
                                 !a.no_masks);
    write_text(out / "synth_config.ini", echo.text);

    std::set<std::string> patients;
    for (const auto& s : d.samples) patients.insert(s.patient_id);
    std::cout << "wrote " << d.samples.size() << " samples (" << d.count(Label::glaucoma)
              << " glaucoma, " << d.count(Label::normal) << " normal) from "
              << patients.size() << " synthetic patients to " << out.string() << "\n"
              << "manifest: " << (out / "manifest.csv").string() << "\n";
}

void cmd_train(const TrainArgs& a) {
    const fs::path out = a.out;
    ensure_dir(out);

    Dataset d = load_dataset(a.manifest);
    ModeSetup mode = setup_mode(a.arch, a.reduced, d);
    TrainConfig cfg = make_train_config(a, mode);
    ModelState state = initial_state(a, mode);

    const ClassWeights weights =
        compute_class_weights(d.count(Label::glaucoma), d.count(Label::normal));
    cfg.class_weights = weights;

    std::cout << "training " << a.arch << " on " << d.samples.size() << " samples ("
              << d.count(Label::glaucoma) << " glaucoma / " << d.count(Label::normal)
              << " normal), class weights [" << format_value(weights.glaucoma) << ", "
              << format_value(weights.normal) << "], lr " << cfg.lr << ", batch "
              << cfg.batch_size << ", " << cfg.epochs << " epochs\n";

    auto trace = fit(state, d, cfg);
    for (const auto& e : trace)
        if (e.epoch == 1 || e.epoch % 10 == 0 || e.epoch == cfg.epochs)
            std::cout << "epoch " << e.epoch << "  loss " << format_value(e.mean_loss) << "\n";

    write_archive(save_weights(state), out / "weights.cwt");
    write_text(out / "trace.csv", trace_csv(trace));
    write_text(out / "train_config.ini", train_echo(a, cfg).text);
    std::cout << "weights: " << (out / "weights.cwt").string() << "\n";
}

void cmd_crossval(const CrossvalArgs& a) {
    const fs::path out = a.train.out;
    ensure_dir(out);

    Dataset d = load_dataset(a.train.manifest);
    ModeSetup mode = setup_mode(a.train.arch, a.train.reduced, d);
    TrainConfig cfg = make_train_config(a.train, mode);

    SeededRng split_rng(mix_seed(a.train.seed, 0x51ULL));
    SplitPlan plan = split_train_test(d, a.test_fraction, split_rng);
    Dataset train_set = subset(d, plan.train_ids);
    plan.folds = make_icv_folds(train_set, a.folds, split_rng);

    write_subset_manifest(out / "train_manifest.csv", d, plan.train_ids);
    write_subset_manifest(out / "test_manifest.csv", d, plan.test_ids);
    std::cout << "outer split: " << plan.train_ids.size() << " train / "
              << plan.test_ids.size() << " test (achieved test fractions "
              << format_value(plan.achieved_test_fraction[0]) << " glaucoma, "
              << format_value(plan.achieved_test_fraction[1]) << " normal)\n";

    std::vector<MetricReport> reports;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        Dataset fold_train = subset(d, plan.folds[f].train_ids);
        Dataset fold_val = subset(d, plan.folds[f].val_ids);

        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(f) + 1);
        fold_cfg.class_weights = compute_class_weights(fold_train.count(Label::glaucoma),
                                                       fold_train.count(Label::normal));
        SeededRng init_rng(mix_seed(fold_cfg.seed, 0x1017ULL));
        ModelState state = init_state(mode.spec, init_rng);
        auto trace = fit(state, fold_train, fold_cfg);

        EvalOutcome eval = evaluate_on(state, fold_val, mode.prep, 0.5f);
        reports.push_back(eval.report);

        const fs::path fold_dir = out / ("fold" + std::to_string(f + 1));
        ensure_dir(fold_dir);
        write_text(fold_dir / "metrics.csv", metrics_csv(eval.report));
        write_text(fold_dir / "trace.csv", trace_csv(trace));
        std::cout << "fold " << f + 1 << "/" << plan.folds.size() << ": "
                  << fold_train.samples.size() << " train / " << fold_val.samples.size()
                  << " val, ACC "
                  << (eval.report.acc ? format_value(*eval.report.acc) : "undefined") << "\n";
    }

    AggregateReport agg = aggregate_folds(reports);
    std::string agg_csv = "metric,mean,std,folds\n";
    std::string agg_txt;
    for (int m = 0; m < 7; ++m) {
        const auto& s = agg.by_metric[m];
        agg_csv += kMetricNames[m];
        agg_csv += ',';
        agg_csv += s.mean ? format_value(*s.mean) : "undefined";
        agg_csv += ',';
        agg_csv += s.stddev ? format_value(*s.stddev) : "undefined";
        agg_csv += ',' + std::to_string(s.count) + '\n';

        char line[96];
        if (s.mean && s.stddev)
            std::snprintf(line, sizeof line, "%-4s %.4f ± %.4f\n", kMetricNames[m],
                          *s.mean, *s.stddev);
        else if (s.mean)
            std::snprintf(line, sizeof line, "%-4s %.4f (1 fold)\n", kMetricNames[m], *s.mean);
        else
            std::snprintf(line, sizeof line, "%-4s undefined\n", kMetricNames[m]);
        agg_txt += line;
    }
    write_text(out / "aggregate.csv", agg_csv);
    write_text(out / "aggregate.txt", agg_txt);
    ConfigEcho echo = train_echo(a.train, cfg);
    echo.add("folds", a.folds);
    echo.add("test-fraction", a.test_fraction);
    write_text(out / "crossval_config.ini", echo.text);
    std::cout << "aggregate (" << reports.size() << " folds):\n" << agg_txt;
}

void cmd_evaluate(const EvaluateArgs& a) {
    const fs::path out = a.out;
    ensure_dir(out);

    Dataset d = load_dataset(a.manifest);
    ModeSetup mode = setup_mode(a.arch, a.reduced, d);
    SeededRng rng(2);
    ModelState state = load_weights(mode.spec, read_archive(a.weights), true, rng);

    EvalOutcome eval = evaluate_on(state, d, mode.prep, static_cast<float>(a.threshold));
    write_text(out / "metrics.csv", metrics_csv(eval.report));
    write_text(out / "metrics.txt", metrics_text(eval.report));
    if (eval.auc_defined) write_text(out / "roc.csv", roc_csv(eval.curve));
    ConfigEcho echo;
    echo.add("manifest", a.manifest);
    echo.add("weights", a.weights);
    echo.add("out", a.out);
    echo.add("arch", a.arch);
    echo.add("reduced", a.reduced);
    echo.add("threshold", a.threshold);
    write_text(out / "evaluate_config.ini", echo.text);

    std::cout << metrics_text(eval.report);
    if (!eval.auc_defined)
        std::cout << "note: the test set contains a single class; AUC and the ROC curve are "
                     "undefined\n";
}

void cmd_cam(const CamArgs& a) {
    const fs::path out = a.out;
    ensure_dir(out);

    Dataset d = load_dataset(a.manifest);
    ModeSetup mode = setup_mode(a.arch, a.reduced, d);
    SeededRng rng(3);
    ModelState state = load_weights(mode.spec, read_archive(a.weights), true, rng);

    std::vector<std::string> ids;
    std::string cur;
    for (char c : a.samples + ",") {
        if (c == ',') {
            if (!cur.empty()) ids.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (ids.empty()) throw ConfigError("--samples must list at least one sample id");

    std::vector<Label> classes;
    if (a.classes == "both")
        classes = {Label::glaucoma, Label::normal};
    else
        classes = {parse_label(a.classes)};

    const fs::path masks_dir = a.masks_dir.empty()
                                   ? fs::path(a.manifest).parent_path() / "masks"
                                   : fs::path(a.masks_dir);

    for (const auto& id : ids) {
        const Sample* s = d.find(id);
        if (!s) throw DataError("unknown sample id '" + id + "'");
        const Tensor prepared = prepare_input(s->image, mode.prep);

        for (Label cls : classes) {
            CamMap cam = compute_cam(state, prepared, cls);
            cam.sample_id = id;
            // report relevance at source-scan resolution
            if (!cam.map.same_shape(s->image))
                cam.map = bilinear_resize(cam.map, s->image.extent(0), s->image.extent(1));

            const std::string stem = id + "_" + label_name(cls);
            export_heatmap(cam, s->image, out / (stem + "_cam.png"),
                           out / (stem + "_overlay.png"));

            const fs::path mask_path = masks_dir / (id + ".pgm");
            if (fs::exists(mask_path)) {
                Tensor mask = read_image_gray(mask_path);
                if (mask.same_shape(cam.map)) {
                    double in_sum = 0, out_sum = 0;
                    long in_n = 0, out_n = 0, hot_n = 0, hot_in = 0;
                    for (std::size_t i = 0; i < mask.size(); ++i) {
                        const bool in_band = mask.data()[i] > 0.5f;
                        const float v = cam.map.data()[i];
                        (in_band ? in_sum : out_sum) += v;
                        (in_band ? in_n : out_n)++;
                        if (v >= 0.5f) {
                            ++hot_n;
                            hot_in += in_band ? 1 : 0;
                        }
                    }
                    const double mean_in = in_n ? in_sum / in_n : 0.0;
                    const double mean_out = out_n ? out_sum / out_n : 0.0;
                    std::string side;
                    side += "sample " + id + " class " + label_name(cls) + "\n";
                    side += "mean_cam_inside_band " + format_value(mean_in) + "\n";
                    side += "mean_cam_outside_band " + format_value(mean_out) + "\n";
                    side += "inside_outside_ratio " +
                            (mean_out > 0 ? format_value(mean_in / mean_out)
                                          : std::string("inf")) +
                            "\n";
                    side += "hot_region_band_overlap " +
                            (hot_n ? format_value(static_cast<double>(hot_in) / hot_n)
                                   : std::string("undefined")) +
                            "\n";
                    write_text(out / (stem + "_overlap.txt"), side);
                }
            }
            std::cout << "wrote " << stem << "_cam.png / _overlay.png\n";
        }
    }
    ConfigEcho echo;
    echo.add("manifest", a.manifest);
    echo.add("weights", a.weights);
    echo.add("out", a.out);
    echo.add("arch", a.arch);
    echo.add("reduced", a.reduced);
    echo.add("samples", a.samples);
    echo.add("classes", a.classes);
    if (!a.masks_dir.empty()) echo.add("masks-dir", a.masks_dir);
    write_text(out / "cam_config.ini", echo.text);
}

} // namespace octcnn::cli
