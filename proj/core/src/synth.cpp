#include "octcnn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "octcnn/error.hpp"
#include "octcnn/image_io.hpp"

namespace octcnn {

namespace {

constexpr float kTwoPi = 6.28318530717958647692f;

/// Low-frequency undulation: three sinusoids with rng phases/amplitudes.
struct Undulation {
    float a1, f1, p1, a2, f2, p2, a3, f3, p3;

    static Undulation draw(SeededRng& rng, float amplitude) {
        Undulation u;
        u.a1 = rng.uniform(0.5f, 1.0f) * amplitude;
        u.f1 = rng.uniform(1.0f, 2.0f);
        u.p1 = rng.uniform(0.0f, kTwoPi);
        u.a2 = rng.uniform(0.2f, 0.6f) * amplitude;
        u.f2 = rng.uniform(2.0f, 4.0f);
        u.p2 = rng.uniform(0.0f, kTwoPi);
        u.a3 = rng.uniform(0.1f, 0.3f) * amplitude;
        u.f3 = rng.uniform(4.0f, 7.0f);
        u.p3 = rng.uniform(0.0f, kTwoPi);
        return u;
    }

    float at(float t) const { // t in [0,1) across the width
        return a1 * std::sin(kTwoPi * f1 * t + p1) + a2 * std::sin(kTwoPi * f2 * t + p2) +
               a3 * std::sin(kTwoPi * f3 * t + p3);
    }
};

} // namespace

void SynthConfig::validate() const {
    if (height < 16 || width < 16)
        throw ConfigError("synth extents must be >= 16, got " + std::to_string(height) + "x" +
                          std::to_string(width));
    if (glaucoma_thickness_min <= 0 || glaucoma_thickness_min > glaucoma_thickness_max ||
        normal_thickness_min <= 0 || normal_thickness_min > normal_thickness_max)
        throw ConfigError("synth thickness ranges must be positive and ordered");
    if (glaucoma_thickness_max >= normal_thickness_min)
        throw ConfigError("synth thickness ranges must be separated (glaucoma max " +
                          std::to_string(glaucoma_thickness_max) + " >= normal min " +
                          std::to_string(normal_thickness_min) + ")");
    if (normal_thickness_max > static_cast<float>(height) / 4.0f)
        throw ConfigError("synth band thickness exceeds height/4; enlarge the image or thin "
                          "the band");
    if (layer_count < 0 || noise < 0)
        throw ConfigError("synth layer_count and noise must be >= 0");
}

SynthSample generate_sample(const SynthConfig& cfg, Label label, SeededRng& rng) {
    cfg.validate();
    const int h = cfg.height, w = cfg.width;
    const float hf = static_cast<float>(h);

    // Draw order fixed: surface base/undulation, band thickness and its
    // undulation, tissue layers, then per-pixel noise.
    const float surf_base = rng.uniform(0.16f, 0.24f) * hf;
    const Undulation surf = Undulation::draw(rng, 0.02f * hf);
    const float t0 = label == Label::glaucoma
                         ? rng.uniform(cfg.glaucoma_thickness_min, cfg.glaucoma_thickness_max)
                         : rng.uniform(cfg.normal_thickness_min, cfg.normal_thickness_max);
    const Undulation band = Undulation::draw(rng, 0.4f);
    const float band_bright = rng.uniform(0.80f, 0.88f);

    std::vector<float> layer_thick(static_cast<std::size_t>(cfg.layer_count));
    std::vector<float> layer_gray(layer_thick.size());
    for (int i = 0; i < cfg.layer_count; ++i) {
        layer_thick[static_cast<std::size_t>(i)] = rng.uniform(0.02f, 0.05f) * hf;
        // alternating mid tones, modest contrast below the bright band
        const float base_gray = i % 2 == 0 ? 0.30f : 0.19f;
        layer_gray[static_cast<std::size_t>(i)] = base_gray + rng.uniform(-0.03f, 0.03f);
    }

    SynthSample out;
    out.sample.label = label;
    out.sample.image = Tensor({h, w, 1});
    out.band_mask = Tensor({h, w, 1});
    float* img = out.sample.image.data();
    float* mask = out.band_mask.data();

    for (int x = 0; x < w; ++x) {
        const float t = static_cast<float>(x) / static_cast<float>(w);
        const float y_top = surf_base + surf.at(t);
        const float thick = t0 + band.at(t);
        const float y_bot = y_top + thick;

        for (int y = 0; y < h; ++y) {
            const float yc = static_cast<float>(y) + 0.5f; // pixel center
            float v;
            if (yc < y_top) {
                v = 0.04f; // vitreous
            } else if (yc < y_bot) {
                const float depth = (yc - y_top) / thick;
                v = band_bright - 0.08f * depth;
                mask[static_cast<std::size_t>(y) * w + x] = 1.0f;
            } else {
                float boundary = y_bot;
                v = 0.10f; // default below the modeled layers
                bool placed = false;
                for (int i = 0; i < cfg.layer_count; ++i) {
                    boundary += layer_thick[static_cast<std::size_t>(i)];
                    if (yc < boundary) {
                        v = layer_gray[static_cast<std::size_t>(i)];
                        placed = true;
                        break;
                    }
                }
                if (!placed) {
                    // choroid fade toward the bottom of the scan
                    const float frac = (yc - boundary) / (hf - boundary + 1.0f);
                    v = 0.10f - 0.06f * (frac > 0.0f ? (frac < 1.0f ? frac : 1.0f) : 0.0f);
                }
            }
            img[static_cast<std::size_t>(y) * w + x] = v;
        }
    }

    if (cfg.noise > 0.0f) {
        // speckle drawn row-major after the geometry
        for (std::size_t i = 0; i < out.sample.image.size(); ++i)
            img[i] += rng.uniform(-cfg.noise, cfg.noise);
    }

    // clip and quantize to the 8-bit grid so the in-memory sample equals
    // what a PGM round-trip would yield
    for (std::size_t i = 0; i < out.sample.image.size(); ++i) {
        float v = img[i] < 0.0f ? 0.0f : (img[i] > 1.0f ? 1.0f : img[i]);
        img[i] = std::roundf(v * 255.0f) / 255.0f;
    }
    return out;
}

Dataset generate_dataset(const SynthConfig& cfg, int n_glaucoma, int n_normal,
                         int patients_per_class, const std::filesystem::path& out_dir,
                         bool write_masks) {
    cfg.validate();
    if (n_glaucoma < 1 || n_normal < 1)
        throw ConfigError("generate_dataset needs at least one sample per class");
    if (patients_per_class < 1)
        throw ConfigError("generate_dataset needs at least one patient per class");

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create '" + (out_dir / "images").string() + "'");
    if (write_masks) {
        std::filesystem::create_directories(out_dir / "masks", ec);
        if (ec) throw IoError("cannot create '" + (out_dir / "masks").string() + "'");
    }

    std::ofstream manifest(out_dir / "manifest.csv");
    if (!manifest)
        throw IoError("cannot open '" + (out_dir / "manifest.csv").string() + "' for writing");
    manifest << "sample_id,path,label,patient_id\n";

    Dataset d;
    d.manifest_path = out_dir / "manifest.csv";
    for (Label cls : {Label::glaucoma, Label::normal}) {
        const int n = cls == Label::glaucoma ? n_glaucoma : n_normal;
        const char prefix = cls == Label::glaucoma ? 'g' : 'n';
        for (int i = 0; i < n; ++i) {
            SeededRng srng(mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(cls)),
                                    static_cast<std::uint64_t>(i)));
            SynthSample s = generate_sample(cfg, cls, srng);
            char idbuf[16];
            std::snprintf(idbuf, sizeof idbuf, "%c%04d", prefix, i + 1);
            char patbuf[16];
            std::snprintf(patbuf, sizeof patbuf, "%cp%03d", prefix, i % patients_per_class + 1);
            s.sample.sample_id = idbuf;
            s.sample.patient_id = patbuf;

            const std::string rel = std::string("images/") + idbuf + ".pgm";
            write_pgm(out_dir / rel, s.sample.image);
            if (write_masks)
                write_pgm(out_dir / "masks" / (std::string(idbuf) + ".pgm"), s.band_mask);
            manifest << s.sample.sample_id << ',' << rel << ',' << label_name(cls) << ','
                     << s.sample.patient_id << '\n';
            d.samples.push_back(std::move(s.sample));
        }
    }
    manifest.close();
    if (!manifest) throw IoError("write failed for '" + d.manifest_path.string() + "'");
    return d;
}

} // namespace octcnn
