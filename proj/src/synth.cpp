#include "amd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "amd/errors.hpp"

namespace amd {

namespace {

struct Rgb {
    float r, g, b;
};

constexpr Rgb kFundus{0.55f, 0.22f, 0.10f};
constexpr Rgb kDrusen{0.95f, 0.85f, 0.45f};
constexpr Rgb kPigment{0.10f, 0.05f, 0.03f};
constexpr Rgb kAtrophy{0.93f, 0.90f, 0.80f};

// Alpha-blends a soft-edged disk; edge is the width of the coverage ramp.
void paint_disk(Image& img, double cx, double cy, double radius, Rgb color,
                double opacity, double edge) {
    int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - edge)));
    int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius + edge)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - edge)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius + edge)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx;
            double dy = y + 0.5 - cy;
            double d = std::sqrt(dx * dx + dy * dy);
            double a = std::clamp((radius + edge / 2 - d) / edge, 0.0, 1.0) * opacity;
            if (a <= 0.0) continue;
            float fa = static_cast<float>(a);
            img.at(x, y, 0) = img.at(x, y, 0) * (1 - fa) + color.r * fa;
            img.at(x, y, 1) = img.at(x, y, 1) * (1 - fa) + color.g * fa;
            img.at(x, y, 2) = img.at(x, y, 2) * (1 - fa) + color.b * fa;
        }
    }
}

// Disk center in an annulus around the image center, clear of the late-AMD
// region and of the image border.
void annulus_point(int side, Rng& rng, double& cx, double& cy) {
    double r = rng.uniform(0.34, 0.46) * side;
    double a = rng.uniform(0.0, 2.0 * M_PI);
    cx = side / 2.0 + r * std::cos(a);
    cy = side / 2.0 + r * std::sin(a);
}

}  // namespace

EyeFeatures sample_features(const SynthMix& mix, Rng& rng) {
    EyeFeatures f;
    f.drusen = static_cast<DrusenClass>(
        rng.categorical({mix.drusen[0], mix.drusen[1], mix.drusen[2]}));
    f.pigment = rng.bernoulli(mix.pigment);
    f.late_amd = rng.bernoulli(mix.late_amd);
    return f;
}

Image render_fundus(const EyeFeatures& features, int side, Rng& rng) {
    // Geometry is defined at 224x224 and scaled with the requested side.
    const double s = side / 224.0;
    const double brightness = rng.uniform(0.92, 1.08);

    Image img;
    img.width = side;
    img.height = side;
    img.data.resize(static_cast<size_t>(side) * side * 3);
    const double half = side / 2.0;
    const double corner = std::sqrt(2.0) * half;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            double d = std::hypot(x + 0.5 - half, y + 0.5 - half) / corner;
            float v = static_cast<float>(brightness * (1.0 - 0.28 * d * d));
            img.at(x, y, 0) = kFundus.r * v;
            img.at(x, y, 1) = kFundus.g * v;
            img.at(x, y, 2) = kFundus.b * v;
        }
    }

    // Drusen: radius class carries the label signal.
    int count = 0;
    double r_lo = 0.0, r_hi = 0.0;
    switch (features.drusen) {
        case DrusenClass::SmallNone:
            count = static_cast<int>(rng.uniform_int(0, 4));
            r_lo = 0.8;
            r_hi = 1.5;
            break;
        case DrusenClass::Medium:
            count = static_cast<int>(rng.uniform_int(5, 8));
            r_lo = 3.0;
            r_hi = 4.5;
            break;
        case DrusenClass::Large:
            count = static_cast<int>(rng.uniform_int(8, 14));
            r_lo = 7.0;
            r_hi = 12.0;
            break;
    }
    for (int i = 0; i < count; ++i) {
        double cx, cy;
        annulus_point(side, rng, cx, cy);
        double r = rng.uniform(r_lo, r_hi) * s;
        paint_disk(img, cx, cy, r, kDrusen, rng.uniform(0.85, 1.0), 1.0);
    }

    if (features.pigment) {
        int patches = static_cast<int>(rng.uniform_int(3, 6));
        for (int i = 0; i < patches; ++i) {
            double cx, cy;
            annulus_point(side, rng, cx, cy);
            double r = rng.uniform(4.0, 8.0) * s;
            paint_disk(img, cx, cy, r, kPigment, rng.uniform(0.8, 0.95), 1.5);
        }
    }

    if (features.late_amd) {
        double r = rng.uniform(0.26, 0.32) * side;
        paint_disk(img, half, half, r, kAtrophy, 0.95, 3.0 * std::max(s, 0.3));
    }

    // Mild sensor noise, shared across channels.
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            float n = static_cast<float>(rng.uniform(-0.01, 0.01));
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = std::clamp(img.at(x, y, c) + n, 0.0f, 1.0f);
        }
    }
    return img;
}

std::vector<ImageRecord> synth_generate(const SynthSpec& spec, uint64_t seed,
                                        const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    if (ec) throw DataError("synth: cannot create output directory " +
                            (out_dir / "images").string() + ": " + ec.message());

    int width = 1;
    for (int n = spec.patients; n >= 10; n /= 10) ++width;

    std::vector<ImageRecord> records;
    for (int p = 0; p < spec.patients; ++p) {
        std::string num = std::to_string(p + 1);
        std::string pid = "p" + std::string(width - num.size(), '0') + num;

        Rng label_rng(derive_seed(seed, 0x1abe1000ULL + static_cast<uint64_t>(p)));
        EyeFeatures eyes[2] = {sample_features(spec.mix, label_rng),
                               sample_features(spec.mix, label_rng)};

        for (int v = 0; v < spec.visits; ++v) {
            for (int e = 0; e < 2; ++e) {
                EyeSide side = e == 0 ? EyeSide::Left : EyeSide::Right;
                uint64_t stream = (static_cast<uint64_t>(p) << 20) |
                                  (static_cast<uint64_t>(v) << 4) |
                                  static_cast<uint64_t>(e);
                Rng rng(derive_seed(seed, 0x10a6e000ULL + stream));

                ImageRecord rec;
                rec.patient_id = pid;
                rec.eye = side;
                rec.stereo_side = rng.bernoulli(spec.right_of_pair_rate)
                                      ? StereoSide::RightOfPair
                                      : StereoSide::LeftOfPair;
                rec.visit = v;
                rec.gold = eyes[e];
                rec.path = "images/" + pid + "_v" + std::to_string(v) + "_" +
                           eye_name(side) + ".ppm";

                Image img = render_fundus(rec.gold, spec.side, rng);
                write_ppm_file(out_dir / rec.path, img);
                records.push_back(std::move(rec));
            }
        }
    }

    std::string manifest = write_manifest(records);
    std::ofstream out(out_dir / "manifest.csv", std::ios::binary);
    if (!out) throw DataError("synth: cannot write manifest in " + out_dir.string());
    out << manifest;
    return records;
}

}  // namespace amd
