#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "amd/image.hpp"
#include "amd/manifest.hpp"
#include "amd/rng.hpp"

namespace amd {

// Per-eye label probabilities for the generator.
struct SynthMix {
    std::array<double, 3> drusen = {0.45, 0.30, 0.25};  // small_none, medium, large
    double pigment = 0.35;
    double late_amd = 0.12;
};

struct SynthSpec {
    int patients = 10;
    int side = 224;
    int visits = 1;                      // visits 0..visits-1, labels fixed per eye
    double right_of_pair_rate = 0.005;   // fraction of eyes stored as the right stereo image
    SynthMix mix;
};

// Renders one eye. Drusen are yellowish disks whose radius class matches the
// label (medium 3-4.5 px, large 7-12 px at 224, scaled with side), pigment is
// dark patches, late AMD a large pale central region. Feature disks sit in an
// annulus outside the late region so nothing is occluded.
Image render_fundus(const EyeFeatures& features, int side, Rng& rng);

EyeFeatures sample_features(const SynthMix& mix, Rng& rng);

// Writes out_dir/images/*.ppm and out_dir/manifest.csv; byte-identical for a
// fixed (spec, seed). Returns the manifest records (paths relative to out_dir).
std::vector<ImageRecord> synth_generate(const SynthSpec& spec, uint64_t seed,
                                        const std::filesystem::path& out_dir);

}  // namespace amd
