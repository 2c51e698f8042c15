#pragma once

#include <array>
#include <filesystem>

#include "amd/image.hpp"
#include "amd/net.hpp"
#include "amd/scale.hpp"

namespace amd {

// Per-eye head outputs plus the decoded risk factors. Decoding: drusen by
// argmax (ties to the lower class), binary heads thresholded at 0.5.
struct EyePrediction {
    std::array<double, 3> drusen_probs = {0, 0, 0};
    double pigment_prob = 0.0;
    double late_amd_prob = 0.0;
    EyeFeatures features;
};

struct PatientPrediction {
    SeverityScore score;
    EyePrediction left;
    EyePrediction right;
};

// The composite model: three per-eye heads sharing one input resolution.
struct PatientGrader {
    Network drusen_net;   // 3 classes
    Network pigment_net;  // 2 classes
    Network late_net;     // 2 classes

    int input_side() const { return drusen_net.in_h; }
};

// Throws DataError unless the heads have 3/2/2 classes and one resolution.
void validate_grader(const PatientGrader& grader);

EyePrediction predict_eye(const PatientGrader& grader, const Image& image);

// Scores the patient from both eyes; the per-eye details are returned so the
// score can always be traced back to its inputs.
PatientPrediction predict_patient(const PatientGrader& grader, const Image& left,
                                  const Image& right);

// Activations feeding the final dense layer (the post-ReLU 128-wide vector).
std::vector<double> embed(const Network& head, const Image& image);

// Composite checkpoint: a JSON descriptor naming three DSN1 files beside it.
void save_grader(const std::filesystem::path& descriptor_path, const PatientGrader& grader);
PatientGrader load_grader(const std::filesystem::path& descriptor_path);

}  // namespace amd
