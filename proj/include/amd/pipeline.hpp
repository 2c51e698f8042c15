#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "amd/manifest.hpp"
#include "amd/models.hpp"
#include "amd/train.hpp"

namespace amd {

// FNV-1a; stable point/record ids for embedding layouts.
uint64_t stable_id(const std::string& s);

// decode -> centered square crop -> bilinear resize.
Image preprocess_image(const std::filesystem::path& path, int side);

enum class HeadKind { Drusen = 0, Pigment = 1, LateAmd = 2 };

int head_classes(HeadKind h);
int head_label(HeadKind h, const EyeFeatures& gold);
const char* head_name(HeadKind h);
const Network& head_network(const PatientGrader& grader, HeadKind h);

// Preprocessed per-eye images with gold labels, pixels in one shared store.
struct ImageStore {
    int side = 0;
    std::shared_ptr<std::vector<float>> pixels = std::make_shared<std::vector<float>>();

    struct Item {
        std::string patient_id;
        std::string path;
        EyeFeatures gold;
        size_t offset = 0;
    };
    std::vector<Item> items;
};

ImageStore load_image_store(const std::vector<ImageRecord>& records,
                            const std::filesystem::path& image_root, int side);

// Label view of a store for one head. Patients listed in `holdout_patients`
// go to the second dataset.
std::pair<Dataset, Dataset> head_datasets(const ImageStore& store, HeadKind head,
                                          const std::set<std::string>& holdout_patients);

// Deterministic holdout choice: shuffled unique patient ids, first ceil(f*n).
std::set<std::string> choose_holdout_patients(const ImageStore& store, double fraction,
                                              uint64_t seed);

// Deterministic test-patient choice from a manifest (used when the config
// does not list explicit ids).
std::set<std::string> choose_test_patients(const std::vector<ImageRecord>& records,
                                           double fraction, uint64_t seed);

// Per-patient gold and predicted scores with full per-eye traces.
struct PatientEval {
    std::string patient_id;
    int gold_score = 0;
    int pred_score = 0;
    EyeFeatures gold_left, gold_right;
    EyePrediction left, right;
};

std::vector<PatientEval> evaluate_patients(const PatientGrader& grader,
                                           const std::vector<PatientRecord>& test,
                                           const std::filesystem::path& image_root);

// Pretext task for transfer-learning experiments: classify images into three
// disk-count buckets. Weight provenance stand-in for natural-image pretraining.
Image render_pretext(int count_class, int side, Rng& rng);
Dataset pretext_dataset(int images_per_class, int side, uint64_t seed);

}  // namespace amd
