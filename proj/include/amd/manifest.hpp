#pragma once

#include <set>
#include <string>
#include <vector>

#include "amd/scale.hpp"

namespace amd {

enum class EyeSide { Left, Right };
enum class StereoSide { LeftOfPair, RightOfPair };

// One fundus photograph and its gold grading. Visit 0 is the study baseline.
struct ImageRecord {
    std::string patient_id;
    EyeSide eye = EyeSide::Left;
    StereoSide stereo_side = StereoSide::LeftOfPair;
    int visit = 0;
    std::string path;
    EyeFeatures gold;
};

// Bilateral pair of one patient at one visit.
struct PatientRecord {
    std::string patient_id;
    int visit = 0;
    ImageRecord left;
    ImageRecord right;
};

struct Partition {
    std::vector<ImageRecord> train;   // all visits of non-test patients
    std::vector<PatientRecord> test;  // baseline bilateral pairs of test patients
};

// CSV columns, exact order:
//   patient_id,eye,stereo_side,visit,path,drusen,pigment,late_amd
// drusen in {small_none,medium,large}; pigment/late_amd in {0,1};
// eye in {left,right}; stereo_side in {left_of_pair,right_of_pair}.
std::vector<ImageRecord> parse_manifest(const std::string& bytes);
std::string write_manifest(const std::vector<ImageRecord>& records);

// Stereo-pair reduction: the left image of the pair unless missing.
const ImageRecord& select_stereo_image(const ImageRecord* left_of_pair,
                                       const ImageRecord* right_of_pair);

// Splits records into the training pool (every record of non-test patients)
// and per-patient baseline test pairs. Non-baseline records of test patients
// are dropped. Throws DataError when a test id is unknown or a test patient
// lacks a baseline bilateral pair.
Partition make_partition(const std::vector<ImageRecord>& records,
                         const std::set<std::string>& test_patient_ids);

// One image per (patient, visit, eye), stereo-selected, in first-seen order.
std::vector<ImageRecord> training_images(const std::vector<ImageRecord>& records);

const char* eye_name(EyeSide s);
const char* stereo_name(StereoSide s);

}  // namespace amd
