#include "amd/manifest.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "amd/errors.hpp"

namespace amd {

namespace {

constexpr const char* kHeader = "patient_id,eye,stereo_side,visit,path,drusen,pigment,late_amd";

[[noreturn]] void row_error(size_t row, const std::string& what) {
    throw DataError("manifest row " + std::to_string(row) + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

int parse_int(const std::string& s, size_t row, const char* what) {
    if (s.empty()) row_error(row, std::string("empty ") + what);
    for (size_t i = 0; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            row_error(row, std::string("non-integer ") + what + " '" + s + "'");
    return std::stoi(s);
}

bool parse_flag(const std::string& s, size_t row, const char* what) {
    if (s == "0") return false;
    if (s == "1") return true;
    row_error(row, std::string("bad ") + what + " '" + s + "' (want 0 or 1)");
}

}  // namespace

std::vector<ImageRecord> parse_manifest(const std::string& bytes) {
    std::istringstream in(bytes);
    std::string line;
    if (!std::getline(in, line)) throw DataError("manifest: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw DataError("manifest: bad header '" + line + "', expected '" + kHeader + "'");

    std::vector<ImageRecord> records;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 8)
            row_error(row, "expected 8 columns, got " + std::to_string(f.size()));

        ImageRecord r;
        r.patient_id = f[0];
        if (r.patient_id.empty()) row_error(row, "empty patient_id");

        if (f[1] == "left") r.eye = EyeSide::Left;
        else if (f[1] == "right") r.eye = EyeSide::Right;
        else row_error(row, "bad eye '" + f[1] + "'");

        if (f[2] == "left_of_pair") r.stereo_side = StereoSide::LeftOfPair;
        else if (f[2] == "right_of_pair") r.stereo_side = StereoSide::RightOfPair;
        else row_error(row, "bad stereo_side '" + f[2] + "'");

        r.visit = parse_int(f[3], row, "visit");
        r.path = f[4];
        if (r.path.empty()) row_error(row, "empty path");

        if (f[5] == "small_none") r.gold.drusen = DrusenClass::SmallNone;
        else if (f[5] == "medium") r.gold.drusen = DrusenClass::Medium;
        else if (f[5] == "large") r.gold.drusen = DrusenClass::Large;
        else row_error(row, "bad drusen '" + f[5] + "'");

        r.gold.pigment = parse_flag(f[6], row, "pigment");
        r.gold.late_amd = parse_flag(f[7], row, "late_amd");
        records.push_back(std::move(r));
    }
    return records;
}

std::string write_manifest(const std::vector<ImageRecord>& records) {
    std::string out = kHeader;
    out += '\n';
    for (const auto& r : records) {
        out += r.patient_id;
        out += ',';
        out += eye_name(r.eye);
        out += ',';
        out += stereo_name(r.stereo_side);
        out += ',';
        out += std::to_string(r.visit);
        out += ',';
        out += r.path;
        out += ',';
        out += drusen_name(r.gold.drusen);
        out += ',';
        out += r.gold.pigment ? '1' : '0';
        out += ',';
        out += r.gold.late_amd ? '1' : '0';
        out += '\n';
    }
    return out;
}

const ImageRecord& select_stereo_image(const ImageRecord* left_of_pair,
                                       const ImageRecord* right_of_pair) {
    if (left_of_pair) return *left_of_pair;
    if (right_of_pair) return *right_of_pair;
    throw DataError("stereo pair: both images missing");
}

namespace {

// Stereo-selected record of one eye at one visit, or nullptr if absent.
const ImageRecord* pick_eye(const std::vector<const ImageRecord*>& group) {
    const ImageRecord* left = nullptr;
    const ImageRecord* right = nullptr;
    for (const auto* r : group) {
        if (r->stereo_side == StereoSide::LeftOfPair && !left) left = r;
        if (r->stereo_side == StereoSide::RightOfPair && !right) right = r;
    }
    if (!left && !right) return nullptr;
    return &select_stereo_image(left, right);
}

}  // namespace

Partition make_partition(const std::vector<ImageRecord>& records,
                         const std::set<std::string>& test_patient_ids) {
    std::set<std::string> known;
    for (const auto& r : records) known.insert(r.patient_id);
    std::string unknown;
    for (const auto& id : test_patient_ids)
        if (!known.count(id)) unknown += unknown.empty() ? id : ", " + id;
    if (!unknown.empty())
        throw DataError("partition: test patient ids not in manifest: " + unknown);

    Partition part;
    // patient -> eye -> stereo-side records at baseline
    std::map<std::string, std::map<EyeSide, std::vector<const ImageRecord*>>> baseline;
    for (const auto& r : records) {
        if (test_patient_ids.count(r.patient_id)) {
            if (r.visit == 0) baseline[r.patient_id][r.eye].push_back(&r);
        } else {
            part.train.push_back(r);
        }
    }

    std::string incomplete;
    for (const auto& id : test_patient_ids) {
        auto it = baseline.find(id);
        const ImageRecord* left = nullptr;
        const ImageRecord* right = nullptr;
        if (it != baseline.end()) {
            auto l = it->second.find(EyeSide::Left);
            auto r = it->second.find(EyeSide::Right);
            if (l != it->second.end()) left = pick_eye(l->second);
            if (r != it->second.end()) right = pick_eye(r->second);
        }
        if (!left || !right) {
            incomplete += incomplete.empty() ? id : ", " + id;
            continue;
        }
        part.test.push_back(PatientRecord{id, 0, *left, *right});
    }
    if (!incomplete.empty())
        throw DataError("partition: test patients lack a baseline bilateral pair: " +
                        incomplete);
    return part;
}

std::vector<ImageRecord> training_images(const std::vector<ImageRecord>& records) {
    struct Key {
        std::string patient;
        int visit;
        EyeSide eye;
        bool operator<(const Key& o) const {
            if (patient != o.patient) return patient < o.patient;
            if (visit != o.visit) return visit < o.visit;
            return eye < o.eye;
        }
    };
    std::map<Key, std::vector<const ImageRecord*>> groups;
    std::vector<Key> order;
    for (const auto& r : records) {
        Key k{r.patient_id, r.visit, r.eye};
        auto [it, inserted] = groups.try_emplace(k);
        it->second.push_back(&r);
        if (inserted) order.push_back(k);
    }
    std::vector<ImageRecord> out;
    out.reserve(order.size());
    for (const auto& k : order) {
        const ImageRecord* r = pick_eye(groups[k]);
        if (r) out.push_back(*r);
    }
    return out;
}

const char* eye_name(EyeSide s) { return s == EyeSide::Left ? "left" : "right"; }

const char* stereo_name(StereoSide s) {
    return s == StereoSide::LeftOfPair ? "left_of_pair" : "right_of_pair";
}

}  // namespace amd
