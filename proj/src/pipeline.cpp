#include "amd/pipeline.hpp"

#include <algorithm>

#include "amd/errors.hpp"
#include "amd/synth.hpp"

namespace amd {

uint64_t stable_id(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Image preprocess_image(const std::filesystem::path& path, int side) {
    Image img = read_image_file(path);
    return resize_bilinear(crop_square(img), side);
}

int head_classes(HeadKind h) { return h == HeadKind::Drusen ? 3 : 2; }

int head_label(HeadKind h, const EyeFeatures& gold) {
    switch (h) {
        case HeadKind::Drusen: return static_cast<int>(gold.drusen);
        case HeadKind::Pigment: return gold.pigment ? 1 : 0;
        case HeadKind::LateAmd: return gold.late_amd ? 1 : 0;
    }
    return 0;
}

const char* head_name(HeadKind h) {
    switch (h) {
        case HeadKind::Drusen: return "drusen";
        case HeadKind::Pigment: return "pigment";
        case HeadKind::LateAmd: return "late_amd";
    }
    return "?";
}

const Network& head_network(const PatientGrader& grader, HeadKind h) {
    switch (h) {
        case HeadKind::Drusen: return grader.drusen_net;
        case HeadKind::Pigment: return grader.pigment_net;
        case HeadKind::LateAmd: return grader.late_net;
    }
    return grader.drusen_net;
}

ImageStore load_image_store(const std::vector<ImageRecord>& records,
                            const std::filesystem::path& image_root, int side) {
    ImageStore store;
    store.side = side;
    const size_t per = static_cast<size_t>(side) * side * 3;
    store.pixels->reserve(records.size() * per);
    for (const auto& rec : records) {
        Image img = preprocess_image(image_root / rec.path, side);
        auto px = planar_pixels(img);
        ImageStore::Item item;
        item.patient_id = rec.patient_id;
        item.path = rec.path;
        item.gold = rec.gold;
        item.offset = store.pixels->size();
        store.pixels->insert(store.pixels->end(), px.begin(), px.end());
        store.items.push_back(std::move(item));
    }
    return store;
}

std::pair<Dataset, Dataset> head_datasets(const ImageStore& store, HeadKind head,
                                          const std::set<std::string>& holdout_patients) {
    Dataset train, holdout;
    for (Dataset* ds : {&train, &holdout}) {
        ds->channels = 3;
        ds->height = store.side;
        ds->width = store.side;
        ds->num_classes = head_classes(head);
        ds->store = store.pixels;
    }
    for (const auto& item : store.items) {
        Dataset::Entry e;
        e.offset = item.offset;
        e.label = head_label(head, item.gold);
        e.patient_id = item.patient_id;
        if (holdout_patients.count(item.patient_id)) holdout.entries.push_back(std::move(e));
        else train.entries.push_back(std::move(e));
    }
    return {std::move(train), std::move(holdout)};
}

namespace {

std::set<std::string> pick_patients(std::vector<std::string> ids, double fraction,
                                    uint64_t seed, uint64_t stream) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) return {};
    Rng rng(derive_seed(seed, stream));
    rng.shuffle(ids);
    size_t take = static_cast<size_t>(
        std::ceil(fraction * static_cast<double>(ids.size())));
    take = std::clamp<size_t>(take, 1, ids.size());
    return {ids.begin(), ids.begin() + take};
}

}  // namespace

std::set<std::string> choose_holdout_patients(const ImageStore& store, double fraction,
                                              uint64_t seed) {
    std::vector<std::string> ids;
    ids.reserve(store.items.size());
    for (const auto& item : store.items) ids.push_back(item.patient_id);
    return pick_patients(std::move(ids), fraction, seed, 0x401d07ULL);
}

std::set<std::string> choose_test_patients(const std::vector<ImageRecord>& records,
                                           double fraction, uint64_t seed) {
    std::vector<std::string> ids;
    ids.reserve(records.size());
    for (const auto& r : records) ids.push_back(r.patient_id);
    return pick_patients(std::move(ids), fraction, seed, 0x7e57ULL);
}

std::vector<PatientEval> evaluate_patients(const PatientGrader& grader,
                                           const std::vector<PatientRecord>& test,
                                           const std::filesystem::path& image_root) {
    const int side = grader.input_side();
    std::vector<PatientEval> out;
    out.reserve(test.size());
    for (const auto& patient : test) {
        Image left = preprocess_image(image_root / patient.left.path, side);
        Image right = preprocess_image(image_root / patient.right.path, side);
        PatientPrediction pred = predict_patient(grader, left, right);

        PatientEval e;
        e.patient_id = patient.patient_id;
        e.gold_left = patient.left.gold;
        e.gold_right = patient.right.gold;
        e.gold_score = simplified_score(e.gold_left, e.gold_right).value;
        e.pred_score = pred.score.value;
        e.left = pred.left;
        e.right = pred.right;
        out.push_back(std::move(e));
    }
    return out;
}

Image render_pretext(int count_class, int side, Rng& rng) {
    if (count_class < 0 || count_class > 2) throw DataError("pretext: class out of range");
    static constexpr int kCountLo[3] = {1, 8, 16};
    static constexpr int kCountHi[3] = {4, 12, 24};
    const double s = side / 224.0;

    EyeFeatures plain;  // background only
    Image img = render_fundus(plain, side, rng);
    int count = static_cast<int>(rng.uniform_int(kCountLo[count_class],
                                                 kCountHi[count_class]));
    for (int i = 0; i < count; ++i) {
        double cx = rng.uniform(0.12, 0.88) * side;
        double cy = rng.uniform(0.12, 0.88) * side;
        double r = rng.uniform(3.0, 9.0) * s;
        float shade = static_cast<float>(rng.uniform(0.55, 0.95));
        for (int y = std::max(0, static_cast<int>(cy - r - 1));
             y <= std::min(side - 1, static_cast<int>(cy + r + 1)); ++y)
            for (int x = std::max(0, static_cast<int>(cx - r - 1));
                 x <= std::min(side - 1, static_cast<int>(cx + r + 1)); ++x) {
                double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
                double a = std::clamp(r + 0.5 - d, 0.0, 1.0);
                if (a <= 0) continue;
                float fa = static_cast<float>(a);
                img.at(x, y, 0) = img.at(x, y, 0) * (1 - fa) + shade * fa;
                img.at(x, y, 1) = img.at(x, y, 1) * (1 - fa) + shade * 0.9f * fa;
                img.at(x, y, 2) = img.at(x, y, 2) * (1 - fa) + shade * 0.5f * fa;
            }
    }
    return img;
}

Dataset pretext_dataset(int images_per_class, int side, uint64_t seed) {
    Dataset ds;
    ds.channels = 3;
    ds.height = side;
    ds.width = side;
    ds.num_classes = 3;
    for (int cls = 0; cls < 3; ++cls)
        for (int i = 0; i < images_per_class; ++i) {
            Rng rng(derive_seed(seed, 0x94e7e87ULL + static_cast<uint64_t>(cls) * 100000 +
                                          static_cast<uint64_t>(i)));
            Image img = render_pretext(cls, side, rng);
            ds.add(planar_pixels(img), cls, "pretext");
        }
    return ds;
}

}  // namespace amd
