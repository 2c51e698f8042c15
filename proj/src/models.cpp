#include "amd/models.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "amd/checkpoint.hpp"
#include "amd/errors.hpp"
#include "amd/train.hpp"

namespace amd {

namespace {

Tensor image_tensor(const Image& img) {
    Tensor t = Tensor::zeros({1, 3, img.height, img.width});
    const auto px = planar_pixels(img);
    for (size_t i = 0; i < px.size(); ++i) t.data[i] = px[i];
    return t;
}

void check_resolution(const Network& net, const Image& img, const char* head) {
    if (img.width != net.in_w || img.height != net.in_h)
        throw DataError(std::string(head) + ": image is " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + ", model wants " +
                        std::to_string(net.in_w) + "x" + std::to_string(net.in_h));
}

std::vector<double> head_probs(const Network& net, const Image& img, const char* head) {
    check_resolution(net, img, head);
    Tensor out = forward(net, image_tensor(img));
    const bool has_softmax =
        !net.layers.empty() && net.layers.back().spec.kind == LayerKind::Softmax;
    Tensor probs = has_softmax ? out : softmax_rows(out);
    return {probs.data.begin(), probs.data.end()};
}

}  // namespace

void validate_grader(const PatientGrader& grader) {
    if (grader.drusen_net.num_classes() != 3)
        throw DataError("grader: drusen head must have 3 classes");
    if (grader.pigment_net.num_classes() != 2 || grader.late_net.num_classes() != 2)
        throw DataError("grader: pigment and late-AMD heads must have 2 classes");
    const Network& d = grader.drusen_net;
    for (const Network* n : {&grader.pigment_net, &grader.late_net})
        if (n->in_h != d.in_h || n->in_w != d.in_w || n->in_channels != d.in_channels)
            throw DataError("grader: heads disagree on input resolution");
}

EyePrediction predict_eye(const PatientGrader& grader, const Image& image) {
    EyePrediction pred;
    auto dp = head_probs(grader.drusen_net, image, "drusen_net");
    for (int i = 0; i < 3; ++i) pred.drusen_probs[i] = dp[i];
    pred.pigment_prob = head_probs(grader.pigment_net, image, "pigment_net")[1];
    pred.late_amd_prob = head_probs(grader.late_net, image, "late_net")[1];

    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (pred.drusen_probs[i] > pred.drusen_probs[best]) best = i;
    pred.features.drusen = static_cast<DrusenClass>(best);
    pred.features.pigment = pred.pigment_prob >= 0.5;
    pred.features.late_amd = pred.late_amd_prob >= 0.5;
    return pred;
}

PatientPrediction predict_patient(const PatientGrader& grader, const Image& left,
                                  const Image& right) {
    PatientPrediction pred;
    pred.left = predict_eye(grader, left);
    pred.right = predict_eye(grader, right);
    pred.score = simplified_score(pred.left.features, pred.right.features);
    return pred;
}

std::vector<double> embed(const Network& head, const Image& image) {
    check_resolution(head, image, "embed");
    size_t last_dense = head.layers.size();
    for (size_t i = head.layers.size(); i-- > 0;)
        if (head.layers[i].spec.kind == LayerKind::Dense) {
            last_dense = i;
            break;
        }
    if (last_dense == head.layers.size()) throw DataError("embed: no dense layer");
    const int width = head.layers[last_dense].weights.dim(1);
    if (width != 128)
        throw DataError("embed: penultimate width is " + std::to_string(width) +
                        ", expected 128");

    ForwardCache cache;
    forward(head, image_tensor(image), &cache);
    const Tensor& act = cache.acts[last_dense];  // input to the final dense layer
    return {act.data.begin(), act.data.end()};
}

void save_grader(const std::filesystem::path& descriptor_path, const PatientGrader& grader) {
    validate_grader(grader);
    auto dir = descriptor_path.parent_path();
    save_network(dir / "drusen.dsn", grader.drusen_net);
    save_network(dir / "pigment.dsn", grader.pigment_net);
    save_network(dir / "late_amd.dsn", grader.late_net);

    nlohmann::json desc;
    desc["schema_version"] = 1;
    desc["heads"] = {{"drusen", "drusen.dsn"},
                     {"pigment", "pigment.dsn"},
                     {"late_amd", "late_amd.dsn"}};
    desc["input_side"] = grader.input_side();
    atomic_write_file(descriptor_path, desc.dump(2) + "\n");
}

PatientGrader load_grader(const std::filesystem::path& descriptor_path) {
    std::ifstream in(descriptor_path);
    if (!in) throw DataError("cannot open grader descriptor: " + descriptor_path.string());
    nlohmann::json desc;
    try {
        in >> desc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("grader descriptor " + descriptor_path.string() + ": " + e.what());
    }
    if (!desc.contains("heads")) throw DataError("grader descriptor: missing 'heads'");
    auto dir = descriptor_path.parent_path();
    PatientGrader grader;
    grader.drusen_net = load_network(dir / desc["heads"].value("drusen", "drusen.dsn"));
    grader.pigment_net = load_network(dir / desc["heads"].value("pigment", "pigment.dsn"));
    grader.late_net = load_network(dir / desc["heads"].value("late_amd", "late_amd.dsn"));
    validate_grader(grader);
    return grader;
}

}  // namespace amd
