#include "amd/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "amd/bootstrap.hpp"
#include "amd/checkpoint.hpp"
#include "amd/errors.hpp"
#include "amd/metrics.hpp"
#include "amd/pipeline.hpp"
#include "amd/saliency.hpp"
#include "amd/svg.hpp"
#include "amd/synth.hpp"
#include "amd/tsne.hpp"

namespace amd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- Config

Config::Config() : root_(json::object()) {}

Config Config::from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    Config cfg;
    try {
        in >> cfg.root_;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!cfg.root_.is_object()) throw ConfigError("config root must be a JSON object");
    return cfg;
}

const json* Config::find(const std::string& key) const {
    const json* cur = &root_;
    size_t start = 0;
    while (start <= key.size()) {
        size_t dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (!cur->is_object() || !cur->contains(part)) return nullptr;
        cur = &(*cur)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

int64_t Config::get_int(const std::string& key, int64_t def) const {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_integer())
        throw ConfigError("config key '" + key + "': expected integer");
    return v->get<int64_t>();
}

double Config::get_double(const std::string& key, double def) const {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError("config key '" + key + "': expected number");
    return v->get<double>();
}

bool Config::get_bool(const std::string& key, bool def) const {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError("config key '" + key + "': expected boolean");
    return v->get<bool>();
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError("config key '" + key + "': expected string");
    return v->get<std::string>();
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& def) const {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError("config key '" + key + "': expected array");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number())
            throw ConfigError("config key '" + key + "': expected numeric array");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::string> Config::get_strings(const std::string& key,
                                             const std::vector<std::string>& def) const {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError("config key '" + key + "': expected array");
    std::vector<std::string> out;
    for (const auto& e : *v) {
        if (!e.is_string())
            throw ConfigError("config key '" + key + "': expected string array");
        out.push_back(e.get<std::string>());
    }
    return out;
}

void Config::set(const std::string& key, json value) {
    json* cur = &root_;
    size_t start = 0;
    while (true) {
        size_t dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (dot == std::string::npos) {
            (*cur)[part] = std::move(value);
            return;
        }
        if (!cur->contains(part) || !(*cur)[part].is_object()) (*cur)[part] = json::object();
        cur = &(*cur)[part];
        start = dot + 1;
    }
}

fs::path RunContext::manifest_path() const {
    std::string p = config.get_string("data.manifest", "");
    return p.empty() ? dataset_dir() / "manifest.csv" : fs::path(p);
}

fs::path RunContext::image_root() const {
    std::string p = config.get_string("data.image_root", "");
    return p.empty() ? dataset_dir() : fs::path(p);
}

// ---------------------------------------------------------------- helpers

namespace {

void write_json_file(const fs::path& path, const json& doc) {
    atomic_write_file(path, doc.dump(2) + "\n");
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return doc;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<ImageRecord> load_manifest_file(const fs::path& path) {
    return parse_manifest(read_text_file(path));
}

SynthSpec synth_spec_from(const RunContext& ctx) {
    const Config& c = ctx.config;
    SynthSpec spec;
    spec.patients = static_cast<int>(c.get_int("synth.patients", 120));
    spec.side = static_cast<int>(c.get_int("synth.side", 64));
    spec.visits = static_cast<int>(c.get_int("synth.visits", 1));
    spec.right_of_pair_rate = c.get_double("synth.right_of_pair_rate", 0.005);
    auto drusen = c.get_doubles("synth.mix.drusen", {0.45, 0.30, 0.25});
    if (drusen.size() != 3)
        throw ConfigError("config key 'synth.mix.drusen': expected 3 probabilities");
    spec.mix.drusen = {drusen[0], drusen[1], drusen[2]};
    spec.mix.pigment = c.get_double("synth.mix.pigment", 0.35);
    spec.mix.late_amd = c.get_double("synth.mix.late_amd", 0.12);
    if (spec.patients < 1) throw ConfigError("config key 'synth.patients': must be >= 1");
    if (spec.side < 16) throw ConfigError("config key 'synth.side': must be >= 16");
    return spec;
}

std::set<std::string> test_ids_for(const RunContext& ctx,
                                   const std::vector<ImageRecord>& records) {
    auto explicit_ids = ctx.config.get_strings("data.test_patient_ids", {});
    if (!explicit_ids.empty()) return {explicit_ids.begin(), explicit_ids.end()};

    fs::path saved = ctx.out_dir / "partition.json";
    if (fs::exists(saved)) {
        json doc = load_json_file(saved);
        std::set<std::string> ids;
        for (const auto& v : doc.value("test_patient_ids", json::array()))
            ids.insert(v.get<std::string>());
        if (!ids.empty()) return ids;
    }
    double fraction = ctx.config.get_double("data.test_fraction", 0.2);
    if (fraction <= 0.0 || fraction >= 1.0)
        throw ConfigError("config key 'data.test_fraction': must be in (0, 1)");
    return choose_test_patients(records, fraction, ctx.seed);
}

json metric_json(double value, const std::optional<Ci>& ci = std::nullopt) {
    json m;
    m["value"] = value;
    if (ci) m["ci"] = {ci->lo, ci->hi};
    return m;
}

// Bootstrap the four summary metrics of a confusion-matrix-valued sample.
// make_cm builds the matrix for a patient index resample.
json bootstrap_report(size_t n_patients,
                      const std::function<ConfusionMatrix(const std::vector<size_t>&)>& make_cm,
                      int n_resamples, uint64_t seed, int* redraws_out) {
    auto metric = [&](auto fn) {
        return bootstrap(
            n_patients,
            [&](const std::vector<size_t>& idx) -> std::optional<double> {
                ConfusionMatrix cm = make_cm(idx);
                double v = fn(cm);
                if (!std::isfinite(v)) return std::nullopt;
                return v;
            },
            n_resamples, seed);
    };

    BootstrapResult acc = metric([](const ConfusionMatrix& cm) { return accuracy(cm); });
    BootstrapResult sens =
        metric([](const ConfusionMatrix& cm) { return macro_sensitivity(cm); });
    BootstrapResult spec =
        metric([](const ConfusionMatrix& cm) { return macro_specificity(cm); });
    BootstrapResult kap = metric([](const ConfusionMatrix& cm) { return cohen_kappa(cm); });

    if (redraws_out)
        *redraws_out = acc.redraws + sens.redraws + spec.redraws + kap.redraws;

    json out;
    out["accuracy"] = metric_json(acc.point, Ci{acc.lo, acc.hi});
    out["sensitivity"] = metric_json(sens.point, Ci{sens.lo, sens.hi});
    out["specificity"] = metric_json(spec.point, Ci{spec.lo, spec.hi});
    out["kappa"] = metric_json(kap.point, Ci{kap.lo, kap.hi});
    out["kappa_band"] = agreement_band(kap.point);
    return out;
}

struct HeadEvalData {
    std::vector<int> gold;          // per image, grouped two per patient
    std::vector<int> pred;
    std::vector<double> pos_score;  // P(large) / P(present)
    std::vector<int> pos_label;
};

ConfusionMatrix cm_from_pairs(const std::vector<int>& gold, const std::vector<int>& pred,
                              int k, const std::vector<size_t>& patients) {
    ConfusionMatrix cm(k);
    for (size_t p : patients) {
        for (size_t e = 0; e < 2; ++e) {
            size_t i = 2 * p + e;
            ++cm.at(gold[i], pred[i]);
        }
    }
    return cm;
}

int drusen_argmax(const std::array<double, 3>& probs) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (probs[i] > probs[best]) best = i;
    return best;
}

// Patient-level and per-head reports with bootstrap CIs; writes confusion and
// ROC artifacts beside the metrics when out_dir is non-empty.
json evaluation_report(const std::vector<PatientEval>& evals, int n_resamples,
                       uint64_t seed, const fs::path& out_dir) {
    const size_t n = evals.size();
    if (n == 0) throw DataError("eval: empty test set");

    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["bootstrap_resamples"] = n_resamples;

    // ---- patient-level severity scores
    std::vector<int> gold_scores(n), pred_scores(n);
    for (size_t i = 0; i < n; ++i) {
        gold_scores[i] = evals[i].gold_score;
        pred_scores[i] = evals[i].pred_score;
    }
    auto patient_cm = [&](const std::vector<size_t>& idx) {
        ConfusionMatrix cm(6);
        for (size_t i : idx) ++cm.at(gold_scores[i], pred_scores[i]);
        return cm;
    };
    int redraws = 0;
    json patient = bootstrap_report(n, patient_cm, n_resamples,
                                    derive_seed(seed, 0xeva1ULL), &redraws);
    patient["n_patients"] = n;
    patient["bootstrap_redraws"] = redraws;
    {
        std::vector<size_t> full(n);
        std::iota(full.begin(), full.end(), size_t{0});
        ConfusionMatrix cm = patient_cm(full);
        patient["kappa_quadratic"] = weighted_kappa_quadratic(cm);
        json dist_gold = json::array(), dist_pred = json::array();
        for (int s = 0; s <= 5; ++s) {
            int64_t g = 0, p = 0;
            for (size_t i = 0; i < n; ++i) {
                g += gold_scores[i] == s;
                p += pred_scores[i] == s;
            }
            dist_gold.push_back(g);
            dist_pred.push_back(p);
        }
        patient["score_distribution"] = {{"gold", dist_gold}, {"pred", dist_pred}};
        if (!out_dir.empty()) {
            atomic_write_file(out_dir / "confusion_patient.csv", cm.to_csv());
            patient["confusion_csv"] = "confusion_patient.csv";
        }
    }
    doc["patient"] = std::move(patient);

    // ---- per-head image-level metrics
    json heads;
    for (HeadKind head : {HeadKind::Drusen, HeadKind::Pigment, HeadKind::LateAmd}) {
        HeadEvalData data;
        for (const auto& e : evals) {
            for (int side = 0; side < 2; ++side) {
                const EyeFeatures& gold = side == 0 ? e.gold_left : e.gold_right;
                const EyePrediction& pred = side == 0 ? e.left : e.right;
                data.gold.push_back(head_label(head, gold));
                switch (head) {
                    case HeadKind::Drusen:
                        data.pred.push_back(drusen_argmax(pred.drusen_probs));
                        data.pos_score.push_back(pred.drusen_probs[2]);
                        data.pos_label.push_back(gold.drusen == DrusenClass::Large ? 1 : 0);
                        break;
                    case HeadKind::Pigment:
                        data.pred.push_back(pred.features.pigment ? 1 : 0);
                        data.pos_score.push_back(pred.pigment_prob);
                        data.pos_label.push_back(gold.pigment ? 1 : 0);
                        break;
                    case HeadKind::LateAmd:
                        data.pred.push_back(pred.features.late_amd ? 1 : 0);
                        data.pos_score.push_back(pred.late_amd_prob);
                        data.pos_label.push_back(gold.late_amd ? 1 : 0);
                        break;
                }
            }
        }
        const int k = head_classes(head);
        auto head_cm = [&](const std::vector<size_t>& idx) {
            return cm_from_pairs(data.gold, data.pred, k, idx);
        };
        int head_redraws = 0;
        json h = bootstrap_report(n, head_cm, n_resamples,
                                  derive_seed(seed, 0x4ead0ULL + static_cast<int>(head)),
                                  &head_redraws);
        h["n_images"] = 2 * n;
        h["bootstrap_redraws"] = head_redraws;

        bool both_classes = false;
        for (int v : data.pos_label)
            if (v != data.pos_label[0]) both_classes = true;
        if (both_classes) {
            RocCurve roc = roc_auc(data.pos_score, data.pos_label);
            h["auc"] = roc.auc;
            if (!out_dir.empty()) {
                std::string name = std::string("roc_") + head_name(head);
                atomic_write_file(out_dir / (name + ".csv"), roc.to_csv());
                atomic_write_file(out_dir / (name + ".svg"),
                                  svg_roc(roc, std::string(head_name(head)) + " ROC"));
                h["roc_csv"] = name + ".csv";
            }
        }
        if (!out_dir.empty()) {
            std::vector<size_t> full(n);
            std::iota(full.begin(), full.end(), size_t{0});
            std::string name = std::string("confusion_") + head_name(head);
            atomic_write_file(out_dir / (name + ".csv"), head_cm(full).to_csv());
            h["confusion_csv"] = name + ".csv";
        }
        heads[head_name(head)] = std::move(h);
    }
    doc["heads"] = std::move(heads);
    return doc;
}

struct HeadTrainOutput {
    Network net;
    TrainResult result;
};

TrainConfig train_config_from(const RunContext& ctx) {
    TrainConfig cfg;
    cfg.batch_size = static_cast<int>(ctx.config.get_int("train.batch_size", 32));
    cfg.max_epochs = static_cast<int>(ctx.config.get_int("train.max_epochs", 5));
    cfg.adam.learning_rate = ctx.config.get_double("train.learning_rate", 1e-4);
    cfg.early_stop = ctx.config.get_bool("train.early_stop", true);
    if (cfg.batch_size < 1) throw ConfigError("config key 'train.batch_size': must be >= 1");
    if (cfg.max_epochs < 1) throw ConfigError("config key 'train.max_epochs': must be >= 1");
    return cfg;
}

int train_side_from(const RunContext& ctx) {
    int side = static_cast<int>(ctx.config.get_int("train.side", 64));
    if (side < 16) throw ConfigError("config key 'train.side': must be >= 16");
    return side;
}

// Trains the three heads concurrently; each head has its own seeded stream.
PatientGrader train_heads(const ImageStore& store,
                          const std::set<std::string>& holdout_patients,
                          Strategy strategy, const Network* pretrained,
                          const TrainConfig& base_cfg, uint64_t seed,
                          TrainResult results[3]) {
    Network nets[3];
    std::exception_ptr errors[3] = {nullptr, nullptr, nullptr};

    auto run_head = [&](int h) {
        try {
            HeadKind head = static_cast<HeadKind>(h);
            auto [train_set, holdout] = head_datasets(store, head, holdout_patients);
            Network net = build_strategy(strategy, store.side, head_classes(head),
                                         pretrained, derive_seed(seed, 0x141700ULL + h));
            TrainConfig cfg = base_cfg;
            cfg.seed = derive_seed(seed, 0x7a41ULL + h);
            results[h] = train(net, train_set, holdout, cfg);
            nets[h] = std::move(net);
        } catch (...) {
            errors[h] = std::current_exception();
        }
    };

    std::vector<std::thread> threads;
    for (int h = 0; h < 3; ++h) threads.emplace_back(run_head, h);
    for (auto& t : threads) t.join();
    for (int h = 0; h < 3; ++h)
        if (errors[h]) std::rethrow_exception(errors[h]);

    PatientGrader grader;
    grader.drusen_net = std::move(nets[0]);
    grader.pigment_net = std::move(nets[1]);
    grader.late_net = std::move(nets[2]);
    return grader;
}

json history_json(const TrainResult results[3]) {
    json doc;
    for (int h = 0; h < 3; ++h) {
        json epochs = json::array();
        for (const auto& s : results[h].history)
            epochs.push_back({{"epoch", s.epoch},
                              {"train_loss", s.train_loss},
                              {"holdout_accuracy", s.holdout_accuracy}});
        json entry;
        entry["epochs"] = std::move(epochs);
        entry["warnings"] = results[h].warnings;
        doc[head_name(static_cast<HeadKind>(h))] = std::move(entry);
    }
    return doc;
}

Network train_pretext_backbone(const RunContext& ctx, int side) {
    int per_class = static_cast<int>(ctx.config.get_int("train.pretext.images_per_class", 60));
    int epochs = static_cast<int>(ctx.config.get_int("train.pretext.epochs", 2));
    Dataset all = pretext_dataset(per_class, side, derive_seed(ctx.seed, 0x94e7ULL));

    Dataset train_set = all, holdout = all;
    train_set.entries.clear();
    holdout.entries.clear();
    for (size_t i = 0; i < all.entries.size(); ++i) {
        if (i % 10 == 9) holdout.entries.push_back(all.entries[i]);
        else train_set.entries.push_back(all.entries[i]);
    }

    Network net = make_backbone(side, 3, derive_seed(ctx.seed, 0xbacbULL));
    TrainConfig cfg = train_config_from(ctx);
    cfg.max_epochs = epochs;
    cfg.early_stop = false;
    cfg.seed = derive_seed(ctx.seed, 0x94e8ULL);
    train(net, train_set, holdout, cfg);
    return net;
}

std::string ci_cell(const json& metric) {
    char buf[64];
    double v = metric.at("value").get<double>();
    if (metric.contains("ci")) {
        std::snprintf(buf, sizeof buf, "%.3f (%.3f-%.3f)", v, metric["ci"][0].get<double>(),
                      metric["ci"][1].get<double>());
    } else {
        std::snprintf(buf, sizeof buf, "%.3f", v);
    }
    return buf;
}

}  // namespace

// ---------------------------------------------------------------- commands

void cmd_synth(const RunContext& ctx) {
    SynthSpec spec = synth_spec_from(ctx);
    auto records = synth_generate(spec, ctx.seed, ctx.dataset_dir());

    // patient score distribution implied by the gold labels
    std::map<std::string, std::vector<const ImageRecord*>> eyes;
    for (const auto& r : records)
        if (r.visit == 0) eyes[r.patient_id].push_back(&r);
    std::array<int, 6> dist{};
    for (const auto& [id, recs] : eyes) {
        const ImageRecord* left = nullptr;
        const ImageRecord* right = nullptr;
        for (const auto* r : recs)
            (r->eye == EyeSide::Left ? left : right) = r;
        if (left && right)
            ++dist[simplified_score(left->gold, right->gold).value];
    }

    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["seed"] = ctx.seed;
    doc["patients"] = spec.patients;
    doc["images"] = records.size();
    doc["side"] = spec.side;
    doc["score_distribution"] = dist;
    write_json_file(ctx.out_dir / "synth.json", doc);
    std::cout << "synth: wrote " << records.size() << " images under "
              << ctx.dataset_dir().string() << "\n";
}

void cmd_train(const RunContext& ctx) {
    auto records = load_manifest_file(ctx.manifest_path());
    auto test_ids = test_ids_for(ctx, records);
    Partition part = make_partition(records, test_ids);

    json part_doc;
    part_doc["schema_version"] = kSchemaVersion;
    part_doc["test_patient_ids"] = json::array();
    for (const auto& id : test_ids) part_doc["test_patient_ids"].push_back(id);
    write_json_file(ctx.out_dir / "partition.json", part_doc);

    const int side = train_side_from(ctx);
    auto train_records = training_images(part.train);
    ImageStore store = load_image_store(train_records, ctx.image_root(), side);
    double holdout_fraction = ctx.config.get_double("train.holdout_fraction", 0.1);
    auto holdout_patients = choose_holdout_patients(store, holdout_fraction, ctx.seed);

    Strategy strategy =
        strategy_from_name(ctx.config.get_string("train.strategy", "full_train"));
    std::optional<Network> pretrained;
    if (strategy != Strategy::FullTrain ||
        ctx.config.get_bool("train.compare_strategies", false)) {
        std::cout << "train: building pretext backbone\n";
        pretrained = train_pretext_backbone(ctx, side);
    }

    TrainConfig base_cfg = train_config_from(ctx);
    TrainResult results[3];
    std::cout << "train: " << store.items.size() << " images, strategy "
              << strategy_name(strategy) << "\n";
    PatientGrader grader =
        train_heads(store, holdout_patients, strategy,
                    pretrained ? &*pretrained : nullptr, base_cfg, ctx.seed, results);
    save_grader(ctx.checkpoint_dir() / "grader.json", grader);

    json hist = history_json(results);
    hist["schema_version"] = kSchemaVersion;
    hist["strategy"] = strategy_name(strategy);
    write_json_file(ctx.out_dir / "training_history.json", hist);

    if (ctx.config.get_bool("train.compare_strategies", false)) {
        int n_resamples =
            static_cast<int>(ctx.config.get_int("eval.bootstrap_resamples", 2000));
        json strategies;
        strategies["schema_version"] = kSchemaVersion;
        for (Strategy s :
             {Strategy::FineTune, Strategy::FrozenExtractor, Strategy::FullTrain}) {
            std::cout << "train: strategy comparison, " << strategy_name(s) << "\n";
            TrainResult sub_results[3];
            PatientGrader g = train_heads(
                store, holdout_patients, s, &*pretrained, base_cfg,
                derive_seed(ctx.seed, 0x57247ULL + static_cast<int>(s)), sub_results);
            auto evals = evaluate_patients(g, part.test, ctx.image_root());
            json rep = evaluation_report(evals, n_resamples,
                                         derive_seed(ctx.seed, 0x57248ULL), {});
            strategies["strategies"][strategy_name(s)] = rep["patient"];
        }
        write_json_file(ctx.out_dir / "strategies.json", strategies);

        std::string md = "# Training strategy comparison\n\n";
        md += "| Metric | fine_tune | frozen_extractor | full_train |\n";
        md += "|---|---|---|---|\n";
        for (const char* metric : {"accuracy", "sensitivity", "specificity", "kappa"}) {
            md += std::string("| ") + metric + " |";
            for (const char* s : {"fine_tune", "frozen_extractor", "full_train"})
                md += " " + ci_cell(strategies["strategies"][s][metric]) + " |";
            md += "\n";
        }
        atomic_write_file(ctx.out_dir / "strategies.md", md);
    }
    std::cout << "train: checkpoints in " << ctx.checkpoint_dir().string() << "\n";
}

json cmd_grade(const RunContext& ctx, const fs::path& left, const fs::path& right) {
    PatientGrader grader = load_grader(ctx.checkpoint_dir() / "grader.json");
    const int side = grader.input_side();
    Image left_img = preprocess_image(left, side);
    Image right_img = preprocess_image(right, side);
    PatientPrediction pred = predict_patient(grader, left_img, right_img);

    auto eye_json = [](const EyePrediction& e) {
        json j;
        j["drusen_probs"] = e.drusen_probs;
        j["pigment_prob"] = e.pigment_prob;
        j["late_amd_prob"] = e.late_amd_prob;
        j["features"] = {{"drusen", drusen_name(e.features.drusen)},
                         {"pigment", e.features.pigment},
                         {"late_amd", e.features.late_amd}};
        return j;
    };

    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["score"] = pred.score.value;
    if (pred.score.value <= 4) doc["five_year_risk"] = five_year_risk(pred.score.value);
    doc["left"] = eye_json(pred.left);
    doc["right"] = eye_json(pred.right);
    return doc;
}

void cmd_eval(const RunContext& ctx) {
    PatientGrader grader = load_grader(ctx.checkpoint_dir() / "grader.json");
    auto records = load_manifest_file(ctx.manifest_path());
    auto test_ids = test_ids_for(ctx, records);
    Partition part = make_partition(records, test_ids);
    auto evals = evaluate_patients(grader, part.test, ctx.image_root());

    int n_resamples = static_cast<int>(ctx.config.get_int("eval.bootstrap_resamples", 2000));
    if (n_resamples < 1)
        throw ConfigError("config key 'eval.bootstrap_resamples': must be >= 1");
    json doc = evaluation_report(evals, n_resamples, derive_seed(ctx.seed, 0x3valULL),
                                 ctx.out_dir);
    doc["seed"] = ctx.seed;
    write_json_file(ctx.out_dir / "metrics.json", doc);
    std::cout << "eval: patient accuracy "
              << doc["patient"]["accuracy"]["value"].get<double>() << ", kappa "
              << doc["patient"]["kappa"]["value"].get<double>() << " ("
              << doc["patient"]["kappa_band"].get<std::string>() << ")\n";
}

void cmd_interpret(const RunContext& ctx) {
    PatientGrader grader = load_grader(ctx.checkpoint_dir() / "grader.json");
    auto records = load_manifest_file(ctx.manifest_path());
    auto test_ids = test_ids_for(ctx, records);

    std::string scope = ctx.config.get_string("interpret.scope", "test");
    std::vector<ImageRecord> pool;
    if (scope == "test") {
        Partition part = make_partition(records, test_ids);
        for (const auto& p : part.test) {
            pool.push_back(p.left);
            pool.push_back(p.right);
        }
    } else if (scope == "all") {
        pool = training_images(records);
    } else {
        throw ConfigError("config key 'interpret.scope': expected 'test' or 'all'");
    }
    if (pool.empty()) throw DataError("interpret: no images in scope");

    fs::path out = ctx.out_dir / "interpret";
    std::error_code ec;
    fs::create_directories(out, ec);

    // ---- saliency maps
    HeadKind head = HeadKind::Drusen;
    std::string head_str = ctx.config.get_string("interpret.head", "drusen");
    if (head_str == "pigment") head = HeadKind::Pigment;
    else if (head_str == "late_amd") head = HeadKind::LateAmd;
    else if (head_str != "drusen")
        throw ConfigError("config key 'interpret.head': expected drusen|pigment|late_amd");

    const Network& head_net = head_network(grader, head);
    int count = static_cast<int>(ctx.config.get_int("interpret.count", 4));
    auto explicit_images = ctx.config.get_strings("interpret.images", {});
    int class_index = static_cast<int>(ctx.config.get_int("interpret.class_index", -1));

    std::vector<std::string> chosen;
    if (!explicit_images.empty()) chosen = explicit_images;
    else
        for (int i = 0; i < count && i < static_cast<int>(pool.size()); ++i)
            chosen.push_back(pool[i].path);

    for (const auto& rel : chosen) {
        Image img = preprocess_image(ctx.image_root() / rel, grader.input_side());
        int cls = class_index;
        if (cls < 0) {
            EyePrediction p = predict_eye(grader, img);
            switch (head) {
                case HeadKind::Drusen: cls = drusen_argmax(p.drusen_probs); break;
                case HeadKind::Pigment: cls = p.features.pigment ? 1 : 0; break;
                case HeadKind::LateAmd: cls = p.features.late_amd ? 1 : 0; break;
            }
        }
        SaliencyMap map = saliency(head_net, img, cls);
        std::string stem = fs::path(rel).stem().string() + "_" + head_name(head);
        write_pgm_file(out / (stem + ".pgm"), map.values, map.width, map.height);
        atomic_write_file(out / (stem + ".svg"),
                          svg_image_pair(img, map, stem + " class " + std::to_string(cls)));
    }

    // ---- t-SNE of the 128-wide embeddings, one layout per head
    TsneConfig tcfg;
    tcfg.perplexity = ctx.config.get_double("interpret.tsne.perplexity", 30.0);
    tcfg.iterations = static_cast<int>(ctx.config.get_int("interpret.tsne.iterations", 1000));
    tcfg.learning_rate = ctx.config.get_double("interpret.tsne.learning_rate", 200.0);
    tcfg.seed = ctx.seed;
    size_t max_points =
        static_cast<size_t>(ctx.config.get_int("interpret.tsne.max_points", 1000));
    size_t n_points = std::min(pool.size(), max_points);
    if (n_points < 4) throw DataError("interpret: t-SNE needs at least 4 images");

    for (HeadKind h : {HeadKind::Drusen, HeadKind::Pigment, HeadKind::LateAmd}) {
        const Network& net = head_network(grader, h);
        std::vector<std::vector<double>> vectors;
        std::vector<uint64_t> ids;
        std::vector<int> classes;
        for (size_t i = 0; i < n_points; ++i) {
            Image img = preprocess_image(ctx.image_root() / pool[i].path,
                                         grader.input_side());
            vectors.push_back(embed(net, img));
            ids.push_back(stable_id(pool[i].path));
            classes.push_back(head_label(h, pool[i].gold));
        }
        TsneResult res = tsne(vectors, tcfg, &ids);

        std::string csv = "id,x,y,class\n";
        std::vector<ScatterPoint> pts;
        for (size_t i = 0; i < n_points; ++i) {
            csv += pool[i].path + "," + std::to_string(res.points[i][0]) + "," +
                   std::to_string(res.points[i][1]) + "," + std::to_string(classes[i]) + "\n";
            pts.push_back({res.points[i][0], res.points[i][1], classes[i]});
        }
        std::vector<std::string> class_names;
        if (h == HeadKind::Drusen) class_names = {"small_none", "medium", "large"};
        else class_names = {"absent", "present"};
        std::string base = std::string("tsne_") + head_name(h);
        atomic_write_file(out / (base + ".csv"), csv);
        atomic_write_file(out / (base + ".svg"),
                          svg_scatter(pts, class_names,
                                      std::string(head_name(h)) + " embedding t-SNE"));
    }
    std::cout << "interpret: artifacts in " << out.string() << "\n";
}

void cmd_report(const RunContext& ctx) {
    std::string md = "# Grading pipeline report\n\n";
    fs::path metrics_path = ctx.out_dir / "metrics.json";
    if (fs::exists(metrics_path)) {
        json m = load_json_file(metrics_path);
        const json& p = m["patient"];
        md += "## Patient-level severity (n=" + std::to_string(p["n_patients"].get<int>()) +
              ", " + std::to_string(m["bootstrap_resamples"].get<int>()) +
              " bootstrap resamples)\n\n";
        md += "| Metric | Value (95% CI) |\n|---|---|\n";
        for (const char* k : {"accuracy", "sensitivity", "specificity", "kappa"})
            md += std::string("| ") + k + " | " + ci_cell(p[k]) + " |\n";
        md += "| kappa band | " + p["kappa_band"].get<std::string>() + " |\n\n";

        md += "## Risk-factor heads\n\n";
        md += "| Metric | drusen | pigment | late_amd |\n|---|---|---|---|\n";
        for (const char* k : {"accuracy", "sensitivity", "specificity", "kappa"}) {
            md += std::string("| ") + k + " |";
            for (const char* h : {"drusen", "pigment", "late_amd"})
                md += " " + ci_cell(m["heads"][h][k]) + " |";
            md += "\n";
        }
        md += "| auc |";
        for (const char* h : {"drusen", "pigment", "late_amd"}) {
            const json& hj = m["heads"][h];
            if (hj.contains("auc")) {
                char buf[16];
                std::snprintf(buf, sizeof buf, " %.3f |", hj["auc"].get<double>());
                md += buf;
            } else {
                md += " n/a |";
            }
        }
        md += "\n\n";
    } else {
        md += "No metrics.json found; run `eval` first.\n\n";
    }

    fs::path strategies_path = ctx.out_dir / "strategies.json";
    if (fs::exists(strategies_path)) {
        json s = load_json_file(strategies_path);
        md += "## Training strategies\n\n";
        md += "| Metric | fine_tune | frozen_extractor | full_train |\n|---|---|---|---|\n";
        for (const char* k : {"accuracy", "sensitivity", "specificity", "kappa"}) {
            md += std::string("| ") + k + " |";
            for (const char* st : {"fine_tune", "frozen_extractor", "full_train"})
                md += " " + ci_cell(s["strategies"][st][k]) + " |";
            md += "\n";
        }
        md += "\n";
    }

    fs::path history_path = ctx.out_dir / "training_history.json";
    if (fs::exists(history_path)) {
        json h = load_json_file(history_path);
        md += "## Training history\n\n";
        md += "| Head | Epoch | Train loss | Holdout accuracy |\n|---|---|---|---|\n";
        for (const char* head : {"drusen", "pigment", "late_amd"})
            for (const auto& e : h[head]["epochs"]) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "| %s | %d | %.4f | %.4f |\n", head,
                              e["epoch"].get<int>(), e["train_loss"].get<double>(),
                              e["holdout_accuracy"].get<double>());
                md += buf;
            }
        md += "\n";
    }

    atomic_write_file(ctx.out_dir / "report.md", md);
    std::cout << "report: " << (ctx.out_dir / "report.md").string() << "\n";
}

// ---------------------------------------------------------------- entry

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Patient-based AMD severity grading pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, left, right;
    int64_t seed = -1;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "Seed overriding the config");
    app.add_option("--out", out_dir, "Output directory overriding the config");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    auto* train = app.add_subcommand("train", "Train the three risk-factor heads");
    bool compare = false;
    train->add_flag("--compare-strategies", compare,
                    "Also run the three-strategy comparison");
    auto* grade = app.add_subcommand("grade", "Grade one patient from two images");
    grade->add_option("--left", left, "Left-eye image (PPM)")->required();
    grade->add_option("--right", right, "Right-eye image (PPM)")->required();
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate on the test partition");
    auto* interpret = app.add_subcommand("interpret", "Saliency maps and t-SNE layouts");
    auto* report = app.add_subcommand("report", "Collate run artifacts into report.md");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunContext ctx;
        if (!config_path.empty()) ctx.config = Config::from_file(config_path);
        if (!out_dir.empty()) ctx.config.set("out_dir", out_dir);
        if (seed >= 0) ctx.config.set("seed", seed);
        ctx.out_dir = ctx.config.get_string("out_dir", "run");
        ctx.seed = static_cast<uint64_t>(ctx.config.get_int("seed", 1));
        if (compare) ctx.config.set("train.compare_strategies", true);

        std::error_code ec;
        fs::create_directories(ctx.out_dir, ec);
        if (ec)
            throw DataError("cannot create output directory " + ctx.out_dir.string() + ": " +
                            ec.message());

        if (*synth) cmd_synth(ctx);
        else if (*train) cmd_train(ctx);
        else if (*grade) std::cout << cmd_grade(ctx, left, right).dump(2) << "\n";
        else if (*eval_cmd) cmd_eval(ctx);
        else if (*interpret) cmd_interpret(ctx);
        else if (*report) cmd_report(ctx);
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace amd::cli
