#include "amd/train.hpp"

#include <algorithm>
#include <numeric>

#include "amd/errors.hpp"
#include "amd/rng.hpp"

namespace amd {

void Dataset::add(const std::vector<float>& pixels, int label, std::string patient_id) {
    if (pixels.size() != pixel_count())
        throw DataError("dataset: pixel count mismatch");
    Entry e;
    e.offset = store->size();
    e.label = label;
    e.patient_id = std::move(patient_id);
    store->insert(store->end(), pixels.begin(), pixels.end());
    entries.push_back(std::move(e));
}

std::vector<float> planar_pixels(const Image& img) {
    std::vector<float> out(img.data.size());
    const size_t plane = static_cast<size_t>(img.width) * img.height;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                out[c * plane + static_cast<size_t>(y) * img.width + x] = img.at(x, y, c);
    return out;
}

Tensor batch_tensor(const Dataset& ds, const std::vector<size_t>& indices) {
    const size_t per = ds.pixel_count();
    Tensor t = Tensor::zeros({static_cast<int>(indices.size()), ds.channels, ds.height,
                              ds.width});
    for (size_t i = 0; i < indices.size(); ++i) {
        const Dataset::Entry& e = ds.entries[indices[i]];
        if (e.offset + per > ds.store->size())
            throw DataError("batch_tensor: entry outside pixel store");
        const float* src = ds.store->data() + e.offset;
        double* dst = &t.data[i * per];
        for (size_t j = 0; j < per; ++j) dst[j] = src[j];
    }
    return t;
}

namespace {

std::vector<int> batch_labels(const Dataset& ds, const std::vector<size_t>& indices) {
    std::vector<int> labels(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) labels[i] = ds.entries[indices[i]].label;
    return labels;
}

int argmax_row(const Tensor& out, int row) {
    const int C = static_cast<int>(out.size() / out.dim(0));
    const double* p = &out.data[static_cast<size_t>(row) * C];
    int best = 0;
    for (int c = 1; c < C; ++c)
        if (p[c] > p[best]) best = c;  // ties keep the lower index
    return best;
}

}  // namespace

TrainResult train(Network& net, const Dataset& train_set, const Dataset& holdout,
                  const TrainConfig& cfg) {
    if (train_set.entries.empty()) throw DataError("train: empty training set");
    if (holdout.entries.empty()) throw DataError("train: empty holdout set");
    if (cfg.batch_size < 1 || cfg.max_epochs < 1) throw DataError("train: bad config");

    TrainResult result;
    std::vector<int> class_counts(net.num_classes(), 0);
    for (const auto& s : train_set.entries) {
        if (s.label < 0 || s.label >= net.num_classes())
            throw DataError("train: label out of range");
        ++class_counts[s.label];
    }
    for (size_t c = 0; c < class_counts.size(); ++c)
        if (class_counts[c] == 0)
            result.warnings.push_back("class " + std::to_string(c) +
                                      " has no training examples");

    Adam opt(net, cfg.adam);
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5u));

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    double best_acc = -1.0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<size_t> idx(order.begin() + start, order.begin() + end);
            Tensor batch = batch_tensor(train_set, idx);
            std::vector<int> labels = batch_labels(train_set, idx);

            ForwardCache cache;
            forward(net, batch, &cache);
            double loss = 0.0;
            Gradients grads = backward(net, cache, labels, &loss);
            opt.step(net, grads);
            loss_sum += loss * static_cast<double>(idx.size());
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        stats.holdout_accuracy = dataset_accuracy(net, holdout);
        result.history.push_back(stats);

        if (cfg.early_stop && stats.holdout_accuracy <= best_acc) break;
        best_acc = std::max(best_acc, stats.holdout_accuracy);
    }
    return result;
}

std::vector<int> predict_labels(const Network& net, const Dataset& ds, int eval_batch) {
    std::vector<int> out;
    out.reserve(ds.size());
    for (size_t start = 0; start < ds.size(); start += eval_batch) {
        size_t end = std::min(ds.size(), start + eval_batch);
        std::vector<size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        Tensor logits = forward(net, batch_tensor(ds, idx));
        for (size_t i = 0; i < idx.size(); ++i)
            out.push_back(argmax_row(logits, static_cast<int>(i)));
    }
    return out;
}

double dataset_accuracy(const Network& net, const Dataset& ds, int eval_batch) {
    if (ds.entries.empty()) return 0.0;
    std::vector<int> pred = predict_labels(net, ds, eval_batch);
    size_t hits = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == ds.entries[i].label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

std::vector<std::vector<double>> predict_probs(const Network& net, const Dataset& ds,
                                               int eval_batch) {
    const bool has_softmax =
        !net.layers.empty() && net.layers.back().spec.kind == LayerKind::Softmax;
    std::vector<std::vector<double>> out;
    out.reserve(ds.size());
    for (size_t start = 0; start < ds.size(); start += eval_batch) {
        size_t end = std::min(ds.size(), start + eval_batch);
        std::vector<size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        Tensor o = forward(net, batch_tensor(ds, idx));
        Tensor probs = has_softmax ? o : softmax_rows(o);
        const int C = static_cast<int>(probs.size() / probs.dim(0));
        for (size_t i = 0; i < idx.size(); ++i) {
            const double* p = &probs.data[i * C];
            out.emplace_back(p, p + C);
        }
    }
    return out;
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::FineTune: return "fine_tune";
        case Strategy::FrozenExtractor: return "frozen_extractor";
        case Strategy::FullTrain: return "full_train";
    }
    return "?";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "fine_tune") return Strategy::FineTune;
    if (name == "frozen_extractor") return Strategy::FrozenExtractor;
    if (name == "full_train") return Strategy::FullTrain;
    throw ConfigError("unknown strategy '" + name +
                      "' (want fine_tune, frozen_extractor or full_train)");
}

std::vector<LayerSpec> backbone_layers(int num_classes) {
    return {
        LayerSpec::conv(3, 1, 8),  LayerSpec::relu(), LayerSpec::max_pool(2),
        LayerSpec::conv(3, 1, 16), LayerSpec::relu(), LayerSpec::max_pool(2),
        LayerSpec::conv(3, 1, 32), LayerSpec::relu(), LayerSpec::global_avg_pool(),
        LayerSpec::dense(128),     LayerSpec::relu(), LayerSpec::dense(num_classes),
    };
}

Network make_backbone(int side, int num_classes, uint64_t seed) {
    Network net = make_network(3, side, side, backbone_layers(num_classes));
    init_params(net, seed);
    return net;
}

Network build_strategy(Strategy strategy, int side, int num_classes,
                       const Network* pretrained, uint64_t seed) {
    if (strategy == Strategy::FullTrain) return make_backbone(side, num_classes, seed);

    if (!pretrained)
        throw DataError(std::string(strategy_name(strategy)) +
                        ": pretrained weights required");
    if (pretrained->in_h != side || pretrained->in_w != side)
        throw DataError("build_strategy: pretrained input side mismatch");

    if (strategy == Strategy::FineTune) {
        Network net = *pretrained;
        for (auto& l : net.layers) l.spec.trainable = true;
        if (net.num_classes() != num_classes) {
            // swap in a fresh classifier of the right width
            size_t last_dense = net.layers.size();
            for (size_t i = net.layers.size(); i-- > 0;)
                if (net.layers[i].spec.kind == LayerKind::Dense) {
                    last_dense = i;
                    break;
                }
            if (last_dense == net.layers.size())
                throw DataError("fine_tune: pretrained network has no dense classifier");
            int in_dim = net.layers[last_dense].weights.dim(1);
            Network head = make_network(in_dim, 1, 1, {LayerSpec::dense(num_classes)});
            init_params(head, derive_seed(seed, 0xf17eULL));
            net.layers[last_dense].spec.units = num_classes;
            net.layers[last_dense].weights = std::move(head.layers[0].weights);
            net.layers[last_dense].bias = std::move(head.layers[0].bias);
        }
        return net;
    }

    // FrozenExtractor: convolutional stack up to the first dense layer, frozen,
    // plus a fresh 256/128 dense head.
    size_t first_dense = pretrained->layers.size();
    for (size_t i = 0; i < pretrained->layers.size(); ++i)
        if (pretrained->layers[i].spec.kind == LayerKind::Dense) {
            first_dense = i;
            break;
        }
    if (first_dense == pretrained->layers.size())
        throw DataError("frozen_extractor: pretrained network has no dense layer");

    std::vector<LayerSpec> specs;
    for (size_t i = 0; i < first_dense; ++i) {
        LayerSpec s = pretrained->layers[i].spec;
        s.trainable = false;
        specs.push_back(s);
    }
    specs.push_back(LayerSpec::dense(256));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::dense(128));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::dense(num_classes));

    Network net = make_network(3, side, side, specs);
    init_params(net, derive_seed(seed, 0xf607e4ULL));
    for (size_t i = 0; i < first_dense; ++i) {
        net.layers[i].weights = pretrained->layers[i].weights;
        net.layers[i].bias = pretrained->layers[i].bias;
        net.layers[i].spec.trainable = false;
    }
    return net;
}

}  // namespace amd
