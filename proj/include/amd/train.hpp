#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "amd/adam.hpp"
#include "amd/image.hpp"
#include "amd/net.hpp"

namespace amd {

// Labeled image collection. Pixels live in one shared planar float buffer so
// several label views (one per head) can reference the same images.
struct Dataset {
    int channels = 3;
    int height = 0;
    int width = 0;
    int num_classes = 2;

    struct Entry {
        size_t offset = 0;  // into *store
        int label = 0;
        std::string patient_id;
    };

    std::shared_ptr<std::vector<float>> store = std::make_shared<std::vector<float>>();
    std::vector<Entry> entries;

    size_t size() const { return entries.size(); }
    size_t pixel_count() const {
        return static_cast<size_t>(channels) * height * width;
    }
    // Appends pixels to the store and adds an entry.
    void add(const std::vector<float>& pixels, int label, std::string patient_id = {});
};

// Interleaved image -> planar (channel, row, col) float pixels.
std::vector<float> planar_pixels(const Image& img);

Tensor batch_tensor(const Dataset& ds, const std::vector<size_t>& indices);

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 5;
    uint64_t seed = 0;
    AdamConfig adam;
    bool early_stop = true;  // stop once holdout accuracy fails to increase
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double holdout_accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    std::vector<std::string> warnings;
};

// Minibatch Adam training with per-epoch seeded shuffling. Training classes
// with no examples produce a warning, not an error.
TrainResult train(Network& net, const Dataset& train_set, const Dataset& holdout,
                  const TrainConfig& cfg);

std::vector<int> predict_labels(const Network& net, const Dataset& ds,
                                int eval_batch = 64);
double dataset_accuracy(const Network& net, const Dataset& ds, int eval_batch = 64);

// Per-class softmax probabilities, one row per sample.
std::vector<std::vector<double>> predict_probs(const Network& net, const Dataset& ds,
                                               int eval_batch = 64);

enum class Strategy { FineTune, FrozenExtractor, FullTrain };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Small convolutional backbone: three conv/pool stages, global average
// pooling, a 128-unit dense layer and the classifier.
std::vector<LayerSpec> backbone_layers(int num_classes);
Network make_backbone(int side, int num_classes, uint64_t seed);

// FineTune: pretrained weights, everything trainable (classifier re-initialized
// when the class count differs). FrozenExtractor: pretrained convolutional
// stack frozen, new 256/128 dense head. FullTrain: random init, all trainable.
Network build_strategy(Strategy strategy, int side, int num_classes,
                       const Network* pretrained, uint64_t seed);

}  // namespace amd
