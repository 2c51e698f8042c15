#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amd/tensor.hpp"

namespace amd {

enum class LayerKind : uint8_t {
    Conv = 0,           // square kernel, zero same-padding, configurable stride
    MaxPool = 1,        // non-overlapping k x k windows; remainder rows/cols dropped
    Relu = 2,
    GlobalAvgPool = 3,  // (C,H,W) -> (C,)
    Dense = 4,          // flattens its input
    Softmax = 5,        // only valid as the final layer
};

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int kernel = 0;        // Conv, MaxPool
    int stride = 1;        // Conv
    int out_channels = 0;  // Conv
    int units = 0;         // Dense
    bool trainable = true;

    static LayerSpec conv(int kernel, int stride, int out_channels) {
        return {LayerKind::Conv, kernel, stride, out_channels, 0, true};
    }
    static LayerSpec max_pool(int kernel) { return {LayerKind::MaxPool, kernel, 1, 0, 0, true}; }
    static LayerSpec relu() { return {LayerKind::Relu, 0, 1, 0, 0, true}; }
    static LayerSpec global_avg_pool() { return {LayerKind::GlobalAvgPool, 0, 1, 0, 0, true}; }
    static LayerSpec dense(int units) { return {LayerKind::Dense, 0, 1, 0, units, true}; }
    static LayerSpec softmax() { return {LayerKind::Softmax, 0, 1, 0, 0, true}; }
};

struct Layer {
    LayerSpec spec;
    Tensor weights;  // Conv: {out_c, in_c, k, k}; Dense: {units, in_dim}
    Tensor bias;     // Conv: {out_c}; Dense: {units}

    bool has_params() const {
        return spec.kind == LayerKind::Conv || spec.kind == LayerKind::Dense;
    }
};

struct Network {
    int in_channels = 3;
    int in_h = 0;
    int in_w = 0;
    std::vector<Layer> layers;

    int num_classes() const;
    size_t param_count() const;
};

// Validates shape chaining and sizes all parameter tensors (zero-filled).
Network make_network(int in_channels, int in_h, int in_w,
                     const std::vector<LayerSpec>& specs);

// Kaiming-uniform fan-in init for conv/dense weights, zero biases.
void init_params(Network& net, uint64_t seed);

struct ForwardCache {
    std::vector<Tensor> acts;  // acts[0] = input; acts[i + 1] = output of layer i
};

// Batch is {N, C, H, W} (or {N, D} for flat input). Returns the final layer's
// output: logits, or probabilities if the network ends in Softmax.
Tensor forward(const Network& net, const Tensor& batch, ForwardCache* cache = nullptr);

struct Gradients {
    std::vector<Tensor> weights;  // parallel to net.layers; empty when frozen/no params
    std::vector<Tensor> bias;
};

Tensor softmax_rows(const Tensor& logits);

// Mean softmax cross-entropy over the batch. Labels must be < class count.
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Tensor* dlogits = nullptr);

struct BackpropOptions {
    bool want_input_grad = false;
    bool want_param_grads = true;
};

struct BackpropResult {
    Gradients grads;
    Tensor input_grad;
};

// Propagates an arbitrary output-side gradient back through the network.
BackpropResult backprop(const Network& net, const ForwardCache& cache,
                        const Tensor& d_output, const BackpropOptions& opt = {});

// Gradient of the mean softmax cross-entropy w.r.t. every trainable parameter.
// A trailing Softmax layer is fused with the loss. Frozen layers get no gradient.
Gradients backward(const Network& net, const ForwardCache& cache,
                   const std::vector<int>& labels, double* loss_out = nullptr);

// Central-difference check of backward() on a random sample of parameters.
// Returns the maximum relative error observed.
double grad_check(const Network& net, const Tensor& batch, const std::vector<int>& labels,
                  double eps = 1e-4, int max_samples = 10000, uint64_t seed = 0);

const char* layer_kind_name(LayerKind k);

}  // namespace amd
