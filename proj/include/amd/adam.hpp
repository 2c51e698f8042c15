#pragma once

#include <cstdint>

#include "amd/net.hpp"

namespace amd {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected update of one parameter tensor; t is the 1-based step count.
// Throws DataError on non-finite gradients.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, int64_t t,
                 const AdamConfig& cfg);

// Adam over a network's trainable parameters. Frozen layers hold no moment
// state and are never touched.
class Adam {
public:
    explicit Adam(const Network& net, AdamConfig cfg = {});

    void step(Network& net, const Gradients& grads);
    int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::vector<Tensor> m_weights_, v_weights_, m_bias_, v_bias_;  // parallel to layers
};

}  // namespace amd
