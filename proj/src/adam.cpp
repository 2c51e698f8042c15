#include "amd/adam.hpp"

#include <cmath>

#include "amd/errors.hpp"

namespace amd {

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, int64_t t,
                 const AdamConfig& cfg) {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g))
            throw DataError("adam: non-finite gradient at step " + std::to_string(t));
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

Adam::Adam(const Network& net, AdamConfig cfg) : cfg_(cfg) {
    m_weights_.resize(net.layers.size());
    v_weights_.resize(net.layers.size());
    m_bias_.resize(net.layers.size());
    v_bias_.resize(net.layers.size());
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (!l.has_params() || !l.spec.trainable) continue;
        m_weights_[i] = Tensor::zeros(l.weights.shape);
        v_weights_[i] = Tensor::zeros(l.weights.shape);
        m_bias_[i] = Tensor::zeros(l.bias.shape);
        v_bias_[i] = Tensor::zeros(l.bias.shape);
    }
}

void Adam::step(Network& net, const Gradients& grads) {
    ++t_;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        Layer& l = net.layers[i];
        if (!l.has_params() || !l.spec.trainable) continue;
        if (grads.weights[i].empty()) continue;  // no gradient contribution this step
        adam_update(l.weights, grads.weights[i], m_weights_[i], v_weights_[i], t_, cfg_);
        adam_update(l.bias, grads.bias[i], m_bias_[i], v_bias_[i], t_, cfg_);
    }
}

}  // namespace amd
