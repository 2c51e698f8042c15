#include "amd/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "amd/errors.hpp"
#include "amd/train.hpp"

namespace amd {

SaliencyMap saliency(const Network& head, const Image& image, int class_index) {
    if (image.width != head.in_w || image.height != head.in_h)
        throw DataError("saliency: image resolution does not match the model");

    Tensor x = Tensor::zeros({1, 3, image.height, image.width});
    const auto px = planar_pixels(image);
    for (size_t i = 0; i < px.size(); ++i) x.data[i] = px[i];

    ForwardCache cache;
    forward(head, x, &cache);

    // Back-project from the class logit. With a trailing softmax layer the
    // logit is the input to that layer.
    const bool has_softmax =
        !head.layers.empty() && head.layers.back().spec.kind == LayerKind::Softmax;
    const size_t logits_index = head.layers.size() - (has_softmax ? 1 : 0);
    const Tensor& logits = cache.acts[logits_index];
    const int n_classes = static_cast<int>(logits.size());
    if (class_index < 0 || class_index >= n_classes)
        throw DataError("saliency: class " + std::to_string(class_index) +
                        " out of range for " + std::to_string(n_classes) + " classes");

    Tensor input_grad;
    if (has_softmax) {
        Network trimmed = head;
        trimmed.layers.pop_back();
        ForwardCache trimmed_cache;
        trimmed_cache.acts.assign(cache.acts.begin(), cache.acts.end() - 1);
        Tensor d = Tensor::zeros(logits.shape);
        d.data[class_index] = 1.0;
        input_grad = backprop(trimmed, trimmed_cache, d,
                              {.want_input_grad = true, .want_param_grads = false})
                         .input_grad;
    } else {
        Tensor d = Tensor::zeros(logits.shape);
        d.data[class_index] = 1.0;
        input_grad =
            backprop(head, cache, d, {.want_input_grad = true, .want_param_grads = false})
                .input_grad;
    }

    SaliencyMap map;
    map.width = image.width;
    map.height = image.height;
    map.values.assign(static_cast<size_t>(image.width) * image.height, 0.0f);
    const size_t plane = map.values.size();
    float peak = 0.0f;
    for (size_t i = 0; i < plane; ++i) {
        double m = 0.0;
        for (int c = 0; c < 3; ++c)
            m = std::max(m, std::abs(input_grad.data[c * plane + i]));
        map.values[i] = static_cast<float>(m);
        peak = std::max(peak, map.values[i]);
    }
    if (peak > 0.0f)
        for (auto& v : map.values) v /= peak;
    return map;
}

}  // namespace amd
