#include "amd/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "amd/errors.hpp"
#include "amd/rng.hpp"

namespace amd {

namespace {

// c > 0, h = w = 0 means a flat vector of width c.
struct Shape3 {
    int c = 0, h = 0, w = 0;
    bool spatial() const { return h > 0; }
    int flat() const { return spatial() ? c * h * w : c; }
};

struct ConvDims {
    int oh, ow;            // output spatial dims (same padding)
    int pad_top, pad_left;
    int ph, pw;            // padded input dims
};

ConvDims conv_dims(int h, int w, int k, int s) {
    ConvDims d;
    d.oh = (h + s - 1) / s;
    d.ow = (w + s - 1) / s;
    int pad_h = std::max((d.oh - 1) * s + k - h, 0);
    int pad_w = std::max((d.ow - 1) * s + k - w, 0);
    d.pad_top = pad_h / 2;
    d.pad_left = pad_w / 2;
    d.ph = h + pad_h;
    d.pw = w + pad_w;
    return d;
}

Shape3 next_shape(const Shape3& in, const LayerSpec& spec, size_t index) {
    switch (spec.kind) {
        case LayerKind::Conv: {
            if (!in.spatial())
                throw DataError("layer " + std::to_string(index) + ": conv needs spatial input");
            if (spec.kernel < 1 || spec.stride < 1 || spec.out_channels < 1)
                throw DataError("layer " + std::to_string(index) + ": bad conv spec");
            ConvDims d = conv_dims(in.h, in.w, spec.kernel, spec.stride);
            return {spec.out_channels, d.oh, d.ow};
        }
        case LayerKind::MaxPool: {
            if (!in.spatial())
                throw DataError("layer " + std::to_string(index) + ": max_pool needs spatial input");
            if (spec.kernel < 1 || in.h / spec.kernel < 1 || in.w / spec.kernel < 1)
                throw DataError("layer " + std::to_string(index) + ": pool window exceeds input");
            return {in.c, in.h / spec.kernel, in.w / spec.kernel};
        }
        case LayerKind::Relu:
            return in;
        case LayerKind::GlobalAvgPool:
            if (!in.spatial())
                throw DataError("layer " + std::to_string(index) +
                                ": global_avg_pool needs spatial input");
            return {in.c, 0, 0};
        case LayerKind::Dense:
            if (spec.units < 1)
                throw DataError("layer " + std::to_string(index) + ": bad dense units");
            return {spec.units, 0, 0};
        case LayerKind::Softmax:
            if (in.spatial())
                throw DataError("layer " + std::to_string(index) + ": softmax needs flat input");
            return in;
    }
    throw DataError("unknown layer kind");
}

std::vector<Shape3> shape_chain(const Network& net) {
    std::vector<Shape3> shapes;
    shapes.reserve(net.layers.size() + 1);
    shapes.push_back({net.in_channels, net.in_h, net.in_w});
    for (size_t i = 0; i < net.layers.size(); ++i)
        shapes.push_back(next_shape(shapes.back(), net.layers[i].spec, i));
    return shapes;
}

}  // namespace

int Network::num_classes() const { return shape_chain(*this).back().flat(); }

size_t Network::param_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

Network make_network(int in_channels, int in_h, int in_w,
                     const std::vector<LayerSpec>& specs) {
    if (in_channels < 1 || in_h < 1 || in_w < 1) throw DataError("bad network input shape");
    Network net;
    net.in_channels = in_channels;
    net.in_h = in_h;
    net.in_w = in_w;

    Shape3 shape{in_channels, in_h, in_w};
    for (size_t i = 0; i < specs.size(); ++i) {
        const LayerSpec& spec = specs[i];
        if (spec.kind == LayerKind::Softmax && i + 1 != specs.size())
            throw DataError("softmax must be the final layer");
        Layer layer;
        layer.spec = spec;
        if (spec.kind == LayerKind::Conv)
            layer.weights = Tensor::zeros({spec.out_channels, shape.c, spec.kernel, spec.kernel});
        else if (spec.kind == LayerKind::Dense)
            layer.weights = Tensor::zeros({spec.units, shape.flat()});
        if (layer.has_params())
            layer.bias = Tensor::zeros({spec.kind == LayerKind::Conv ? spec.out_channels
                                                                     : spec.units});
        shape = next_shape(shape, spec, i);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

void init_params(Network& net, uint64_t seed) {
    Rng rng(seed);
    for (auto& layer : net.layers) {
        if (!layer.has_params()) continue;
        int fan_in = layer.spec.kind == LayerKind::Conv
                         ? layer.weights.dim(1) * layer.spec.kernel * layer.spec.kernel
                         : layer.weights.dim(1);
        double limit = std::sqrt(6.0 / fan_in);
        for (auto& w : layer.weights.data) w = rng.uniform(-limit, limit);
        std::fill(layer.bias.data.begin(), layer.bias.data.end(), 0.0);
    }
}

namespace {

// ---- layer forward kernels; batch-major tensors ----

void conv_forward(const Layer& layer, const Tensor& in, Tensor& out,
                  std::vector<double>& pad_buf) {
    const int n_batch = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int k = layer.spec.kernel, s = layer.spec.stride, OC = layer.spec.out_channels;
    const ConvDims d = conv_dims(H, W, k, s);

    pad_buf.assign(static_cast<size_t>(C) * d.ph * d.pw, 0.0);
    const size_t in_plane = static_cast<size_t>(H) * W;
    const size_t out_plane = static_cast<size_t>(d.oh) * d.ow;

    for (int n = 0; n < n_batch; ++n) {
        std::fill(pad_buf.begin(), pad_buf.end(), 0.0);
        for (int c = 0; c < C; ++c) {
            const double* src = &in.data[(static_cast<size_t>(n) * C + c) * in_plane];
            double* dst = &pad_buf[(static_cast<size_t>(c) * d.ph + d.pad_top) * d.pw +
                                   d.pad_left];
            for (int y = 0; y < H; ++y)
                std::memcpy(dst + static_cast<size_t>(y) * d.pw, src + static_cast<size_t>(y) * W,
                            sizeof(double) * W);
        }
        for (int oc = 0; oc < OC; ++oc) {
            double* outp = &out.data[(static_cast<size_t>(n) * OC + oc) * out_plane];
            std::fill(outp, outp + out_plane, layer.bias[oc]);
            for (int ic = 0; ic < C; ++ic) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        double wv = layer.weights[((static_cast<size_t>(oc) * C + ic) * k + ky) *
                                                      k + kx];
                        for (int oy = 0; oy < d.oh; ++oy) {
                            const double* src =
                                &pad_buf[(static_cast<size_t>(ic) * d.ph + oy * s + ky) * d.pw +
                                         kx];
                            double* dst = outp + static_cast<size_t>(oy) * d.ow;
                            if (s == 1)
                                for (int ox = 0; ox < d.ow; ++ox) dst[ox] += wv * src[ox];
                            else
                                for (int ox = 0; ox < d.ow; ++ox) dst[ox] += wv * src[ox * s];
                        }
                    }
                }
            }
        }
    }
}

void conv_backward(const Layer& layer, const Tensor& in, const Tensor& d_out,
                   Tensor* d_in, Tensor* d_weights, Tensor* d_bias) {
    const int n_batch = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int k = layer.spec.kernel, s = layer.spec.stride, OC = layer.spec.out_channels;
    const ConvDims d = conv_dims(H, W, k, s);

    std::vector<double> pad(static_cast<size_t>(C) * d.ph * d.pw);
    std::vector<double> d_pad;
    if (d_in) d_pad.resize(pad.size());
    const size_t in_plane = static_cast<size_t>(H) * W;
    const size_t out_plane = static_cast<size_t>(d.oh) * d.ow;

    for (int n = 0; n < n_batch; ++n) {
        std::fill(pad.begin(), pad.end(), 0.0);
        for (int c = 0; c < C; ++c) {
            const double* src = &in.data[(static_cast<size_t>(n) * C + c) * in_plane];
            double* dst = &pad[(static_cast<size_t>(c) * d.ph + d.pad_top) * d.pw + d.pad_left];
            for (int y = 0; y < H; ++y)
                std::memcpy(dst + static_cast<size_t>(y) * d.pw, src + static_cast<size_t>(y) * W,
                            sizeof(double) * W);
        }
        if (d_in) std::fill(d_pad.begin(), d_pad.end(), 0.0);

        for (int oc = 0; oc < OC; ++oc) {
            const double* g = &d_out.data[(static_cast<size_t>(n) * OC + oc) * out_plane];
            if (d_bias) {
                double acc = 0.0;
                for (size_t i = 0; i < out_plane; ++i) acc += g[i];
                (*d_bias)[oc] += acc;
            }
            for (int ic = 0; ic < C; ++ic) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const size_t widx =
                            ((static_cast<size_t>(oc) * C + ic) * k + ky) * k + kx;
                        if (d_weights) {
                            double acc = 0.0;
                            for (int oy = 0; oy < d.oh; ++oy) {
                                const double* src =
                                    &pad[(static_cast<size_t>(ic) * d.ph + oy * s + ky) * d.pw +
                                         kx];
                                const double* gg = g + static_cast<size_t>(oy) * d.ow;
                                if (s == 1)
                                    for (int ox = 0; ox < d.ow; ++ox) acc += gg[ox] * src[ox];
                                else
                                    for (int ox = 0; ox < d.ow; ++ox) acc += gg[ox] * src[ox * s];
                            }
                            (*d_weights)[widx] += acc;
                        }
                        if (d_in) {
                            const double wv = layer.weights[widx];
                            for (int oy = 0; oy < d.oh; ++oy) {
                                double* dp =
                                    &d_pad[(static_cast<size_t>(ic) * d.ph + oy * s + ky) * d.pw +
                                           kx];
                                const double* gg = g + static_cast<size_t>(oy) * d.ow;
                                if (s == 1)
                                    for (int ox = 0; ox < d.ow; ++ox) dp[ox] += wv * gg[ox];
                                else
                                    for (int ox = 0; ox < d.ow; ++ox) dp[ox * s] += wv * gg[ox];
                            }
                        }
                    }
                }
            }
        }
        if (d_in) {
            for (int c = 0; c < C; ++c) {
                double* dst = &d_in->data[(static_cast<size_t>(n) * C + c) * in_plane];
                const double* src =
                    &d_pad[(static_cast<size_t>(c) * d.ph + d.pad_top) * d.pw + d.pad_left];
                for (int y = 0; y < H; ++y)
                    std::memcpy(dst + static_cast<size_t>(y) * W,
                                src + static_cast<size_t>(y) * d.pw, sizeof(double) * W);
            }
        }
    }
}

void max_pool_forward(int k, const Tensor& in, Tensor& out) {
    const int n_batch = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int OH = H / k, OW = W / k;
    for (int n = 0; n < n_batch; ++n)
        for (int c = 0; c < C; ++c) {
            const double* plane = &in.data[(static_cast<size_t>(n) * C + c) * H * W];
            double* outp = &out.data[(static_cast<size_t>(n) * C + c) * OH * OW];
            for (int oy = 0; oy < OH; ++oy)
                for (int ox = 0; ox < OW; ++ox) {
                    double best = plane[static_cast<size_t>(oy) * k * W + ox * k];
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            double v = plane[(static_cast<size_t>(oy) * k + ky) * W + ox * k + kx];
                            if (v > best) best = v;
                        }
                    outp[static_cast<size_t>(oy) * OW + ox] = best;
                }
        }
}

// Gradient goes to the first maximum in row-major window order.
void max_pool_backward(int k, const Tensor& in, const Tensor& d_out, Tensor& d_in) {
    const int n_batch = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int OH = H / k, OW = W / k;
    for (int n = 0; n < n_batch; ++n)
        for (int c = 0; c < C; ++c) {
            const double* plane = &in.data[(static_cast<size_t>(n) * C + c) * H * W];
            double* dplane = &d_in.data[(static_cast<size_t>(n) * C + c) * H * W];
            const double* g = &d_out.data[(static_cast<size_t>(n) * C + c) * OH * OW];
            for (int oy = 0; oy < OH; ++oy)
                for (int ox = 0; ox < OW; ++ox) {
                    int best_y = oy * k, best_x = ox * k;
                    double best = plane[static_cast<size_t>(best_y) * W + best_x];
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            double v = plane[(static_cast<size_t>(oy) * k + ky) * W + ox * k + kx];
                            if (v > best) {
                                best = v;
                                best_y = oy * k + ky;
                                best_x = ox * k + kx;
                            }
                        }
                    dplane[static_cast<size_t>(best_y) * W + best_x] +=
                        g[static_cast<size_t>(oy) * OW + ox];
                }
        }
}

void dense_forward(const Layer& layer, const Tensor& in, Tensor& out) {
    const int n_batch = in.dim(0);
    const int D = static_cast<int>(in.size() / n_batch);
    const int U = layer.spec.units;
    for (int n = 0; n < n_batch; ++n) {
        const double* x = &in.data[static_cast<size_t>(n) * D];
        double* y = &out.data[static_cast<size_t>(n) * U];
        for (int u = 0; u < U; ++u) {
            const double* w = &layer.weights.data[static_cast<size_t>(u) * D];
            double acc = layer.bias[u];
            for (int d = 0; d < D; ++d) acc += w[d] * x[d];
            y[u] = acc;
        }
    }
}

void dense_backward(const Layer& layer, const Tensor& in, const Tensor& d_out,
                    Tensor* d_in, Tensor* d_weights, Tensor* d_bias) {
    const int n_batch = in.dim(0);
    const int D = static_cast<int>(in.size() / n_batch);
    const int U = layer.spec.units;
    for (int n = 0; n < n_batch; ++n) {
        const double* x = &in.data[static_cast<size_t>(n) * D];
        const double* g = &d_out.data[static_cast<size_t>(n) * U];
        for (int u = 0; u < U; ++u) {
            const double gu = g[u];
            if (d_bias) (*d_bias)[u] += gu;
            if (d_weights) {
                double* dw = &d_weights->data[static_cast<size_t>(u) * D];
                for (int d = 0; d < D; ++d) dw[d] += gu * x[d];
            }
            if (d_in) {
                const double* w = &layer.weights.data[static_cast<size_t>(u) * D];
                double* dx = &d_in->data[static_cast<size_t>(n) * D];
                for (int d = 0; d < D; ++d) dx[d] += gu * w[d];
            }
        }
    }
}

void softmax_forward(const Tensor& in, Tensor& out) {
    const int n_batch = in.dim(0);
    const int C = static_cast<int>(in.size() / n_batch);
    for (int n = 0; n < n_batch; ++n) {
        const double* x = &in.data[static_cast<size_t>(n) * C];
        double* y = &out.data[static_cast<size_t>(n) * C];
        double m = x[0];
        for (int c = 1; c < C; ++c) m = std::max(m, x[c]);
        double z = 0.0;
        for (int c = 0; c < C; ++c) {
            y[c] = std::exp(x[c] - m);
            z += y[c];
        }
        for (int c = 0; c < C; ++c) y[c] /= z;
    }
}

void softmax_backward(const Tensor& probs, const Tensor& d_out, Tensor& d_in) {
    const int n_batch = probs.dim(0);
    const int C = static_cast<int>(probs.size() / n_batch);
    for (int n = 0; n < n_batch; ++n) {
        const double* p = &probs.data[static_cast<size_t>(n) * C];
        const double* g = &d_out.data[static_cast<size_t>(n) * C];
        double* dx = &d_in.data[static_cast<size_t>(n) * C];
        double dot = 0.0;
        for (int c = 0; c < C; ++c) dot += g[c] * p[c];
        for (int c = 0; c < C; ++c) dx[c] += p[c] * (g[c] - dot);
    }
}

Tensor output_tensor(const Shape3& shape, int n_batch) {
    if (shape.spatial()) return Tensor::zeros({n_batch, shape.c, shape.h, shape.w});
    return Tensor::zeros({n_batch, shape.c});
}

void layer_forward(const Layer& layer, const Tensor& in, Tensor& out,
                   std::vector<double>& scratch) {
    switch (layer.spec.kind) {
        case LayerKind::Conv:
            conv_forward(layer, in, out, scratch);
            break;
        case LayerKind::MaxPool:
            max_pool_forward(layer.spec.kernel, in, out);
            break;
        case LayerKind::Relu:
            for (size_t i = 0; i < in.size(); ++i) out.data[i] = in.data[i] > 0 ? in.data[i] : 0;
            break;
        case LayerKind::GlobalAvgPool: {
            const int n_batch = in.dim(0), C = in.dim(1);
            const size_t plane = static_cast<size_t>(in.dim(2)) * in.dim(3);
            for (int n = 0; n < n_batch; ++n)
                for (int c = 0; c < C; ++c) {
                    const double* p = &in.data[(static_cast<size_t>(n) * C + c) * plane];
                    double acc = 0.0;
                    for (size_t i = 0; i < plane; ++i) acc += p[i];
                    out.data[static_cast<size_t>(n) * C + c] = acc / static_cast<double>(plane);
                }
            break;
        }
        case LayerKind::Dense:
            dense_forward(layer, in, out);
            break;
        case LayerKind::Softmax:
            softmax_forward(in, out);
            break;
    }
}

}  // namespace

Tensor forward(const Network& net, const Tensor& batch, ForwardCache* cache) {
    if (batch.shape.empty()) throw DataError("forward: empty batch");
    const auto shapes = shape_chain(net);
    const Shape3& in = shapes[0];
    const bool flat_in = batch.shape.size() == 2;
    if ((flat_in && batch.dim(1) != in.flat()) ||
        (!flat_in && (batch.shape.size() != 4 || batch.dim(1) != in.c || batch.dim(2) != in.h ||
                      batch.dim(3) != in.w)))
        throw DataError("forward: batch shape does not match network input");

    const int n_batch = batch.dim(0);
    std::vector<double> scratch;
    if (cache) {
        cache->acts.clear();
        cache->acts.reserve(net.layers.size() + 1);
        cache->acts.push_back(batch);
        for (size_t i = 0; i < net.layers.size(); ++i) {
            Tensor out = output_tensor(shapes[i + 1], n_batch);
            layer_forward(net.layers[i], cache->acts[i], out, scratch);
            cache->acts.push_back(std::move(out));
        }
        return cache->acts.back();
    }
    Tensor cur = batch;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        Tensor out = output_tensor(shapes[i + 1], n_batch);
        layer_forward(net.layers[i], cur, out, scratch);
        cur = std::move(out);
    }
    return cur;
}

Tensor softmax_rows(const Tensor& logits) {
    Tensor out = Tensor::zeros(logits.shape);
    softmax_forward(logits, out);
    return out;
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Tensor* dlogits) {
    const int n_batch = logits.dim(0);
    const int C = static_cast<int>(logits.size() / n_batch);
    if (static_cast<size_t>(n_batch) != labels.size())
        throw DataError("cross_entropy: batch/label count mismatch");
    for (int y : labels)
        if (y < 0 || y >= C)
            throw DataError("cross_entropy: label " + std::to_string(y) +
                            " out of range for " + std::to_string(C) + " classes");

    if (dlogits) *dlogits = Tensor::zeros(logits.shape);
    double total = 0.0;
    for (int n = 0; n < n_batch; ++n) {
        const double* x = &logits.data[static_cast<size_t>(n) * C];
        double m = x[0];
        for (int c = 1; c < C; ++c) m = std::max(m, x[c]);
        double z = 0.0;
        for (int c = 0; c < C; ++c) z += std::exp(x[c] - m);
        double lse = m + std::log(z);
        total += lse - x[labels[n]];
        if (dlogits) {
            double* d = &dlogits->data[static_cast<size_t>(n) * C];
            for (int c = 0; c < C; ++c) d[c] = std::exp(x[c] - lse) / n_batch;
            d[labels[n]] -= 1.0 / n_batch;
        }
    }
    return total / n_batch;
}

namespace {

// Backprop starting from d at the output of layer (end_layer - 1).
BackpropResult backprop_from(const Network& net, const ForwardCache& cache, size_t end_layer,
                             Tensor d, const BackpropOptions& opt) {
    if (cache.acts.size() != net.layers.size() + 1)
        throw DataError("backprop: cache does not match network");

    BackpropResult res;
    res.grads.weights.resize(net.layers.size());
    res.grads.bias.resize(net.layers.size());

    for (size_t li = end_layer; li-- > 0;) {
        const Layer& layer = net.layers[li];
        const Tensor& in = cache.acts[li];
        const Tensor& out = cache.acts[li + 1];
        const bool need_input_grad = li > 0 || opt.want_input_grad;
        const bool need_params =
            opt.want_param_grads && layer.has_params() && layer.spec.trainable;

        Tensor d_in;
        if (need_input_grad) d_in = Tensor::zeros(in.shape);
        if (need_params) {
            res.grads.weights[li] = Tensor::zeros(layer.weights.shape);
            res.grads.bias[li] = Tensor::zeros(layer.bias.shape);
        }

        switch (layer.spec.kind) {
            case LayerKind::Conv:
                conv_backward(layer, in, d, need_input_grad ? &d_in : nullptr,
                              need_params ? &res.grads.weights[li] : nullptr,
                              need_params ? &res.grads.bias[li] : nullptr);
                break;
            case LayerKind::MaxPool:
                if (need_input_grad) max_pool_backward(layer.spec.kernel, in, d, d_in);
                break;
            case LayerKind::Relu:
                if (need_input_grad)
                    for (size_t i = 0; i < in.size(); ++i)
                        d_in.data[i] = in.data[i] > 0 ? d.data[i] : 0.0;
                break;
            case LayerKind::GlobalAvgPool:
                if (need_input_grad) {
                    const int n_batch = in.dim(0), C = in.dim(1);
                    const size_t plane = static_cast<size_t>(in.dim(2)) * in.dim(3);
                    for (int n = 0; n < n_batch; ++n)
                        for (int c = 0; c < C; ++c) {
                            double g = d.data[static_cast<size_t>(n) * C + c] /
                                       static_cast<double>(plane);
                            double* p = &d_in.data[(static_cast<size_t>(n) * C + c) * plane];
                            for (size_t i = 0; i < plane; ++i) p[i] = g;
                        }
                }
                break;
            case LayerKind::Dense:
                dense_backward(layer, in, d, need_input_grad ? &d_in : nullptr,
                               need_params ? &res.grads.weights[li] : nullptr,
                               need_params ? &res.grads.bias[li] : nullptr);
                break;
            case LayerKind::Softmax:
                if (need_input_grad) softmax_backward(out, d, d_in);
                break;
        }
        d = std::move(d_in);
    }
    if (opt.want_input_grad) res.input_grad = std::move(d);
    return res;
}

}  // namespace

BackpropResult backprop(const Network& net, const ForwardCache& cache, const Tensor& d_output,
                        const BackpropOptions& opt) {
    if (d_output.shape != cache.acts.back().shape)
        throw DataError("backprop: gradient shape does not match network output");
    return backprop_from(net, cache, net.layers.size(), d_output, opt);
}

Gradients backward(const Network& net, const ForwardCache& cache,
                   const std::vector<int>& labels, double* loss_out) {
    const bool fused_softmax =
        !net.layers.empty() && net.layers.back().spec.kind == LayerKind::Softmax;
    const size_t logits_index = net.layers.size() - (fused_softmax ? 1 : 0);
    const Tensor& logits = cache.acts[logits_index];
    const int n_batch = logits.dim(0);
    const int C = static_cast<int>(logits.size() / n_batch);
    if (static_cast<size_t>(n_batch) != labels.size())
        throw DataError("backward: batch/label count mismatch");

    Tensor d;
    double loss = 0.0;
    if (fused_softmax) {
        for (int y : labels)
            if (y < 0 || y >= C)
                throw DataError("backward: label " + std::to_string(y) + " out of range");
        const Tensor& probs = cache.acts.back();
        d = Tensor::zeros(logits.shape);
        for (int n = 0; n < n_batch; ++n) {
            const double* p = &probs.data[static_cast<size_t>(n) * C];
            double* dn = &d.data[static_cast<size_t>(n) * C];
            loss -= std::log(std::max(p[labels[n]], 1e-300));
            for (int c = 0; c < C; ++c) dn[c] = p[c] / n_batch;
            dn[labels[n]] -= 1.0 / n_batch;
        }
        loss /= n_batch;
    } else {
        loss = softmax_cross_entropy(logits, labels, &d);
    }
    if (loss_out) *loss_out = loss;
    return backprop_from(net, cache, logits_index, std::move(d), {}).grads;
}

double grad_check(const Network& net, const Tensor& batch, const std::vector<int>& labels,
                  double eps, int max_samples, uint64_t seed) {
    ForwardCache cache;
    forward(net, batch, &cache);
    Gradients analytic = backward(net, cache, labels);

    struct Coord {
        size_t layer;
        bool is_weight;
        size_t idx;
    };
    std::vector<Coord> coords;
    for (size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        if (!l.has_params() || !l.spec.trainable) continue;
        for (size_t i = 0; i < l.weights.size(); ++i) coords.push_back({li, true, i});
        for (size_t i = 0; i < l.bias.size(); ++i) coords.push_back({li, false, i});
    }
    if (coords.size() > static_cast<size_t>(max_samples)) {
        Rng rng(seed);
        rng.shuffle(coords);
        coords.resize(max_samples);
    }

    Network probe = net;
    auto loss_at = [&]() {
        Tensor out = forward(probe, batch);
        const bool fused = !probe.layers.empty() &&
                           probe.layers.back().spec.kind == LayerKind::Softmax;
        if (!fused) return softmax_cross_entropy(out, labels);
        const int n_batch = out.dim(0);
        const int C = static_cast<int>(out.size() / n_batch);
        double loss = 0.0;
        for (int n = 0; n < n_batch; ++n)
            loss -= std::log(std::max(out.data[static_cast<size_t>(n) * C + labels[n]], 1e-300));
        return loss / n_batch;
    };

    double max_rel = 0.0;
    for (const Coord& c : coords) {
        Layer& l = probe.layers[c.layer];
        double& p = c.is_weight ? l.weights.data[c.idx] : l.bias.data[c.idx];
        const double saved = p;
        p = saved + eps;
        double up = loss_at();
        p = saved - eps;
        double down = loss_at();
        p = saved;
        double fd = (up - down) / (2.0 * eps);
        double an = c.is_weight ? analytic.weights[c.layer][c.idx]
                                : analytic.bias[c.layer][c.idx];
        double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv: return "conv";
        case LayerKind::MaxPool: return "max_pool";
        case LayerKind::Relu: return "relu";
        case LayerKind::GlobalAvgPool: return "global_avg_pool";
        case LayerKind::Dense: return "dense";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

}  // namespace amd
