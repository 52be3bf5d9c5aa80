#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "inq/layers.hpp"
#include "inq/network.hpp"
#include "inq/tensor.hpp"

// Forward kernels shared by the training engine and the shift-add runtime.
// Both instantiate the same loop structure with a different weight term
// policy, so accumulation order is identical by construction and the two
// paths produce bit-identical activations for equal weight values.

namespace inq {

/// Plain floating-point weights: term = w * x.
struct MulWeightOp {
    const double* w;
    double term(std::size_t i, double x) const { return w[i] * x; }
};

namespace kernels {

template <class WeightOp>
void dense_sample(const DenseSpec& spec, const WeightOp& op, const double* bias,
                  const double* in, double* out) {
    const std::size_t in_n = spec.in_features;
    for (std::size_t j = 0; j < spec.out_features; ++j) {
        double acc = bias[j];
        const std::size_t row = j * in_n;
        for (std::size_t i = 0; i < in_n; ++i) {
            acc += op.term(row + i, in[i]);
        }
        out[j] = acc;
    }
}

template <class WeightOp>
void conv2d_sample(const Conv2DSpec& spec, const WeightOp& op, const double* bias,
                   const double* in, std::size_t h, std::size_t w,
                   double* out, std::size_t oh, std::size_t ow) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(spec.padding);
    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h);
    const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(w);
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = bias[oc];
                for (std::size_t ic = 0; ic < spec.in_channels; ++ic) {
                    for (std::size_t ky = 0; ky < spec.kernel; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * spec.stride + ky) - pad;
                        if (iy < 0 || iy >= ih) continue;
                        for (std::size_t kx = 0; kx < spec.kernel; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * spec.stride + kx) - pad;
                            if (ix < 0 || ix >= iw) continue;
                            const std::size_t widx =
                                ((oc * spec.in_channels + ic) * spec.kernel + ky) * spec.kernel + kx;
                            acc += op.term(widx, in[(ic * h + static_cast<std::size_t>(iy)) * w +
                                                    static_cast<std::size_t>(ix)]);
                        }
                    }
                }
                out[(oc * oh + oy) * ow + ox] = acc;
            }
        }
    }
}

inline void relu(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

/// Ties resolved to the first element in row-major window order.
inline void maxpool_sample(const MaxPool2DSpec& spec, const double* in, std::size_t c,
                           std::size_t h, std::size_t w, double* out) {
    const std::size_t p = spec.pool;
    const std::size_t oh = h / p, ow = w / p;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double best = in[(ch * h + oy * p) * w + ox * p];
                for (std::size_t ky = 0; ky < p; ++ky) {
                    for (std::size_t kx = 0; kx < p; ++kx) {
                        double v = in[(ch * h + oy * p + ky) * w + ox * p + kx];
                        if (v > best) best = v;
                    }
                }
                out[(ch * oh + oy) * ow + ox] = best;
            }
        }
    }
}

} // namespace kernels

namespace detail {

inline void check_batch_shape(const std::vector<std::size_t>& input_shape, const Tensor& batch) {
    bool ok = batch.rank() == input_shape.size() + 1;
    if (ok) {
        for (std::size_t i = 0; i < input_shape.size(); ++i) {
            if (batch.shape()[i + 1] != input_shape[i]) ok = false;
        }
    }
    if (!ok) {
        throw std::invalid_argument("forward: batch shape " + shape_to_string(batch.shape()) +
                                    " does not compose with layer 0, expected per-sample shape " +
                                    shape_to_string(input_shape));
    }
}

/// Runs the whole stack, optionally recording every intermediate activation.
/// make_op(slot) yields the weight term policy for learnable slot `slot`.
template <class MakeOp>
Tensor run_forward(const std::vector<std::size_t>& input_shape,
                   const std::vector<LayerSpec>& layers, const std::vector<Tensor>& biases,
                   MakeOp&& make_op, const Tensor& batch,
                   std::vector<Tensor>* trace = nullptr) {
    check_batch_shape(input_shape, batch);
    const std::size_t n = batch.shape()[0];

    Tensor cur = batch;
    std::vector<std::size_t> cur_shape = input_shape;
    if (trace) {
        trace->clear();
        trace->push_back(cur);
    }

    std::size_t slot = 0;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const LayerSpec& spec = layers[li];
        std::vector<std::size_t> out_shape = layer_output_shape(spec, cur_shape, li);
        std::vector<std::size_t> batched = out_shape;
        batched.insert(batched.begin(), n);
        Tensor next(batched);

        const std::size_t in_stride = shape_product(cur_shape);
        const std::size_t out_stride = shape_product(out_shape);

        if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            auto op = make_op(slot);
            const double* bias = biases[slot].data();
            for (std::size_t s = 0; s < n; ++s) {
                kernels::dense_sample(*d, op, bias, cur.data() + s * in_stride,
                                      next.data() + s * out_stride);
            }
            ++slot;
        } else if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
            auto op = make_op(slot);
            const double* bias = biases[slot].data();
            for (std::size_t s = 0; s < n; ++s) {
                kernels::conv2d_sample(*c, op, bias, cur.data() + s * in_stride, cur_shape[1],
                                       cur_shape[2], next.data() + s * out_stride, out_shape[1],
                                       out_shape[2]);
            }
            ++slot;
        } else if (std::holds_alternative<ReluSpec>(spec)) {
            kernels::relu(cur.data(), next.data(), cur.size());
        } else if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
            for (std::size_t s = 0; s < n; ++s) {
                kernels::maxpool_sample(*p, cur.data() + s * in_stride, cur_shape[0], cur_shape[1],
                                        cur_shape[2], next.data() + s * out_stride);
            }
        } else { // Flatten
            std::copy(cur.values().begin(), cur.values().end(), next.values().begin());
        }

        cur = std::move(next);
        cur_shape = std::move(out_shape);
        if (trace) trace->push_back(cur);
    }
    return cur;
}

} // namespace detail

/// Deterministic forward pass; logits of shape (batch, num_classes).
inline Tensor forward(const Network& net, const Tensor& batch) {
    return detail::run_forward(
        net.input_shape, net.layers, net.biases,
        [&](std::size_t slot) { return MulWeightOp{net.weights[slot].data()}; }, batch);
}

} // namespace inq
