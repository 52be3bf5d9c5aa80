#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inq/dataset.hpp"
#include "inq/forward.hpp"
#include "inq/mask.hpp"
#include "inq/network.hpp"
#include "inq/random.hpp"

namespace inq {

struct SgdConfig {
    double learning_rate = 0.01;
    double momentum = 0.0;     // in [0, 1)
    double weight_decay = 0.0; // L2 coefficient, coupled into the update
    std::size_t batch_size = 32;
    // (epoch, multiplier) pairs; the multiplier applies from that epoch on
    std::vector<std::pair<std::size_t, double>> lr_schedule;
};

inline void validate(const SgdConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("SgdConfig: learning_rate must be > 0");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
        throw std::invalid_argument("SgdConfig: momentum must be in [0, 1)");
    }
    if (cfg.weight_decay < 0.0) throw std::invalid_argument("SgdConfig: weight_decay must be >= 0");
    if (cfg.batch_size == 0) throw std::invalid_argument("SgdConfig: batch_size must be positive");
    for (std::size_t i = 1; i < cfg.lr_schedule.size(); ++i) {
        if (cfg.lr_schedule[i].first <= cfg.lr_schedule[i - 1].first) {
            throw std::invalid_argument("SgdConfig: schedule epochs must be strictly increasing");
        }
    }
}

inline double lr_at_epoch(const SgdConfig& cfg, std::size_t epoch) {
    double mult = 1.0;
    for (const auto& [e, m] : cfg.lr_schedule) {
        if (epoch >= e) mult = m;
    }
    return cfg.learning_rate * mult;
}

/// Per-parameter gradients, aligned with the network's learnable slots.
struct Gradients {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
};

/// Momentum buffers, aligned with the network's learnable slots.
struct SgdState {
    std::vector<Tensor> vel_w;
    std::vector<Tensor> vel_b;
};

inline SgdState make_sgd_state(const Network& net) {
    SgdState s;
    for (const Tensor& w : net.weights) s.vel_w.emplace_back(w.shape());
    for (const Tensor& b : net.biases) s.vel_b.emplace_back(b.shape());
    return s;
}

namespace detail {

struct LossResult {
    double loss = 0.0;
    Tensor logits;
    Gradients grads;
};

inline void softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels,
                                  double& loss, Tensor& dlogits) {
    const std::size_t n = logits.shape()[0];
    const std::size_t classes = logits.shape()[1];
    if (n == 0) throw std::invalid_argument("loss: empty batch");
    dlogits = Tensor(logits.shape());
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double* row = logits.data() + s * classes;
        const std::int32_t label = labels[s];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw std::invalid_argument("loss: label out of range");
        }
        double m = row[0];
        for (std::size_t j = 1; j < classes; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < classes; ++j) sum += std::exp(row[j] - m);
        const double log_sum = m + std::log(sum);
        total += log_sum - row[label];
        double* drow = dlogits.data() + s * classes;
        for (std::size_t j = 0; j < classes; ++j) {
            double p = std::exp(row[j] - log_sum);
            drow[j] = (p - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) * inv_n;
        }
    }
    loss = total * inv_n;
}

inline void dense_backward(const DenseSpec& spec, const double* w, const double* in,
                           const double* dout, double* dw, double* db, double* din) {
    const std::size_t in_n = spec.in_features;
    for (std::size_t i = 0; i < in_n; ++i) din[i] = 0.0;
    for (std::size_t j = 0; j < spec.out_features; ++j) {
        const double g = dout[j];
        const std::size_t row = j * in_n;
        db[j] += g;
        for (std::size_t i = 0; i < in_n; ++i) {
            dw[row + i] += g * in[i];
            din[i] += g * w[row + i];
        }
    }
}

inline void conv2d_backward(const Conv2DSpec& spec, const double* w, const double* in,
                            std::size_t h, std::size_t wd, const double* dout, std::size_t oh,
                            std::size_t ow, double* dw, double* db, double* din) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(spec.padding);
    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h);
    const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(wd);
    for (std::size_t i = 0; i < spec.in_channels * h * wd; ++i) din[i] = 0.0;
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = dout[(oc * oh + oy) * ow + ox];
                db[oc] += g;
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
                                ((oc * spec.in_channels + ic) * spec.kernel + ky) * spec.kernel +
                                kx;
                            const std::size_t iidx =
                                (ic * h + static_cast<std::size_t>(iy)) * wd +
                                static_cast<std::size_t>(ix);
                            dw[widx] += g * in[iidx];
                            din[iidx] += g * w[widx];
                        }
                    }
                }
            }
        }
    }
}

inline void maxpool_backward(const MaxPool2DSpec& spec, const double* in, std::size_t c,
                             std::size_t h, std::size_t w, const double* dout, double* din) {
    const std::size_t p = spec.pool;
    const std::size_t oh = h / p, ow = w / p;
    for (std::size_t i = 0; i < c * h * w; ++i) din[i] = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best_idx = (ch * h + oy * p) * w + ox * p;
                double best = in[best_idx];
                for (std::size_t ky = 0; ky < p; ++ky) {
                    for (std::size_t kx = 0; kx < p; ++kx) {
                        std::size_t idx = (ch * h + oy * p + ky) * w + ox * p + kx;
                        if (in[idx] > best) {
                            best = in[idx];
                            best_idx = idx;
                        }
                    }
                }
                din[best_idx] += dout[(ch * oh + oy) * ow + ox];
            }
        }
    }
}

/// Forward with trace, softmax cross-entropy, full backward sweep.
inline LossResult loss_and_gradients_full(const Network& net, const Tensor& batch,
                                          std::span<const std::int32_t> labels) {
    if (batch.rank() == 0 || batch.shape()[0] == 0) throw std::invalid_argument("loss: empty batch");
    if (labels.size() != batch.shape()[0]) {
        throw std::invalid_argument("loss: one label per batch row required");
    }

    std::vector<Tensor> trace;
    Tensor logits = detail::run_forward(
        net.input_shape, net.layers, net.biases,
        [&](std::size_t slot) { return MulWeightOp{net.weights[slot].data()}; }, batch, &trace);

    LossResult res;
    res.logits = logits;
    Tensor dcur;
    softmax_cross_entropy(logits, labels, res.loss, dcur);

    res.grads.weights.reserve(net.num_learnable());
    res.grads.biases.reserve(net.num_learnable());
    for (const Tensor& w : net.weights) res.grads.weights.emplace_back(w.shape());
    for (const Tensor& b : net.biases) res.grads.biases.emplace_back(b.shape());

    const std::size_t n = batch.shape()[0];

    // per-layer per-sample shapes, recomputed once for the backward sweep
    std::vector<std::vector<std::size_t>> shapes;
    shapes.push_back(net.input_shape);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        shapes.push_back(layer_output_shape(net.layers[li], shapes.back(), li));
    }

    std::size_t slot = net.num_learnable();
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const LayerSpec& spec = net.layers[li];
        const Tensor& input = trace[li];
        const std::size_t in_stride = shape_product(shapes[li]);
        const std::size_t out_stride = shape_product(shapes[li + 1]);
        Tensor dprev(input.shape());

        if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            --slot;
            for (std::size_t s = 0; s < n; ++s) {
                dense_backward(*d, net.weights[slot].data(), input.data() + s * in_stride,
                               dcur.data() + s * out_stride, res.grads.weights[slot].data(),
                               res.grads.biases[slot].data(), dprev.data() + s * in_stride);
            }
        } else if (const auto* cv = std::get_if<Conv2DSpec>(&spec)) {
            --slot;
            for (std::size_t s = 0; s < n; ++s) {
                conv2d_backward(*cv, net.weights[slot].data(), input.data() + s * in_stride,
                                shapes[li][1], shapes[li][2], dcur.data() + s * out_stride,
                                shapes[li + 1][1], shapes[li + 1][2],
                                res.grads.weights[slot].data(), res.grads.biases[slot].data(),
                                dprev.data() + s * in_stride);
            }
        } else if (std::holds_alternative<ReluSpec>(spec)) {
            for (std::size_t i = 0; i < input.size(); ++i) {
                dprev[i] = input[i] > 0.0 ? dcur[i] : 0.0;
            }
        } else if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
            for (std::size_t s = 0; s < n; ++s) {
                maxpool_backward(*p, input.data() + s * in_stride, shapes[li][0], shapes[li][1],
                                 shapes[li][2], dcur.data() + s * out_stride,
                                 dprev.data() + s * in_stride);
            }
        } else { // Flatten
            std::copy(dcur.values().begin(), dcur.values().end(), dprev.values().begin());
        }
        dcur = std::move(dprev);
    }
    return res;
}

} // namespace detail

/// Mean softmax cross-entropy over the batch and its parameter gradients.
/// The L2 regularizer is applied inside sgd_step as weight decay, not here.
inline std::pair<double, Gradients> loss_and_gradients(const Network& net, const Tensor& batch,
                                                       std::span<const std::int32_t> labels) {
    auto full = detail::loss_and_gradients_full(net, batch, labels);
    return {full.loss, std::move(full.grads)};
}

/// Momentum SGD update with coupled weight decay. Weight entries whose mask
/// bit is 0 are left bit-identical and their velocity is forced to zero.
/// A null mask means every entry is re-trainable. `lr_override` < 0 uses
/// cfg.learning_rate.
inline void sgd_step(Network& net, const Gradients& grads, SgdState& state, const SgdConfig& cfg,
                     const MaskSet* mask = nullptr, double lr_override = -1.0) {
    const double lr = lr_override < 0.0 ? cfg.learning_rate : lr_override;
    if (mask) check_masks(net, *mask);
    for (std::size_t slot = 0; slot < net.num_learnable(); ++slot) {
        Tensor& w = net.weights[slot];
        const Tensor& gw = grads.weights[slot];
        Tensor& vw = state.vel_w[slot];
        if (!w.same_shape(gw) || !w.same_shape(vw)) {
            throw std::invalid_argument("sgd_step: gradient/velocity shape mismatch at slot " +
                                        std::to_string(slot));
        }
        const std::uint8_t* bits = mask ? (*mask)[slot].bits.data() : nullptr;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (bits && bits[i] == 0) {
                vw[i] = 0.0; // stale velocity must not leak if an entry ever unfreezes
                continue;
            }
            const double g = gw[i] + cfg.weight_decay * w[i];
            vw[i] = cfg.momentum * vw[i] + g;
            w[i] -= lr * vw[i];
        }
        Tensor& b = net.biases[slot];
        const Tensor& gb = grads.biases[slot];
        Tensor& vb = state.vel_b[slot];
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double g = gb[i] + cfg.weight_decay * b[i];
            vb[i] = cfg.momentum * vb[i] + g;
            b[i] -= lr * vb[i];
        }
    }
}

struct EpochMetrics {
    std::size_t epoch = 0; // 0-based
    double loss = 0.0;     // mean training loss over the epoch
    double accuracy = 0.0; // training accuracy from the pre-update logits
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t epoch, std::size_t step)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(step)),
          epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

using EpochCallback = std::function<void(const Network&, const EpochMetrics&)>;

/// Mini-batch SGD with a deterministic reshuffle per epoch. Optional masks
/// freeze weight entries (Q-step re-training); optional external state keeps
/// momentum across calls.
inline std::vector<EpochMetrics> train(Network& net, const Dataset& data, const SgdConfig& cfg,
                                       std::size_t epochs, std::uint64_t seed,
                                       const MaskSet* mask = nullptr, SgdState* state = nullptr,
                                       const EpochCallback& on_epoch = {}) {
    validate(cfg);
    data.validate();
    if (epochs == 0) throw std::invalid_argument("train: epochs must be >= 1");
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");

    SgdState local;
    if (!state) {
        local = make_sgd_state(net);
        state = &local;
    }

    Rng rng(seed);
    const std::size_t n = data.size();
    std::vector<EpochMetrics> metrics;
    metrics.reserve(epochs);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        std::vector<std::size_t> perm = rng.permutation(n);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t step = 0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size, ++step) {
            const std::size_t count = std::min(cfg.batch_size, n - begin);
            auto [batch, labels] = data.gather(perm, begin, count);
            auto full = detail::loss_and_gradients_full(net, batch, labels);
            if (!std::isfinite(full.loss)) throw TrainingDiverged(epoch, step);
            loss_sum += full.loss * static_cast<double>(count);
            const std::size_t classes = full.logits.shape()[1];
            for (std::size_t s = 0; s < count; ++s) {
                const double* row = full.logits.data() + s * classes;
                std::size_t arg = 0;
                for (std::size_t j = 1; j < classes; ++j) {
                    if (row[j] > row[arg]) arg = j;
                }
                correct += (arg == static_cast<std::size_t>(labels[s]));
            }
            sgd_step(net, full.grads, *state, cfg, mask, lr);
        }
        EpochMetrics em{epoch, loss_sum / static_cast<double>(n),
                        static_cast<double>(correct) / static_cast<double>(n)};
        metrics.push_back(em);
        if (on_epoch) on_epoch(net, em);
    }
    return metrics;
}

struct EvalMetrics {
    double top1 = 0.0;
    std::optional<double> topk; // present when num_classes >= k
    std::size_t k = 5;
};

namespace detail {

template <class ForwardFn>
EvalMetrics evaluate_with(ForwardFn&& fwd, const Dataset& data, std::size_t k,
                          std::size_t batch_size) {
    data.validate();
    EvalMetrics res;
    res.k = k;
    if (data.size() == 0) return res;

    std::vector<std::size_t> identity(data.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;

    std::size_t top1 = 0, topk = 0;
    std::size_t classes = 0;
    for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
        const std::size_t count = std::min(batch_size, data.size() - begin);
        auto [batch, labels] = data.gather(identity, begin, count);
        Tensor logits = fwd(batch);
        classes = logits.shape()[1];
        for (std::size_t s = 0; s < count; ++s) {
            const double* row = logits.data() + s * classes;
            const std::size_t label = static_cast<std::size_t>(labels[s]);
            // rank of the true class when ties prefer the lower class index
            std::size_t rank = 0;
            for (std::size_t j = 0; j < classes; ++j) {
                if (row[j] > row[label] || (row[j] == row[label] && j < label)) ++rank;
            }
            top1 += (rank == 0);
            topk += (rank < k);
        }
    }
    res.top1 = static_cast<double>(top1) / static_cast<double>(data.size());
    if (classes >= k) res.topk = static_cast<double>(topk) / static_cast<double>(data.size());
    return res;
}

} // namespace detail

/// Top-1 accuracy (argmax ties go to the lowest class index) and top-k when
/// the network has at least k classes.
inline EvalMetrics evaluate(const Network& net, const Dataset& data, std::size_t k = 5,
                            std::size_t batch_size = 256) {
    return detail::evaluate_with([&](const Tensor& b) { return forward(net, b); }, data, k,
                                 batch_size);
}

inline double accuracy(const Network& net, const Dataset& data) {
    return evaluate(net, data).top1;
}

} // namespace inq
