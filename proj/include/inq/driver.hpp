#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "inq/engine.hpp"
#include "inq/partition.hpp"
#include "inq/quantized_model.hpp"
#include "inq/quantizer.hpp"
#include "inq/schedule.hpp"

// Incremental quantization driver: repeat weight partition, group-wise
// quantization and masked re-training over an accumulated-portion schedule
// until every weight sits on its layer's power-of-two grid.

namespace inq {

enum class PartitionStrategy { Pruning, Random };

inline PartitionStrategy strategy_from_string(const std::string& s) {
    if (s == "pruning") return PartitionStrategy::Pruning;
    if (s == "random") return PartitionStrategy::Random;
    throw std::invalid_argument("unknown partition strategy: " + s);
}

inline std::string to_string(PartitionStrategy s) {
    return s == PartitionStrategy::Pruning ? "pruning" : "random";
}

struct InqOptions {
    int bits = 5;
    InqSchedule schedule = preset_schedules().at("resnet18-5bit");
    PartitionStrategy strategy = PartitionStrategy::Pruning;
    std::size_t epochs_per_step = 2; // the final (sigma = 1) step only quantizes
    std::uint64_t seed = 1;
};

/// Loop state across steps. Entries with mask bit 0 hold their quantized
/// value bit-exactly; grids are fixed once from the pre-trained weights.
struct InqState {
    Network net;
    MaskSet masks;
    std::vector<QuantGrid> grids; // per learnable slot
    std::size_t steps_done = 0;
    SgdState sgd; // reset at each step; serialized for checkpoint continuity
};

struct InqStepMetrics {
    std::size_t step = 0; // 1-based
    double sigma = 0.0;
    double frozen_fraction = 0.0;
    double train_loss = 0.0;    // NaN when the step did not re-train
    double eval_accuracy = 0.0;
};

struct InqResult {
    QuantizedModel model;
    std::vector<InqStepMetrics> steps;
};

/// Observer invoked after each completed step.
using StepCallback = std::function<void(const InqState&, const InqStepMetrics&)>;

/// Bitwise digest (FNV-1a) of all frozen weight entries, in layer and flat
/// order. Invariant across re-training epochs by construction.
inline std::uint64_t frozen_checksum(const Network& net, const MaskSet& masks) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (std::size_t slot = 0; slot < masks.size(); ++slot) {
        for (std::size_t i = 0; i < masks[slot].bits.size(); ++i) {
            if (masks[slot].bits[i] == 0) {
                const double v = net.weights[slot][i];
                mix(reinterpret_cast<const unsigned char*>(&v), sizeof(v));
            }
        }
    }
    return h;
}

inline std::size_t frozen_target(double sigma, std::size_t layer_size) {
    return static_cast<std::size_t>(std::llround(sigma * static_cast<double>(layer_size)));
}

/// Fresh state for a trained full-precision network. Grids are computed
/// once per layer here and reused at every step, so each layer ends up
/// with a single b-bit codebook. A degenerate all-zero layer gets a
/// placeholder grid and is frozen immediately; its zeros are grid values.
inline InqState init_inq(const Network& trained, int bits) {
    InqState state;
    state.net = trained;
    state.masks = all_ones_masks(trained);
    state.sgd = make_sgd_state(trained);
    state.grids.reserve(trained.num_learnable());
    for (std::size_t slot = 0; slot < trained.num_learnable(); ++slot) {
        if (max_abs(trained.weights[slot]) == 0.0) {
            state.grids.push_back(make_grid(bits, -1));
            state.masks[slot].bits.assign(state.masks[slot].size(), 0);
        } else {
            state.grids.push_back(build_grid(trained.weights[slot], bits));
        }
    }
    return state;
}

/// One schedule step: raise each layer's frozen count to round(sigma * size),
/// quantize the newly frozen entries against the layer's fixed grid, then
/// re-train the remaining entries with masked updates from the re-set base
/// learning rate. Previously frozen entries are untouched bit-exactly.
inline InqStepMetrics inq_step(InqState& state, PartitionStrategy strategy, double sigma,
                               std::size_t retrain_epochs, const Dataset& data,
                               const SgdConfig& cfg, std::uint64_t seed,
                               const EpochCallback& on_epoch = {}) {
    std::size_t frozen_total = 0, weight_total = 0;
    for (std::size_t slot = 0; slot < state.net.num_learnable(); ++slot) {
        Tensor& w = state.net.weights[slot];
        Mask& mask = state.masks[slot];
        std::size_t target = frozen_target(sigma, w.size());
        if (target < mask.frozen_count()) target = mask.frozen_count(); // degenerate layers
        std::vector<std::size_t> fresh =
            strategy == PartitionStrategy::Pruning
                ? partition_pruning(w, mask, target)
                : partition_random(w, mask, target, derive_seed(seed, 0x70000000ULL + slot));
        w = quantize_subset(w, state.grids[slot], fresh);
        frozen_total += mask.frozen_count();
        weight_total += w.size();
    }

    InqStepMetrics metrics;
    metrics.step = state.steps_done + 1;
    metrics.sigma = sigma;
    metrics.frozen_fraction =
        weight_total ? static_cast<double>(frozen_total) / static_cast<double>(weight_total) : 1.0;
    metrics.train_loss = std::nan("");

    if (retrain_epochs > 0) {
        state.sgd = make_sgd_state(state.net); // fresh optimizer, re-set learning policy
        // on divergence the exception propagates and the caller keeps the
        // partitioned state for inspection
        auto epochs = train(state.net, data, cfg, retrain_epochs, seed, &state.masks, &state.sgd,
                            on_epoch);
        metrics.train_loss = epochs.back().loss;
    }
    state.steps_done += 1;
    return metrics;
}

namespace detail {

inline InqResult run_inq_from(InqState state, const InqOptions& opt, const Dataset& train_data,
                              const Dataset& eval_data, const SgdConfig& cfg,
                              const StepCallback& on_step, const EpochCallback& on_epoch) {
    validate(cfg);
    InqResult result;
    const std::size_t n_steps = opt.schedule.steps();
    for (std::size_t n = state.steps_done; n < n_steps; ++n) {
        const double sigma = opt.schedule.sigmas[n];
        // the last run only quantizes; there is nothing left to re-train
        const std::size_t epochs = (sigma >= 1.0) ? 0 : opt.epochs_per_step;
        InqStepMetrics m = inq_step(state, opt.strategy, sigma, epochs, train_data, cfg,
                                    derive_seed(opt.seed, n + 1), on_epoch);
        m.eval_accuracy = evaluate(state.net, eval_data).top1;
        if (on_step) on_step(state, m);
        result.steps.push_back(m);
    }
    result.model = pack_network(state.net, state.grids);
    return result;
}

} // namespace detail

/// Algorithm driver, end to end: partition / quantize / re-train per step,
/// then pack the fully quantized network. Emits per-step metrics so the
/// incremental accuracy recovery is observable.
inline InqResult run_inq(const Network& trained, const InqOptions& opt, const Dataset& train_data,
                         const Dataset& eval_data, const SgdConfig& cfg,
                         const StepCallback& on_step = {}, const EpochCallback& on_epoch = {}) {
    return detail::run_inq_from(init_inq(trained, opt.bits), opt, train_data, eval_data, cfg,
                                on_step, on_epoch);
}

/// Interrupted-run snapshot; resuming reproduces the uninterrupted run
/// bit-exactly because per-step seeds derive from (seed, step index) alone.
struct InqCheckpoint {
    InqState state;
    InqOptions options;
    SgdConfig sgd_config;
};

inline InqResult resume_inq(const InqCheckpoint& ckpt, const Dataset& train_data,
                            const Dataset& eval_data, const StepCallback& on_step = {},
                            const EpochCallback& on_epoch = {}) {
    return detail::run_inq_from(ckpt.state, ckpt.options, train_data, eval_data, ckpt.sgd_config,
                                on_step, on_epoch);
}

} // namespace inq
