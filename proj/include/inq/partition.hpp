#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "inq/mask.hpp"
#include "inq/random.hpp"
#include "inq/tensor.hpp"

namespace inq {

namespace detail {

inline std::vector<std::size_t> retrainable_indices(const Mask& mask) {
    std::vector<std::size_t> idx;
    idx.reserve(mask.size() - mask.frozen_count());
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (mask.bits[i]) idx.push_back(i);
    }
    return idx;
}

inline std::size_t partition_need(const Tensor& weights, const Mask& mask,
                                  std::size_t target_count) {
    if (weights.size() != mask.size()) {
        throw std::invalid_argument("partition: mask does not match weights");
    }
    const std::size_t frozen = mask.frozen_count();
    if (target_count < frozen) {
        throw std::invalid_argument("partition: target below current frozen count");
    }
    if (target_count > weights.size()) {
        throw std::invalid_argument("partition: target exceeds layer size");
    }
    return target_count - frozen;
}

} // namespace detail

/// Pruning-inspired partition: among the still re-trainable entries, flip
/// the ones with the largest absolute values to frozen until the layer has
/// `target_count` frozen entries. Ties prefer the lower flat index, so the
/// magnitude threshold is implied by the splitting ratio. Returns the flat
/// indices frozen by this call.
inline std::vector<std::size_t> partition_pruning(const Tensor& weights, Mask& mask,
                                                  std::size_t target_count) {
    const std::size_t need = detail::partition_need(weights, mask, target_count);
    if (need == 0) return {};
    std::vector<std::size_t> candidates = detail::retrainable_indices(mask);
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        const double aa = std::abs(weights[a]);
        const double ab = std::abs(weights[b]);
        if (aa != ab) return aa > ab;
        return a < b;
    });
    candidates.resize(need);
    for (std::size_t i : candidates) mask.bits[i] = 0;
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

/// Random partition: the same flip, but the entries are drawn uniformly
/// without replacement. Deterministic for a given seed.
inline std::vector<std::size_t> partition_random(const Tensor& weights, Mask& mask,
                                                 std::size_t target_count, std::uint64_t seed) {
    const std::size_t need = detail::partition_need(weights, mask, target_count);
    if (need == 0) return {};
    std::vector<std::size_t> candidates = detail::retrainable_indices(mask);
    Rng rng(seed);
    rng.shuffle(candidates);
    candidates.resize(need);
    for (std::size_t i : candidates) mask.bits[i] = 0;
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

} // namespace inq
