#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "inq/random.hpp"
#include "inq/tensor.hpp"

namespace inq {

/// Labeled classification data. inputs is (N, per-sample shape); one label
/// in [0, num_classes) per input row.
struct Dataset {
    Tensor inputs;
    std::vector<std::int32_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }

    std::vector<std::size_t> sample_shape() const {
        if (inputs.rank() == 0) return {};
        return {inputs.shape().begin() + 1, inputs.shape().end()};
    }

    void validate() const {
        if (inputs.rank() == 0 && labels.empty()) return;
        if (inputs.rank() == 0 || inputs.shape()[0] != labels.size()) {
            throw std::invalid_argument("Dataset: one label per input row required");
        }
        for (std::int32_t l : labels) {
            if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
                throw std::invalid_argument("Dataset: label out of range");
            }
        }
    }

    /// Rows `indices` gathered into a batch tensor plus matching labels.
    std::pair<Tensor, std::vector<std::int32_t>> gather(const std::vector<std::size_t>& indices,
                                                        std::size_t begin, std::size_t count) const {
        std::vector<std::size_t> shape = inputs.shape();
        shape[0] = count;
        Tensor batch(shape);
        std::vector<std::int32_t> batch_labels(count);
        const std::size_t stride = shape_product(sample_shape());
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t src = indices[begin + i];
            std::copy(inputs.data() + src * stride, inputs.data() + (src + 1) * stride,
                      batch.data() + i * stride);
            batch_labels[i] = labels[src];
        }
        return {std::move(batch), std::move(batch_labels)};
    }
};

enum class SyntheticKind { Blobs, Spirals };

inline SyntheticKind synthetic_kind_from_string(const std::string& s) {
    if (s == "blobs") return SyntheticKind::Blobs;
    if (s == "spirals") return SyntheticKind::Spirals;
    throw std::invalid_argument("unknown synthetic dataset kind: " + s);
}

/// Deterministic 2-d point datasets. Blobs are well-separated Gaussian
/// clusters (linearly separable); spirals interleave one arm per class and
/// are not. Class counts are balanced within one sample.
inline Dataset gen_synthetic(SyntheticKind kind, std::size_t classes, std::size_t n,
                             std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("gen_synthetic: classes must be >= 2");
    if (n < classes) throw std::invalid_argument("gen_synthetic: n must be >= classes");

    constexpr double kTau = 6.28318530717958647692;
    Rng rng(seed);
    Dataset ds;
    ds.num_classes = classes;
    ds.inputs = Tensor({n, 2});
    ds.labels.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;
        double x = 0.0, y = 0.0;
        if (kind == SyntheticKind::Blobs) {
            const double ang = kTau * static_cast<double>(c) / static_cast<double>(classes);
            x = 5.0 * std::cos(ang) + 0.4 * rng.normal();
            y = 5.0 * std::sin(ang) + 0.4 * rng.normal();
        } else {
            // one spiral arm per class, radius 0.3..1.0, winding 0.8 turns
            const double t = rng.uniform();
            const double r = 0.3 + 0.7 * t;
            const double ang =
                kTau * (static_cast<double>(c) / static_cast<double>(classes) + 0.8 * t);
            x = r * std::cos(ang) + 0.008 * rng.normal();
            y = r * std::sin(ang) + 0.008 * rng.normal();
        }
        ds.inputs[2 * i] = x;
        ds.inputs[2 * i + 1] = y;
        ds.labels[i] = static_cast<std::int32_t>(c);
    }
    return ds;
}

} // namespace inq
