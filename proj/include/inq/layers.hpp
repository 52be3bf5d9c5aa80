#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "inq/tensor.hpp"

namespace inq {

struct DenseSpec {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
};

struct Conv2DSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;
};

struct ReluSpec {};

/// Non-overlapping max pooling; stride equals the pool size.
struct MaxPool2DSpec {
    std::size_t pool = 0;
};

struct FlattenSpec {};

using LayerSpec = std::variant<DenseSpec, Conv2DSpec, ReluSpec, MaxPool2DSpec, FlattenSpec>;

inline bool is_learnable(const LayerSpec& spec) {
    return std::holds_alternative<DenseSpec>(spec) || std::holds_alternative<Conv2DSpec>(spec);
}

inline std::string layer_kind_name(const LayerSpec& spec) {
    struct Namer {
        std::string operator()(const DenseSpec&) const { return "Dense"; }
        std::string operator()(const Conv2DSpec&) const { return "Conv2D"; }
        std::string operator()(const ReluSpec&) const { return "ReLU"; }
        std::string operator()(const MaxPool2DSpec&) const { return "MaxPool2D"; }
        std::string operator()(const FlattenSpec&) const { return "Flatten"; }
    };
    return std::visit(Namer{}, spec);
}

inline void validate_layer_spec(const LayerSpec& spec, std::size_t layer_index) {
    auto bad = [layer_index](const std::string& msg) {
        throw std::invalid_argument("layer " + std::to_string(layer_index) + ": " + msg);
    };
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        if (d->in_features == 0 || d->out_features == 0) bad("Dense features must be positive");
    } else if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
        if (c->in_channels == 0 || c->out_channels == 0) bad("Conv2D channels must be positive");
        if (c->kernel == 0) bad("Conv2D kernel must be positive");
        if (c->stride == 0) bad("Conv2D stride must be >= 1");
    } else if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
        if (p->pool == 0) bad("MaxPool2D pool size must be positive");
    }
}

/// Per-sample output shape of a layer given its per-sample input shape.
/// Throws with the layer index named when the shapes do not compose.
inline std::vector<std::size_t> layer_output_shape(const LayerSpec& spec,
                                                   const std::vector<std::size_t>& in,
                                                   std::size_t layer_index) {
    auto bad = [&](const std::string& msg) {
        throw std::invalid_argument("layer " + std::to_string(layer_index) + " (" +
                                    layer_kind_name(spec) + "): " + msg + ", input shape " +
                                    shape_to_string(in));
    };
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        if (in.size() != 1 || in[0] != d->in_features) {
            bad("expected rank-1 input of " + std::to_string(d->in_features) + " features");
        }
        return {d->out_features};
    }
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
        if (in.size() != 3 || in[0] != c->in_channels) {
            bad("expected (channels, height, width) input with " +
                std::to_string(c->in_channels) + " channels");
        }
        std::size_t h = in[1] + 2 * c->padding;
        std::size_t w = in[2] + 2 * c->padding;
        if (h < c->kernel || w < c->kernel) bad("kernel larger than padded input");
        std::size_t oh = (h - c->kernel) / c->stride + 1;
        std::size_t ow = (w - c->kernel) / c->stride + 1;
        return {c->out_channels, oh, ow};
    }
    if (std::holds_alternative<ReluSpec>(spec)) {
        return in;
    }
    if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
        if (in.size() != 3) bad("expected (channels, height, width) input");
        if (in[1] % p->pool != 0 || in[2] % p->pool != 0) {
            bad("height/width must be divisible by pool size " + std::to_string(p->pool));
        }
        return {in[0], in[1] / p->pool, in[2] / p->pool};
    }
    // Flatten
    if (in.empty()) bad("expected non-empty input shape");
    return {shape_product(in)};
}

/// Shapes of the weight/bias tensors of a learnable layer.
inline std::vector<std::size_t> weight_shape(const LayerSpec& spec) {
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        return {d->out_features, d->in_features};
    }
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
        return {c->out_channels, c->in_channels, c->kernel, c->kernel};
    }
    throw std::invalid_argument("weight_shape: layer has no parameters");
}

inline std::vector<std::size_t> bias_shape(const LayerSpec& spec) {
    if (const auto* d = std::get_if<DenseSpec>(&spec)) return {d->out_features};
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) return {c->out_channels};
    throw std::invalid_argument("bias_shape: layer has no parameters");
}

} // namespace inq
