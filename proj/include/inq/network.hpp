#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "inq/layers.hpp"
#include "inq/random.hpp"
#include "inq/tensor.hpp"

namespace inq {

/// Feed-forward classifier: an ordered layer list plus the parameters of the
/// learnable layers. Layer shapes are validated once at construction.
struct Network {
    std::vector<std::size_t> input_shape; // per sample, no batch dimension
    std::vector<LayerSpec> layers;

    // Parameters indexed by learnable slot (0..num_learnable-1), in layer order.
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    // layer position of each learnable slot
    std::vector<std::size_t> learnable_layers;

    std::size_t num_learnable() const { return learnable_layers.size(); }

    std::size_t num_classes() const {
        if (layers.empty()) return 0;
        std::vector<std::size_t> shape = input_shape;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            shape = layer_output_shape(layers[i], shape, i);
        }
        return shape.size() == 1 ? shape[0] : 0;
    }

    std::size_t weight_count() const {
        std::size_t n = 0;
        for (const Tensor& w : weights) n += w.size();
        return n;
    }
};

inline Network make_network(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers) {
    if (layers.empty()) throw std::invalid_argument("make_network: no layers");
    for (std::size_t d : input_shape) {
        if (d == 0) throw std::invalid_argument("make_network: input dimensions must be positive");
    }
    Network net;
    net.input_shape = std::move(input_shape);
    net.layers = std::move(layers);

    std::vector<std::size_t> shape = net.input_shape;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        validate_layer_spec(net.layers[i], i);
        shape = layer_output_shape(net.layers[i], shape, i); // throws on mismatch
        if (is_learnable(net.layers[i])) {
            net.learnable_layers.push_back(i);
            net.weights.emplace_back(weight_shape(net.layers[i]));
            net.biases.emplace_back(bias_shape(net.layers[i]));
        }
    }
    if (shape.size() != 1) {
        throw std::invalid_argument("make_network: final layer must produce class logits, got " +
                                    shape_to_string(shape));
    }
    return net;
}

namespace detail {

inline void fan_in_out(const LayerSpec& spec, std::size_t& fan_in, std::size_t& fan_out) {
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        fan_in = d->in_features;
        fan_out = d->out_features;
    } else {
        const auto& c = std::get<Conv2DSpec>(spec);
        fan_in = c.in_channels * c.kernel * c.kernel;
        fan_out = c.out_channels * c.kernel * c.kernel;
    }
}

} // namespace detail

/// He-uniform for layers feeding a ReLU, Glorot-uniform otherwise; zero biases.
inline void init_params(Network& net, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t slot = 0; slot < net.num_learnable(); ++slot) {
        std::size_t pos = net.learnable_layers[slot];
        std::size_t fan_in = 0, fan_out = 0;
        detail::fan_in_out(net.layers[pos], fan_in, fan_out);
        bool relu_next = pos + 1 < net.layers.size() &&
                         std::holds_alternative<ReluSpec>(net.layers[pos + 1]);
        double limit = relu_next ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                 : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : net.weights[slot].values()) w = rng.uniform(-limit, limit);
        net.biases[slot].fill(0.0);
    }
}

} // namespace inq
