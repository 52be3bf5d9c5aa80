#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "inq/codec.hpp"
#include "inq/network.hpp"
#include "inq/quantizer.hpp"

namespace inq {

/// One learnable layer in packed form: grid parameters, the bit-packed
/// weight stream and the full-precision biases.
struct QuantizedLayer {
    int bits = 0;
    int n1 = 0;
    std::vector<std::size_t> weight_shape;
    Bitstream stream;
    Tensor bias;

    std::size_t count() const { return shape_product(weight_shape); }
    QuantGrid grid() const { return make_grid(bits, n1); }
};

/// Packed low-precision model; decodable to exact weights.
struct QuantizedModel {
    std::vector<std::size_t> input_shape;
    std::vector<LayerSpec> layers;
    std::vector<QuantizedLayer> qlayers; // one per learnable slot
    std::string provenance;              // resolved experiment config, may be empty
};

/// Pack a network whose weights already sit on the given per-layer grids.
inline QuantizedModel pack_network(const Network& net, const std::vector<QuantGrid>& grids,
                                   std::string provenance = {}) {
    if (grids.size() != net.num_learnable()) {
        throw std::invalid_argument("pack_network: one grid per learnable layer required");
    }
    QuantizedModel model;
    model.input_shape = net.input_shape;
    model.layers = net.layers;
    model.provenance = std::move(provenance);
    model.qlayers.reserve(net.num_learnable());
    for (std::size_t slot = 0; slot < net.num_learnable(); ++slot) {
        QuantizedLayer ql;
        ql.bits = grids[slot].bits;
        ql.n1 = grids[slot].n1;
        ql.weight_shape = net.weights[slot].shape();
        ql.stream = encode_layer(net.weights[slot], grids[slot]);
        ql.bias = net.biases[slot];
        model.qlayers.push_back(std::move(ql));
    }
    return model;
}

/// Decode back to a full network with exact weight values.
inline Network decode_model(const QuantizedModel& model) {
    Network net = make_network(model.input_shape, model.layers);
    if (model.qlayers.size() != net.num_learnable()) {
        throw std::invalid_argument("decode_model: layer table does not match packed layers");
    }
    for (std::size_t slot = 0; slot < net.num_learnable(); ++slot) {
        const QuantizedLayer& ql = model.qlayers[slot];
        Tensor flat = decode_layer(ql.stream, ql.grid(), ql.count());
        net.weights[slot] = flat.reshaped(ql.weight_shape);
        net.biases[slot] = ql.bias;
    }
    return net;
}

/// One-shot quantization of every weight against per-layer grids built from
/// the current weights (the global strategy, no re-training). All-zero
/// layers keep their zeros under a placeholder grid.
inline QuantizedModel quantize_one_shot(const Network& net, int bits,
                                        std::string provenance = {}) {
    std::vector<QuantGrid> grids;
    Network rounded = net;
    for (std::size_t slot = 0; slot < net.num_learnable(); ++slot) {
        if (max_abs(net.weights[slot]) == 0.0) {
            grids.push_back(make_grid(bits, -1));
            continue;
        }
        QuantGrid g = build_grid(net.weights[slot], bits);
        rounded.weights[slot] = quantize_all(net.weights[slot], g);
        grids.push_back(std::move(g));
    }
    return pack_network(rounded, grids, std::move(provenance));
}

} // namespace inq
