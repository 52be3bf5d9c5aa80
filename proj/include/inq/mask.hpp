#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "inq/network.hpp"
#include "inq/tensor.hpp"

namespace inq {

/// Binary partition mask over one weight tensor. Bit 1 marks a re-trainable
/// entry, bit 0 an entry that has been quantized and is frozen.
struct Mask {
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> bits;

    static Mask ones(std::vector<std::size_t> shape) {
        Mask m;
        m.bits.assign(shape_product(shape), 1);
        m.shape = std::move(shape);
        return m;
    }

    std::size_t size() const { return bits.size(); }

    std::size_t frozen_count() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits) n += (b == 0);
        return n;
    }
};

/// One mask per learnable layer, in learnable-slot order.
using MaskSet = std::vector<Mask>;

inline MaskSet all_ones_masks(const Network& net) {
    MaskSet masks;
    masks.reserve(net.num_learnable());
    for (const Tensor& w : net.weights) masks.push_back(Mask::ones(w.shape()));
    return masks;
}

inline void check_masks(const Network& net, const MaskSet& masks) {
    if (masks.size() != net.num_learnable()) {
        throw std::invalid_argument("mask set size does not match learnable layer count");
    }
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks[i].size() != net.weights[i].size()) {
            throw std::invalid_argument("mask shape does not match weights of learnable layer " +
                                        std::to_string(i));
        }
    }
}

} // namespace inq
