#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "inq/engine.hpp"
#include "inq/forward.hpp"
#include "inq/quantized_model.hpp"

namespace inq {

/// A weight as sign plus shift amount: reconstructs sign * 2^exponent,
/// or exactly zero when sign is 0.
struct ShiftWeight {
    std::int8_t sign = 0; // -1, 0, +1
    std::int16_t exponent = 0;
};

struct ShiftLayer {
    std::vector<ShiftWeight> weights;
    std::vector<std::size_t> weight_shape;
    Tensor bias;
};

/// Multiply-free model: every learnable layer holds shift-form weights.
struct ShiftModel {
    std::vector<std::size_t> input_shape;
    std::vector<LayerSpec> layers;
    std::vector<ShiftLayer> slayers;
};

/// Weight term policy for the shared forward kernels: the product x * (+-2^k)
/// becomes sign application plus exact exponent scaling of x, and a zero
/// weight contributes the signed zero the float product would. Both routes
/// are correctly rounded values of the same real product, so activations
/// match the multiply path bit for bit.
struct ShiftWeightOp {
    const ShiftWeight* w;
    double term(std::size_t i, double x) const {
        const ShiftWeight s = w[i];
        if (s.sign == 0) return std::copysign(0.0, x);
        const double shifted = std::ldexp(x, s.exponent);
        return s.sign < 0 ? -shifted : shifted;
    }
};

/// Lossless conversion of a packed model into shift form, straight from the
/// codewords (sign and exponent are the codeword fields).
inline ShiftModel to_shift_form(const QuantizedModel& model) {
    ShiftModel sm;
    sm.input_shape = model.input_shape;
    sm.layers = model.layers;
    sm.slayers.reserve(model.qlayers.size());
    for (const QuantizedLayer& ql : model.qlayers) {
        if (ql.n1 > 900 || ql.n1 - static_cast<int>(ql.grid().exponent_count()) < -900) {
            throw std::invalid_argument("to_shift_form: exponent outside the exact scaling range");
        }
        ShiftLayer sl;
        sl.weight_shape = ql.weight_shape;
        sl.bias = ql.bias;
        sl.weights.reserve(ql.count());
        BitReader reader(ql.stream);
        const int index_bits = ql.bits - 2;
        for (std::size_t i = 0; i < ql.count(); ++i) {
            ShiftWeight w;
            if (reader.get()) {
                w.sign = 0;
            } else {
                w.sign = reader.get() ? -1 : 1;
                w.exponent = static_cast<std::int16_t>(
                    ql.n1 - static_cast<int>(reader.get_bits(index_bits)));
            }
            sl.weights.push_back(w);
        }
        sm.slayers.push_back(std::move(sl));
    }
    return sm;
}

/// Exact inverse of to_shift_form for one layer.
inline Tensor reconstruct_weights(const ShiftLayer& layer) {
    Tensor t(layer.weight_shape);
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        const ShiftWeight w = layer.weights[i];
        t[i] = w.sign == 0 ? 0.0 : (w.sign < 0 ? -std::ldexp(1.0, w.exponent)
                                               : std::ldexp(1.0, w.exponent));
    }
    return t;
}

/// Forward pass without a single weight multiplication. Bit-identical to
/// forward() on the decoded network.
inline Tensor shift_forward(const ShiftModel& model, const Tensor& batch) {
    std::vector<Tensor> biases;
    biases.reserve(model.slayers.size());
    for (const ShiftLayer& sl : model.slayers) biases.push_back(sl.bias);
    return detail::run_forward(
        model.input_shape, model.layers, biases,
        [&](std::size_t slot) { return ShiftWeightOp{model.slayers[slot].weights.data()}; },
        batch);
}

inline EvalMetrics evaluate_shift(const ShiftModel& model, const Dataset& data, std::size_t k = 5,
                                  std::size_t batch_size = 256) {
    return detail::evaluate_with([&](const Tensor& b) { return shift_forward(model, b); }, data,
                                 k, batch_size);
}

} // namespace inq
