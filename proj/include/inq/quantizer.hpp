#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "inq/tensor.hpp"

namespace inq {

/// Per-layer set of admissible weight values {0} U {+-2^k : n2 <= k <= n1}.
/// The expected bit-width b fixes the arity: one 1-bit code for zero plus
/// 2^(b-1) signed power levels, 2^(b-1)+1 values in total.
struct QuantGrid {
    int bits = 0; // b >= 2
    int n1 = 0;   // largest exponent
    int n2 = 0;   // smallest exponent, n2 = n1 + 1 - 2^(b-2)
    std::vector<double> levels; // sorted ascending, zero always present

    std::size_t exponent_count() const { return static_cast<std::size_t>(n1 - n2 + 1); }
};

/// Largest absolute entry; the scale s the grid is derived from.
inline double max_abs(const Tensor& weights) {
    if (weights.empty()) throw std::invalid_argument("max_abs: empty tensor");
    double s = 0.0;
    for (double w : weights.values()) s = std::max(s, std::abs(w));
    return s;
}

/// floor(log2(4s/3)), evaluated exactly: n1 is the unique integer with
/// 3*2^(n1-2) <= s < 3*2^(n1-1). The 4/3 factor makes the top level 2^n1
/// cover s under the rounding rule's 3/2 upper bound.
inline int compute_n1(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("compute_n1: scale must be positive and finite");
    }
    int n1 = std::ilogb(s); // 2^n1 <= s < 2^(n1+1)
    if (s >= std::ldexp(3.0, n1 - 1)) ++n1;
    return n1;
}

namespace detail {

inline void check_bits(int bits) {
    if (bits < 2 || bits > 10) {
        throw std::invalid_argument("quantizer: bit-width must be in [2, 10], got " +
                                    std::to_string(bits));
    }
}

} // namespace detail

/// Grid from stored parameters (b, n1); the decode-side constructor.
inline QuantGrid make_grid(int bits, int n1) {
    detail::check_bits(bits);
    const int exponents = 1 << (bits - 2);
    const int n2 = n1 + 1 - exponents;
    if (n1 > 960 || n2 < -960) {
        throw std::invalid_argument("make_grid: exponent range outside double precision");
    }
    QuantGrid g;
    g.bits = bits;
    g.n1 = n1;
    g.n2 = n2;
    g.levels.reserve(2 * static_cast<std::size_t>(exponents) + 1);
    for (int k = n1; k >= n2; --k) g.levels.push_back(-std::ldexp(1.0, k));
    g.levels.push_back(0.0);
    for (int k = n2; k <= n1; ++k) g.levels.push_back(std::ldexp(1.0, k));
    return g;
}

/// Grid for a weight tensor: n1 from the largest magnitude, n2 from the
/// bit budget. Rejects all-zero tensors, for which no scale exists.
inline QuantGrid build_grid(const Tensor& weights, int bits) {
    detail::check_bits(bits);
    const double s = max_abs(weights);
    if (s == 0.0) {
        throw std::invalid_argument("build_grid: all-zero weights, grid scale undefined");
    }
    return make_grid(bits, compute_n1(s));
}

/// Ladder-of-powers rounding. With the sorted magnitude rungs
/// 0 < 2^n2 < ... < 2^n1, |w| maps to the rung whose interval
/// [(lower+rung)/2, 3*rung/2) contains it; below 2^(n2-1) the weight is
/// pruned to zero. Magnitudes at or past 3*2^(n1-1) saturate to 2^n1 so
/// that re-trained weights that outgrew the original scale keep their
/// sign and magnitude order instead of collapsing to zero.
inline double quantize_value(double w, const QuantGrid& grid) {
    if (std::isnan(w)) throw std::invalid_argument("quantize_value: NaN weight");
    if (w == 0.0) return 0.0;
    const double a = std::abs(w);
    const double sign = w < 0.0 ? -1.0 : 1.0;
    if (a < std::ldexp(1.0, grid.n2 - 1)) return 0.0;
    if (a >= std::ldexp(3.0, grid.n1 - 1)) return sign * std::ldexp(1.0, grid.n1);
    int k = std::ilogb(a);
    if (a >= std::ldexp(3.0, k - 1)) ++k; // upper half of the octave rounds up
    if (k < grid.n2) k = grid.n2;         // [2^(n2-1), 2^n2) belongs to the lowest rung
    return sign * std::ldexp(1.0, k);
}

/// Quantize only the selected flat indices; everything else stays
/// bit-identical.
inline Tensor quantize_subset(const Tensor& weights, const QuantGrid& grid,
                              std::span<const std::size_t> selector) {
    Tensor out = weights;
    for (std::size_t idx : selector) {
        if (idx >= out.size()) {
            throw std::out_of_range("quantize_subset: index " + std::to_string(idx) +
                                    " out of range for " + std::to_string(out.size()) +
                                    " weights");
        }
        out[idx] = quantize_value(out[idx], grid);
    }
    return out;
}

inline Tensor quantize_all(const Tensor& weights, const QuantGrid& grid) {
    Tensor out = weights;
    for (double& w : out.values()) w = quantize_value(w, grid);
    return out;
}

/// Exact grid membership (zero included).
inline bool in_grid(double w, const QuantGrid& grid) {
    if (w == 0.0) return true;
    const double a = std::abs(w);
    const int k = std::ilogb(a);
    return k >= grid.n2 && k <= grid.n1 && a == std::ldexp(1.0, k);
}

} // namespace inq
