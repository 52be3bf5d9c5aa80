#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "inq/quantizer.hpp"
#include "inq/tensor.hpp"

namespace inq {

/// Variable-length power-of-two weight code, packed MSB-first:
///   zero       -> 1                          (1 bit)
///   +-2^k      -> 0 | sign | exponent index  (b bits total)
/// with sign bit 0 for positive and exponent index n1 - k in b-2 bits,
/// so index 0 is the largest magnitude. Streams are padded with zero
/// bits to a byte boundary.
struct Bitstream {
    std::vector<std::uint8_t> bytes;
    std::uint64_t bit_count = 0;
};

class TruncatedStream : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BitWriter {
public:
    void put(bool bit) {
        if (bit_count_ % 8 == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bit_count_ % 8));
        ++bit_count_;
    }

    /// width low bits of value, most significant first. width may be 0.
    void put_bits(std::uint64_t value, int width) {
        for (int i = width - 1; i >= 0; --i) put((value >> i) & 1u);
    }

    Bitstream finish() {
        Bitstream s;
        s.bytes = std::move(bytes_);
        s.bit_count = bit_count_;
        bytes_.clear();
        bit_count_ = 0;
        return s;
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t bit_count_ = 0;
};

class BitReader {
public:
    explicit BitReader(const Bitstream& s) : stream_(s) {}

    bool get() {
        if (pos_ >= stream_.bit_count) throw TruncatedStream("bitstream exhausted");
        const bool bit = (stream_.bytes[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return bit;
    }

    std::uint64_t get_bits(int width) {
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v = (v << 1) | (get() ? 1u : 0u);
        return v;
    }

    std::uint64_t position() const { return pos_; }

private:
    const Bitstream& stream_;
    std::uint64_t pos_ = 0;
};

/// Encode a grid-valued tensor in flat row-major order. Entries outside
/// the grid are rejected with their index.
inline Bitstream encode_layer(const Tensor& weights, const QuantGrid& grid) {
    BitWriter writer;
    const int index_bits = grid.bits - 2;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) {
            writer.put(true);
            continue;
        }
        const double a = std::abs(w);
        const int k = std::ilogb(a);
        if (std::isnan(w) || a != std::ldexp(1.0, k) || k < grid.n2 || k > grid.n1) {
            throw std::invalid_argument("encode_layer: entry " + std::to_string(i) +
                                        " is not a grid level");
        }
        writer.put(false);
        writer.put(w < 0.0);
        writer.put_bits(static_cast<std::uint64_t>(grid.n1 - k), index_bits);
    }
    return writer.finish();
}

/// Exact inverse of encode_layer; returns a flat tensor of `count` weights.
inline Tensor decode_layer(const Bitstream& stream, const QuantGrid& grid, std::size_t count) {
    Tensor out({count});
    BitReader reader(stream);
    const int index_bits = grid.bits - 2;
    const std::uint64_t max_index = grid.exponent_count();
    for (std::size_t i = 0; i < count; ++i) {
        if (reader.get()) {
            out[i] = 0.0;
            continue;
        }
        const bool negative = reader.get();
        const std::uint64_t index = reader.get_bits(index_bits);
        if (index >= max_index) { // unreachable for well-formed parameters
            throw std::runtime_error("decode_layer: exponent index out of range at entry " +
                                     std::to_string(i));
        }
        const double mag = std::ldexp(1.0, grid.n1 - static_cast<int>(index));
        out[i] = negative ? -mag : mag;
    }
    return out;
}

/// Exact encoded size: one bit per zero, b bits per nonzero level.
inline std::uint64_t encoded_bit_count(std::size_t count, std::size_t zeros, int bits) {
    return static_cast<std::uint64_t>(zeros) +
           static_cast<std::uint64_t>(count - zeros) * static_cast<std::uint64_t>(bits);
}

} // namespace inq
