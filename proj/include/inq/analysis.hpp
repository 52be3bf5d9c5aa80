#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "inq/quantized_model.hpp"

// Analysis over packed models: per-layer weight-value distributions, the
// minimal fixed-length code width actually needed, and codec-formula
// compression ratios against the 32-bit float baseline.

namespace inq {

struct LayerDistribution {
    std::string name;
    std::size_t total = 0;
    std::map<double, std::size_t> counts; // grid level -> occurrences

    double percent(double level) const {
        auto it = counts.find(level);
        if (it == counts.end() || total == 0) return 0.0;
        return 100.0 * static_cast<double>(it->second) / static_cast<double>(total);
    }
};

struct DistributionTable {
    std::vector<LayerDistribution> layers;
    std::vector<double> levels; // union of used levels, ascending
};

/// Number of distinct values the layer actually uses (zero included) and
/// the minimal fixed-length code width for them.
inline int effective_bitwidth(std::size_t distinct_values) {
    int bits = 0;
    while ((std::size_t{1} << bits) < distinct_values) ++bits;
    return bits;
}

inline int effective_bitwidth(const LayerDistribution& layer) {
    return effective_bitwidth(layer.counts.size());
}

namespace detail {

inline std::string learnable_layer_name(const std::vector<LayerSpec>& layers, std::size_t slot) {
    std::size_t seen = 0;
    std::size_t conv = 0, dense = 0;
    for (const LayerSpec& spec : layers) {
        if (!is_learnable(spec)) continue;
        const bool is_conv = std::holds_alternative<Conv2DSpec>(spec);
        if (is_conv) ++conv; else ++dense;
        if (seen == slot) return (is_conv ? "Conv" : "FC") + std::to_string(is_conv ? conv : dense);
        ++seen;
    }
    return "L" + std::to_string(slot + 1);
}

inline std::string format_level(double level) {
    if (level == 0.0) return "0";
    const int k = std::ilogb(std::abs(level));
    std::string s = level < 0 ? "-2^" : "2^";
    return s + std::to_string(k);
}

inline std::string format_percent(double pct) {
    char buf[32];
    if (pct != 0.0 && pct < 0.005) {
        std::snprintf(buf, sizeof(buf), "%.0e%%", pct);
    } else {
        std::snprintf(buf, sizeof(buf), "%.2f%%", pct);
    }
    return buf;
}

} // namespace detail

/// Exact per-layer counts of each grid level, normalized to percentages.
inline DistributionTable distribution(const QuantizedModel& model) {
    DistributionTable table;
    std::map<double, bool> seen;
    for (std::size_t slot = 0; slot < model.qlayers.size(); ++slot) {
        const QuantizedLayer& ql = model.qlayers[slot];
        LayerDistribution dist;
        dist.name = detail::learnable_layer_name(model.layers, slot);
        dist.total = ql.count();
        Tensor w = decode_layer(ql.stream, ql.grid(), ql.count());
        for (double v : w.values()) {
            ++dist.counts[v];
            seen[v] = true;
        }
        table.layers.push_back(std::move(dist));
    }
    for (const auto& [level, _] : seen) table.levels.push_back(level);
    return table;
}

/// Plain-text table: levels as rows, layers as columns, a Total row and the
/// per-layer effective bit-width at the bottom.
inline std::string format_distribution(const DistributionTable& table) {
    const int name_w = 8;
    const int col_w = 10;
    std::string out;
    auto cell = [&](const std::string& s, int w) {
        out += s;
        for (int i = static_cast<int>(s.size()); i < w; ++i) out += ' ';
    };
    cell("Weight", name_w);
    for (const auto& l : table.layers) cell(l.name, col_w);
    out += '\n';
    for (double level : table.levels) {
        cell(detail::format_level(level), name_w);
        for (const auto& l : table.layers) {
            cell(l.counts.count(level) ? detail::format_percent(l.percent(level)) : "-", col_w);
        }
        out += '\n';
    }
    cell("Total", name_w);
    for (const auto& l : table.layers) {
        cell(detail::format_percent(l.total ? 100.0 : 0.0), col_w);
    }
    out += '\n';
    cell("Bits", name_w);
    for (const auto& l : table.layers) cell(std::to_string(effective_bitwidth(l)), col_w);
    out += '\n';
    return out;
}

inline std::string distribution_csv(const DistributionTable& table) {
    std::string out = "level";
    for (const auto& l : table.layers) out += "," + l.name;
    out += '\n';
    char buf[64];
    for (double level : table.levels) {
        std::snprintf(buf, sizeof(buf), "%.17g", level);
        out += buf;
        for (const auto& l : table.layers) {
            std::snprintf(buf, sizeof(buf), ",%.6f", l.percent(level));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

struct CompressionEntry {
    std::string name;
    std::size_t count = 0;
    std::size_t zeros = 0;
    std::uint64_t encoded_bits = 0; // before padding
    double ratio_variable = 0.0;    // 32 * count / encoded_bits
    double ratio_fixed = 0.0;       // 32 / b
};

struct CompressionReport {
    std::vector<CompressionEntry> layers;
    CompressionEntry total;
};

/// Ratios from the codec size formula (z zeros at 1 bit, the rest at b bits)
/// against 32-bit float storage. Container headers are deliberately not
/// counted.
inline CompressionReport compression_report(const QuantizedModel& model) {
    CompressionReport report;
    report.total.name = "total";
    std::uint64_t total_fixed_bits = 0;
    for (std::size_t slot = 0; slot < model.qlayers.size(); ++slot) {
        const QuantizedLayer& ql = model.qlayers[slot];
        CompressionEntry e;
        e.name = detail::learnable_layer_name(model.layers, slot);
        e.count = ql.count();
        Tensor w = decode_layer(ql.stream, ql.grid(), ql.count());
        for (double v : w.values()) e.zeros += (v == 0.0);
        e.encoded_bits = encoded_bit_count(e.count, e.zeros, ql.bits);
        e.ratio_variable = e.encoded_bits
                               ? 32.0 * static_cast<double>(e.count) /
                                     static_cast<double>(e.encoded_bits)
                               : 0.0;
        e.ratio_fixed = 32.0 / static_cast<double>(ql.bits);
        report.total.count += e.count;
        report.total.zeros += e.zeros;
        report.total.encoded_bits += e.encoded_bits;
        total_fixed_bits += static_cast<std::uint64_t>(e.count) * ql.bits;
        report.layers.push_back(std::move(e));
    }
    if (report.total.encoded_bits) {
        report.total.ratio_variable = 32.0 * static_cast<double>(report.total.count) /
                                      static_cast<double>(report.total.encoded_bits);
    }
    if (total_fixed_bits) {
        report.total.ratio_fixed = 32.0 * static_cast<double>(report.total.count) /
                                   static_cast<double>(total_fixed_bits);
    }
    return report;
}

inline std::string format_compression(const CompressionReport& report) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-8s %10s %10s %14s %12s %12s\n", "Layer", "weights",
                  "zeros", "encoded bits", "ratio(var)", "ratio(fix)");
    out += buf;
    auto row = [&](const CompressionEntry& e) {
        std::snprintf(buf, sizeof(buf), "%-8s %10zu %10zu %14llu %11.2fx %11.2fx\n",
                      e.name.c_str(), e.count, e.zeros,
                      static_cast<unsigned long long>(e.encoded_bits), e.ratio_variable,
                      e.ratio_fixed);
        out += buf;
    };
    for (const auto& e : report.layers) row(e);
    row(report.total);
    return out;
}

inline std::string compression_csv(const CompressionReport& report) {
    std::string out = "layer,weights,zeros,encoded_bits,ratio_variable,ratio_fixed\n";
    char buf[160];
    auto row = [&](const CompressionEntry& e) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%llu,%.6f,%.6f\n", e.name.c_str(), e.count,
                      e.zeros, static_cast<unsigned long long>(e.encoded_bits), e.ratio_variable,
                      e.ratio_fixed);
        out += buf;
    };
    for (const auto& e : report.layers) row(e);
    row(report.total);
    return out;
}

} // namespace inq
