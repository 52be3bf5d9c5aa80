#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "inq/binio.hpp"
#include "inq/dataset.hpp"
#include "inq/tensor.hpp"

namespace inq {

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("IDX file truncated: " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

} // namespace detail

/// IDX image/label pair (the MNIST container: big-endian, magic 0x00000803
/// for unsigned-byte images, 0x00000801 for labels). Pixels are scaled to
/// [0, 1]; sample shape is (1, rows, cols).
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgf(images_path, std::ios::binary);
    if (!imgf) throw IoError("cannot open IDX image file: " + images_path);
    std::ifstream lblf(labels_path, std::ios::binary);
    if (!lblf) throw IoError("cannot open IDX label file: " + labels_path);

    const std::uint32_t img_magic = detail::read_u32_be(imgf, images_path);
    if (img_magic != 0x00000803u) {
        throw BadMagic("IDX image magic mismatch (expected 0x00000803): " + images_path);
    }
    const std::uint32_t lbl_magic = detail::read_u32_be(lblf, labels_path);
    if (lbl_magic != 0x00000801u) {
        throw BadMagic("IDX label magic mismatch (expected 0x00000801): " + labels_path);
    }

    const std::uint32_t count = detail::read_u32_be(imgf, images_path);
    const std::uint32_t rows = detail::read_u32_be(imgf, images_path);
    const std::uint32_t cols = detail::read_u32_be(imgf, images_path);
    const std::uint32_t label_count = detail::read_u32_be(lblf, labels_path);
    if (count != label_count) {
        throw IoError("IDX image/label counts differ: " + std::to_string(count) + " vs " +
                      std::to_string(label_count));
    }
    if (count > 0 && (rows == 0 || cols == 0)) {
        throw IoError("IDX image dimensions must be positive: " + images_path);
    }

    Dataset ds;
    ds.inputs = Tensor({count, 1, rows, cols});
    ds.labels.resize(count);

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<std::uint8_t> row(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        imgf.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(pixels));
        if (!imgf) throw IoError("IDX image file truncated: " + images_path);
        double* dst = ds.inputs.data() + static_cast<std::size_t>(i) * pixels;
        for (std::size_t p = 0; p < pixels; ++p) dst[p] = row[p] / 255.0;
    }
    std::vector<std::uint8_t> labels(count);
    if (count > 0) {
        lblf.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
        if (!lblf) throw IoError("IDX label file truncated: " + labels_path);
    }
    std::int32_t max_label = -1;
    for (std::uint32_t i = 0; i < count; ++i) {
        ds.labels[i] = labels[i];
        max_label = std::max<std::int32_t>(max_label, labels[i]);
    }
    ds.num_classes = static_cast<std::size_t>(max_label + 1);
    return ds;
}

/// Writers for the same format, used by gen-data and the tests.
inline void save_idx_images(const std::string& path, const Tensor& images) {
    if (images.rank() != 4 || images.dim(1) != 1) {
        throw std::invalid_argument("save_idx_images: expected (n, 1, rows, cols) tensor");
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create IDX file: " + path);
    auto be = [&f](std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                             static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
        f.write(reinterpret_cast<char*>(b), 4);
    };
    be(0x00000803u);
    be(static_cast<std::uint32_t>(images.dim(0)));
    be(static_cast<std::uint32_t>(images.dim(2)));
    be(static_cast<std::uint32_t>(images.dim(3)));
    for (double v : images.values()) {
        const double clamped = std::min(1.0, std::max(0.0, v));
        f.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(clamped * 255.0))));
    }
    if (!f) throw IoError("write failed: " + path);
}

inline void save_idx_labels(const std::string& path, const std::vector<std::int32_t>& labels) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create IDX file: " + path);
    auto be = [&f](std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                             static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
        f.write(reinterpret_cast<char*>(b), 4);
    };
    be(0x00000801u);
    be(static_cast<std::uint32_t>(labels.size()));
    for (std::int32_t l : labels) f.put(static_cast<char>(static_cast<std::uint8_t>(l)));
    if (!f) throw IoError("write failed: " + path);
}

} // namespace inq
