#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "inq/binio.hpp"
#include "inq/dataset.hpp"
#include "inq/driver.hpp"
#include "inq/network.hpp"
#include "inq/quantized_model.hpp"

// Bit-exact containers. A file is a 4-byte magic, a version word and a model
// type byte, followed by tagged sections; every section payload carries its
// own trailing CRC32. All scalars little-endian, weight order row-major.
//   "INQM"  model container (full-precision or packed quantized)
//   "INQD"  dataset container for the synthetic generators
//   "INQC"  resumable quantization-run checkpoint

namespace inq {

namespace detail {

constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

constexpr std::uint32_t kSectionProv = 0x564F5250u; // "PROV"
constexpr std::uint32_t kSectionNet = 0x5354454Eu;  // "NETS"
constexpr std::uint32_t kSectionParams = 0x534D5250u; // "PRMS"
constexpr std::uint32_t kSectionData = 0x41544144u; // "DATA"
constexpr std::uint32_t kSectionState = 0x54415453u; // "STAT"
constexpr std::uint32_t kSectionOpts = 0x5354504Fu; // "OPTS"

inline void write_section(ByteWriter& out, std::uint32_t tag, ByteWriter payload) {
    std::vector<std::uint8_t> bytes = payload.take();
    out.u32(tag);
    out.u64(bytes.size());
    out.bytes(bytes.data(), bytes.size());
    out.u32(crc32(bytes.data(), bytes.size()));
}

inline std::vector<std::uint8_t> read_section(ByteReader& in, std::uint32_t tag) {
    const std::uint32_t got = in.u32();
    if (got != tag) throw IoError("container section out of order");
    const std::uint64_t len = in.u64();
    std::vector<std::uint8_t> bytes(len);
    in.bytes(bytes.data(), len);
    const std::uint32_t stored = in.u32();
    if (stored != crc32(bytes.data(), bytes.size())) {
        throw ChecksumFailure("container section checksum failure");
    }
    return bytes;
}

inline void write_shape(ByteWriter& out, const std::vector<std::size_t>& shape) {
    out.u32(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) out.u64(d);
}

inline std::vector<std::size_t> read_shape(ByteReader& in) {
    std::vector<std::size_t> shape(in.u32());
    for (std::size_t& d : shape) d = static_cast<std::size_t>(in.u64());
    return shape;
}

inline void write_tensor(ByteWriter& out, const Tensor& t) {
    write_shape(out, t.shape());
    for (double v : t.values()) out.f64(v);
}

inline Tensor read_tensor(ByteReader& in) {
    std::vector<std::size_t> shape = read_shape(in);
    std::vector<double> data(shape_product(shape));
    for (double& v : data) v = in.f64();
    return Tensor(std::move(shape), std::move(data));
}

inline void write_layer_spec(ByteWriter& out, const LayerSpec& spec) {
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        out.u8(0);
        out.u64(d->in_features);
        out.u64(d->out_features);
    } else if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
        out.u8(1);
        out.u64(c->in_channels);
        out.u64(c->out_channels);
        out.u64(c->kernel);
        out.u64(c->stride);
        out.u64(c->padding);
    } else if (std::holds_alternative<ReluSpec>(spec)) {
        out.u8(2);
    } else if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
        out.u8(3);
        out.u64(p->pool);
    } else {
        out.u8(4);
    }
}

inline LayerSpec read_layer_spec(ByteReader& in) {
    switch (in.u8()) {
        case 0: {
            DenseSpec d;
            d.in_features = static_cast<std::size_t>(in.u64());
            d.out_features = static_cast<std::size_t>(in.u64());
            return d;
        }
        case 1: {
            Conv2DSpec c;
            c.in_channels = static_cast<std::size_t>(in.u64());
            c.out_channels = static_cast<std::size_t>(in.u64());
            c.kernel = static_cast<std::size_t>(in.u64());
            c.stride = static_cast<std::size_t>(in.u64());
            c.padding = static_cast<std::size_t>(in.u64());
            return c;
        }
        case 2:
            return ReluSpec{};
        case 3: {
            MaxPool2DSpec p;
            p.pool = static_cast<std::size_t>(in.u64());
            return p;
        }
        case 4:
            return FlattenSpec{};
        default:
            throw IoError("container: unknown layer kind");
    }
}

inline ByteWriter structure_payload(const std::vector<std::size_t>& input_shape,
                                    const std::vector<LayerSpec>& layers) {
    ByteWriter p;
    write_shape(p, input_shape);
    p.u32(static_cast<std::uint32_t>(layers.size()));
    for (const LayerSpec& spec : layers) write_layer_spec(p, spec);
    return p;
}

inline void read_structure(ByteReader& p, std::vector<std::size_t>& input_shape,
                           std::vector<LayerSpec>& layers) {
    input_shape = read_shape(p);
    layers.resize(p.u32());
    for (LayerSpec& spec : layers) spec = read_layer_spec(p);
}

inline void check_header(ByteReader& in, const char magic[4], std::uint32_t version,
                         const std::string& what) {
    std::uint8_t m[4];
    in.bytes(m, 4);
    if (std::memcmp(m, magic, 4) != 0) throw BadMagic("bad magic, not a " + what + " file");
    const std::uint32_t v = in.u32();
    if (v != version) {
        throw VersionMismatch(what + " version " + std::to_string(v) + " unsupported (expected " +
                              std::to_string(version) + ")");
    }
}

} // namespace detail

enum class ModelKind : std::uint8_t { Float = 0, Quantized = 1 };

struct LoadedModel {
    std::variant<Network, QuantizedModel> model;
    std::string provenance;

    bool is_quantized() const { return std::holds_alternative<QuantizedModel>(model); }
    const Network& network() const { return std::get<Network>(model); }
    const QuantizedModel& quantized() const { return std::get<QuantizedModel>(model); }
};

inline void save_model(const std::string& path, const Network& net,
                       const std::string& provenance = {}) {
    ByteWriter out;
    out.bytes(reinterpret_cast<const std::uint8_t*>("INQM"), 4);
    out.u32(detail::kModelVersion);
    out.u8(static_cast<std::uint8_t>(ModelKind::Float));

    ByteWriter prov;
    prov.str(provenance);
    detail::write_section(out, detail::kSectionProv, std::move(prov));
    detail::write_section(out, detail::kSectionNet,
                          detail::structure_payload(net.input_shape, net.layers));

    ByteWriter params;
    params.u32(static_cast<std::uint32_t>(net.num_learnable()));
    for (std::size_t slot = 0; slot < net.num_learnable(); ++slot) {
        detail::write_tensor(params, net.weights[slot]);
        detail::write_tensor(params, net.biases[slot]);
    }
    detail::write_section(out, detail::kSectionParams, std::move(params));
    write_file_bytes(path, out.data());
}

inline void save_model(const std::string& path, const QuantizedModel& model) {
    ByteWriter out;
    out.bytes(reinterpret_cast<const std::uint8_t*>("INQM"), 4);
    out.u32(detail::kModelVersion);
    out.u8(static_cast<std::uint8_t>(ModelKind::Quantized));

    ByteWriter prov;
    prov.str(model.provenance);
    detail::write_section(out, detail::kSectionProv, std::move(prov));
    detail::write_section(out, detail::kSectionNet,
                          detail::structure_payload(model.input_shape, model.layers));

    ByteWriter params;
    params.u32(static_cast<std::uint32_t>(model.qlayers.size()));
    for (const QuantizedLayer& ql : model.qlayers) {
        params.u8(static_cast<std::uint8_t>(ql.bits));
        params.i32(ql.n1);
        detail::write_shape(params, ql.weight_shape);
        params.u64(ql.stream.bit_count);
        params.u64(ql.stream.bytes.size());
        params.bytes(ql.stream.bytes.data(), ql.stream.bytes.size());
        detail::write_tensor(params, ql.bias);
    }
    detail::write_section(out, detail::kSectionParams, std::move(params));
    write_file_bytes(path, out.data());
}

inline LoadedModel load_model(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    ByteReader in(bytes);
    detail::check_header(in, "INQM", detail::kModelVersion, "model");
    const std::uint8_t kind = in.u8();

    const auto prov_bytes = detail::read_section(in, detail::kSectionProv);
    ByteReader prov(prov_bytes);
    LoadedModel loaded;
    loaded.provenance = prov.str();

    const auto net_bytes = detail::read_section(in, detail::kSectionNet);
    ByteReader nets(net_bytes);
    std::vector<std::size_t> input_shape;
    std::vector<LayerSpec> layers;
    detail::read_structure(nets, input_shape, layers);

    const auto param_bytes = detail::read_section(in, detail::kSectionParams);
    ByteReader params(param_bytes);

    if (kind == static_cast<std::uint8_t>(ModelKind::Float)) {
        Network net = make_network(input_shape, layers);
        const std::uint32_t slots = params.u32();
        if (slots != net.num_learnable()) throw IoError("container: learnable layer count mismatch");
        for (std::size_t slot = 0; slot < slots; ++slot) {
            Tensor w = detail::read_tensor(params);
            Tensor b = detail::read_tensor(params);
            if (!w.same_shape(net.weights[slot]) || !b.same_shape(net.biases[slot])) {
                throw IoError("container: parameter shape mismatch at slot " + std::to_string(slot));
            }
            net.weights[slot] = std::move(w);
            net.biases[slot] = std::move(b);
        }
        loaded.model = std::move(net);
    } else if (kind == static_cast<std::uint8_t>(ModelKind::Quantized)) {
        QuantizedModel model;
        model.input_shape = input_shape;
        model.layers = layers;
        model.provenance = loaded.provenance;
        const std::uint32_t slots = params.u32();
        for (std::uint32_t slot = 0; slot < slots; ++slot) {
            QuantizedLayer ql;
            ql.bits = params.u8();
            ql.n1 = params.i32();
            ql.weight_shape = detail::read_shape(params);
            ql.stream.bit_count = params.u64();
            ql.stream.bytes.resize(params.u64());
            params.bytes(ql.stream.bytes.data(), ql.stream.bytes.size());
            ql.bias = detail::read_tensor(params);
            model.qlayers.push_back(std::move(ql));
        }
        loaded.model = std::move(model);
    } else {
        throw IoError("container: unknown model type");
    }
    return loaded;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    ds.validate();
    ByteWriter out;
    out.bytes(reinterpret_cast<const std::uint8_t*>("INQD"), 4);
    out.u32(detail::kDatasetVersion);
    out.u8(0);
    ByteWriter payload;
    payload.u32(static_cast<std::uint32_t>(ds.num_classes));
    detail::write_tensor(payload, ds.inputs);
    payload.u64(ds.labels.size());
    for (std::int32_t l : ds.labels) payload.i32(l);
    detail::write_section(out, detail::kSectionData, std::move(payload));
    write_file_bytes(path, out.data());
}

inline Dataset load_dataset(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    ByteReader in(bytes);
    detail::check_header(in, "INQD", detail::kDatasetVersion, "dataset");
    in.u8();
    const auto payload_bytes = detail::read_section(in, detail::kSectionData);
    ByteReader payload(payload_bytes);
    Dataset ds;
    ds.num_classes = payload.u32();
    ds.inputs = detail::read_tensor(payload);
    ds.labels.resize(payload.u64());
    for (std::int32_t& l : ds.labels) l = payload.i32();
    ds.validate();
    return ds;
}

inline void save_checkpoint(const std::string& path, const InqCheckpoint& ckpt) {
    ByteWriter out;
    out.bytes(reinterpret_cast<const std::uint8_t*>("INQC"), 4);
    out.u32(detail::kCheckpointVersion);
    out.u8(0);

    ByteWriter opts;
    opts.u8(static_cast<std::uint8_t>(ckpt.options.bits));
    opts.u8(ckpt.options.strategy == PartitionStrategy::Pruning ? 0 : 1);
    opts.u64(ckpt.options.epochs_per_step);
    opts.u64(ckpt.options.seed);
    opts.u32(static_cast<std::uint32_t>(ckpt.options.schedule.sigmas.size()));
    for (double s : ckpt.options.schedule.sigmas) opts.f64(s);
    opts.f64(ckpt.sgd_config.learning_rate);
    opts.f64(ckpt.sgd_config.momentum);
    opts.f64(ckpt.sgd_config.weight_decay);
    opts.u64(ckpt.sgd_config.batch_size);
    opts.u32(static_cast<std::uint32_t>(ckpt.sgd_config.lr_schedule.size()));
    for (const auto& [e, m] : ckpt.sgd_config.lr_schedule) {
        opts.u64(e);
        opts.f64(m);
    }
    detail::write_section(out, detail::kSectionOpts, std::move(opts));

    detail::write_section(
        out, detail::kSectionNet,
        detail::structure_payload(ckpt.state.net.input_shape, ckpt.state.net.layers));

    ByteWriter state;
    state.u64(ckpt.state.steps_done);
    state.u32(static_cast<std::uint32_t>(ckpt.state.net.num_learnable()));
    for (std::size_t slot = 0; slot < ckpt.state.net.num_learnable(); ++slot) {
        detail::write_tensor(state, ckpt.state.net.weights[slot]);
        detail::write_tensor(state, ckpt.state.net.biases[slot]);
        const Mask& mask = ckpt.state.masks[slot];
        state.u64(mask.bits.size());
        state.bytes(mask.bits.data(), mask.bits.size());
        state.u8(static_cast<std::uint8_t>(ckpt.state.grids[slot].bits));
        state.i32(ckpt.state.grids[slot].n1);
        detail::write_tensor(state, ckpt.state.sgd.vel_w[slot]);
        detail::write_tensor(state, ckpt.state.sgd.vel_b[slot]);
    }
    detail::write_section(out, detail::kSectionState, std::move(state));
    write_file_bytes(path, out.data());
}

inline InqCheckpoint load_checkpoint(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    ByteReader in(bytes);
    detail::check_header(in, "INQC", detail::kCheckpointVersion, "checkpoint");
    in.u8();

    InqCheckpoint ckpt;
    const auto opts_bytes = detail::read_section(in, detail::kSectionOpts);
    ByteReader opts(opts_bytes);
    ckpt.options.bits = opts.u8();
    ckpt.options.strategy = opts.u8() == 0 ? PartitionStrategy::Pruning : PartitionStrategy::Random;
    ckpt.options.epochs_per_step = static_cast<std::size_t>(opts.u64());
    ckpt.options.seed = opts.u64();
    std::vector<double> sigmas(opts.u32());
    for (double& s : sigmas) s = opts.f64();
    ckpt.options.schedule = make_schedule(std::move(sigmas));
    ckpt.sgd_config.learning_rate = opts.f64();
    ckpt.sgd_config.momentum = opts.f64();
    ckpt.sgd_config.weight_decay = opts.f64();
    ckpt.sgd_config.batch_size = static_cast<std::size_t>(opts.u64());
    ckpt.sgd_config.lr_schedule.resize(opts.u32());
    for (auto& [e, m] : ckpt.sgd_config.lr_schedule) {
        e = static_cast<std::size_t>(opts.u64());
        m = opts.f64();
    }

    const auto net_bytes = detail::read_section(in, detail::kSectionNet);
    ByteReader nets(net_bytes);
    std::vector<std::size_t> input_shape;
    std::vector<LayerSpec> layers;
    detail::read_structure(nets, input_shape, layers);
    ckpt.state.net = make_network(input_shape, layers);

    const auto state_bytes = detail::read_section(in, detail::kSectionState);
    ByteReader state(state_bytes);
    ckpt.state.steps_done = static_cast<std::size_t>(state.u64());
    const std::uint32_t slots = state.u32();
    if (slots != ckpt.state.net.num_learnable()) {
        throw IoError("checkpoint: learnable layer count mismatch");
    }
    ckpt.state.masks.clear();
    ckpt.state.grids.clear();
    for (std::uint32_t slot = 0; slot < slots; ++slot) {
        ckpt.state.net.weights[slot] = detail::read_tensor(state);
        ckpt.state.net.biases[slot] = detail::read_tensor(state);
        Mask mask;
        mask.shape = ckpt.state.net.weights[slot].shape();
        mask.bits.resize(state.u64());
        state.bytes(mask.bits.data(), mask.bits.size());
        ckpt.state.masks.push_back(std::move(mask));
        const int bits = state.u8();
        const int n1 = state.i32();
        ckpt.state.grids.push_back(make_grid(bits, n1));
        ckpt.state.sgd.vel_w.push_back(detail::read_tensor(state));
        ckpt.state.sgd.vel_b.push_back(detail::read_tensor(state));
    }
    return ckpt;
}

} // namespace inq
