#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <string>

#include "inq/driver.hpp"
#include "inq/engine.hpp"
#include "inq/model_io.hpp"

using namespace inq;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

Network trained_toy_net(std::uint64_t seed) {
    Network net = make_network({2}, {DenseSpec{2, 8}, ReluSpec{}, DenseSpec{8, 3}});
    init_params(net, seed);
    Dataset data = gen_synthetic(SyntheticKind::Blobs, 3, 90, seed);
    SgdConfig cfg;
    cfg.learning_rate = 0.05;
    train(net, data, cfg, 5, seed);
    return net;
}

} // namespace

TEST_CASE("float model round-trips bit-exactly and saves byte-identically") {
    TempFile f1("io_float_a.inqm"), f2("io_float_b.inqm");
    Network net = trained_toy_net(3);
    save_model(f1.path, net, "k=v\n");

    LoadedModel loaded = load_model(f1.path);
    REQUIRE(!loaded.is_quantized());
    CHECK(loaded.provenance == "k=v\n");
    const Network& back = loaded.network();
    for (std::size_t i = 0; i < net.num_learnable(); ++i) {
        CHECK(bit_identical(back.weights[i], net.weights[i]));
        CHECK(bit_identical(back.biases[i], net.biases[i]));
    }

    // save -> load -> save produces byte-identical files
    save_model(f2.path, back, loaded.provenance);
    CHECK(read_file_bytes(f1.path) == read_file_bytes(f2.path));

    // loaded model evaluates identically
    Dataset data = gen_synthetic(SyntheticKind::Blobs, 3, 90, 3);
    CHECK(evaluate(net, data).top1 == evaluate(back, data).top1);
}

TEST_CASE("quantized model container round-trips bit-exactly") {
    TempFile f1("io_q_a.inqm"), f2("io_q_b.inqm");
    Network net = trained_toy_net(7);
    QuantizedModel model = quantize_one_shot(net, 5, "bits=5\n");
    save_model(f1.path, model);

    LoadedModel loaded = load_model(f1.path);
    REQUIRE(loaded.is_quantized());
    const QuantizedModel& back = loaded.quantized();
    CHECK(back.provenance == "bits=5\n");
    REQUIRE(back.qlayers.size() == model.qlayers.size());
    for (std::size_t i = 0; i < model.qlayers.size(); ++i) {
        CHECK(back.qlayers[i].bits == model.qlayers[i].bits);
        CHECK(back.qlayers[i].n1 == model.qlayers[i].n1);
        CHECK(back.qlayers[i].stream.bytes == model.qlayers[i].stream.bytes);
        CHECK(back.qlayers[i].stream.bit_count == model.qlayers[i].stream.bit_count);
        CHECK(bit_identical(back.qlayers[i].bias, model.qlayers[i].bias));
    }

    save_model(f2.path, back);
    CHECK(read_file_bytes(f1.path) == read_file_bytes(f2.path));

    Network decoded_a = decode_model(model);
    Network decoded_b = decode_model(back);
    for (std::size_t i = 0; i < decoded_a.num_learnable(); ++i) {
        CHECK(bit_identical(decoded_a.weights[i], decoded_b.weights[i]));
    }
}

TEST_CASE("bad magic, version mismatch and checksum failure are distinct") {
    TempFile f("io_err.inqm");
    Network net = trained_toy_net(9);
    save_model(f.path, net);

    auto bytes = read_file_bytes(f.path);

    auto corrupted = bytes;
    corrupted[0] = 'X';
    write_file_bytes(f.path, corrupted);
    CHECK_THROWS_AS(load_model(f.path), BadMagic);

    corrupted = bytes;
    corrupted[4] = 0xEE; // version word
    write_file_bytes(f.path, corrupted);
    CHECK_THROWS_AS(load_model(f.path), VersionMismatch);

    corrupted = bytes;
    corrupted[corrupted.size() - 16] ^= 0x01; // flip a payload byte under the CRC
    write_file_bytes(f.path, corrupted);
    CHECK_THROWS_AS(load_model(f.path), ChecksumFailure);

    corrupted = bytes;
    corrupted.resize(corrupted.size() / 2);
    write_file_bytes(f.path, corrupted);
    CHECK_THROWS_AS(load_model(f.path), IoError);
}

TEST_CASE("dataset container round-trip") {
    TempFile f("io_data.inqd");
    Dataset ds = gen_synthetic(SyntheticKind::Spirals, 4, 100, 5);
    save_dataset(f.path, ds);
    Dataset back = load_dataset(f.path);
    CHECK(back.num_classes == 4);
    CHECK(back.labels == ds.labels);
    CHECK(bit_identical(back.inputs, ds.inputs));
}

TEST_CASE("pack_network rejects grid-count mismatch") {
    Network net = trained_toy_net(11);
    std::vector<QuantGrid> grids{make_grid(5, -1)};
    CHECK_THROWS_AS(pack_network(net, grids), std::invalid_argument);
}

TEST_CASE("quantize_one_shot produces decodable grid-valued weights") {
    Network net = trained_toy_net(13);
    QuantizedModel model = quantize_one_shot(net, 3);
    Network decoded = decode_model(model);
    for (std::size_t slot = 0; slot < decoded.num_learnable(); ++slot) {
        QuantGrid g = model.qlayers[slot].grid();
        for (double v : decoded.weights[slot].values()) CHECK(in_grid(v, g));
        // biases pass through untouched
        CHECK(bit_identical(decoded.biases[slot], net.biases[slot]));
    }
}
