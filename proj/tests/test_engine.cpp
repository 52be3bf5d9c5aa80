#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <thread>

#include "inq/dataset.hpp"
#include "inq/engine.hpp"
#include "inq/forward.hpp"
#include "inq/network.hpp"

using namespace inq;

namespace {

Network random_net(const std::vector<std::size_t>& input_shape,
                   const std::vector<LayerSpec>& layers, std::uint64_t seed) {
    Network net = make_network(input_shape, layers);
    init_params(net, seed);
    return net;
}

bool nets_bit_identical(const Network& a, const Network& b) {
    for (std::size_t i = 0; i < a.num_learnable(); ++i) {
        if (!bit_identical(a.weights[i], b.weights[i])) return false;
        if (!bit_identical(a.biases[i], b.biases[i])) return false;
    }
    return true;
}

} // namespace

TEST_CASE("dense identity forward") {
    Network net = make_network({3}, {DenseSpec{3, 3}});
    for (std::size_t i = 0; i < 3; ++i) net.weights[0][i * 3 + i] = 1.0;
    Tensor batch({2, 3}, {0.5, -1.0, 2.0, 3.0, 0.0, -0.25});
    Tensor out = forward(net, batch);
    CHECK(bit_identical(out, batch));
}

TEST_CASE("conv2d identity kernel forward") {
    // 1x1 kernel of value 1, single channel: output equals input
    Network net = make_network({1, 2, 2}, {Conv2DSpec{1, 1, 1, 1, 0}, FlattenSpec{}});
    net.weights[0][0] = 1.0;
    Tensor batch({1, 1, 2, 2}, {1.5, -2.0, 0.0, 3.25});
    Tensor out = forward(net, batch);
    CHECK(out.shape() == std::vector<std::size_t>{1, 4});
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == batch[i]);
}

TEST_CASE("relu forward definition") {
    Network net = make_network({3}, {ReluSpec{}});
    Tensor out = forward(net, Tensor({1, 3}, {-1.0, 2.0, 0.0}));
    CHECK(out.values() == std::vector<double>{0.0, 2.0, 0.0});
}

TEST_CASE("forward rejects non-composing batch with the layer named") {
    Network net = make_network({3}, {DenseSpec{3, 2}});
    try {
        forward(net, Tensor({2, 4}));
        FAIL("expected shape rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
    }
}

TEST_CASE("network construction rejects bad compositions with the layer index") {
    try {
        make_network({4}, {DenseSpec{4, 8}, DenseSpec{9, 2}});
        FAIL("expected composition rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
    // zero-width layer rejected at construction
    CHECK_THROWS_AS(make_network({2}, {DenseSpec{2, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_network({2}, {DenseSpec{0, 2}}), std::invalid_argument);
}

TEST_CASE("uniform softmax loss is ln 2") {
    Network net = make_network({2}, {DenseSpec{2, 2}}); // zero params -> logits [0, 0]
    auto [loss, grads] = loss_and_gradients(net, Tensor({1, 2}, {0.3, -0.7}), {{0}});
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(grads.weights.size() == 1);
}

TEST_CASE("saturated softmax loss approaches zero") {
    Network net = make_network({2}, {DenseSpec{2, 2}});
    net.biases[0][0] = 60.0; // one-hot * large constant at the true class
    auto [loss, grads] = loss_and_gradients(net, Tensor({1, 2}, {0.0, 0.0}), {{0}});
    CHECK(loss >= 0.0);
    CHECK(loss < 1e-12);
}

TEST_CASE("loss rejects empty batch and bad labels") {
    Network net = make_network({2}, {DenseSpec{2, 2}});
    CHECK_THROWS_AS(loss_and_gradients(net, Tensor({0, 2}), {}), std::invalid_argument);
    CHECK_THROWS_AS(loss_and_gradients(net, Tensor({1, 2}), {{5}}), std::invalid_argument);
}

TEST_CASE("sgd_step: all-zero mask leaves the network bit-identical") {
    Network net = random_net({4}, {DenseSpec{4, 3}}, 9);
    Network before = net;
    Gradients grads;
    grads.weights.emplace_back(net.weights[0].shape());
    grads.biases.emplace_back(net.biases[0].shape());
    grads.weights[0].fill(7.0);

    MaskSet masks = all_ones_masks(net);
    masks[0].bits.assign(masks[0].bits.size(), 0);
    SgdState state = make_sgd_state(net);
    state.vel_w[0].fill(3.0); // stale velocity must be cleared, not applied
    SgdConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.momentum = 0.9;
    sgd_step(net, grads, state, cfg, &masks);

    CHECK(bit_identical(net.weights[0], before.weights[0]));
    for (double v : state.vel_w[0].values()) CHECK(v == 0.0);
}

TEST_CASE("sgd_step: plain update w <- w - lr * g") {
    Network net = make_network({1}, {DenseSpec{1, 2}});
    net.weights[0][0] = 1.0;
    net.weights[0][1] = -2.0;
    Gradients grads;
    grads.weights.emplace_back(net.weights[0].shape());
    grads.biases.emplace_back(net.biases[0].shape());
    grads.weights[0][0] = 0.5;
    grads.weights[0][1] = -1.0;
    SgdState state = make_sgd_state(net);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    sgd_step(net, grads, state, cfg);
    CHECK(net.weights[0][0] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-15));
    CHECK(net.weights[0][1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-15));
}

TEST_CASE("sgd_step: decay-coupled update, w=1 g=0 lambda=0.1 lr=0.1 -> 0.99") {
    Network net = make_network({1}, {DenseSpec{1, 2}});
    net.weights[0][0] = 1.0;
    Gradients grads;
    grads.weights.emplace_back(net.weights[0].shape());
    grads.biases.emplace_back(net.biases[0].shape());
    SgdState state = make_sgd_state(net);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.1;
    sgd_step(net, grads, state, cfg);
    CHECK(net.weights[0][0] == doctest::Approx(0.99).epsilon(1e-15));
}

TEST_CASE("momentum accumulates over steps") {
    Network net = make_network({1}, {DenseSpec{1, 2}});
    Gradients grads;
    grads.weights.emplace_back(net.weights[0].shape());
    grads.biases.emplace_back(net.biases[0].shape());
    grads.weights[0][0] = 1.0;
    SgdState state = make_sgd_state(net);
    SgdConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.momentum = 0.5;
    sgd_step(net, grads, state, cfg); // v=1, w=-1
    sgd_step(net, grads, state, cfg); // v=1.5, w=-2.5
    CHECK(net.weights[0][0] == doctest::Approx(-2.5).epsilon(1e-15));
}

TEST_CASE("training on separable blobs reaches 99% within 20 epochs") {
    Dataset blobs = gen_synthetic(SyntheticKind::Blobs, 2, 200, 5);
    Network net = random_net({2}, {DenseSpec{2, 2}}, 5);
    SgdConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 16;
    auto metrics = train(net, blobs, cfg, 20, 5);
    CHECK(metrics.size() == 20);
    CHECK(evaluate(net, blobs).top1 >= 0.99);
    for (const auto& m : metrics) CHECK(std::isfinite(m.loss));
}

TEST_CASE("same seed twice gives bit-identical trained weights") {
    Dataset data = gen_synthetic(SyntheticKind::Spirals, 3, 150, 8);
    SgdConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.9;
    cfg.batch_size = 32;

    Network a = random_net({2}, {DenseSpec{2, 16}, ReluSpec{}, DenseSpec{16, 3}}, 3);
    Network b = random_net({2}, {DenseSpec{2, 16}, ReluSpec{}, DenseSpec{16, 3}}, 3);
    auto ma = train(a, data, cfg, 5, 77);
    auto mb = train(b, data, cfg, 5, 77);
    CHECK(nets_bit_identical(a, b));
    for (std::size_t i = 0; i < ma.size(); ++i) {
        CHECK(std::memcmp(&ma[i].loss, &mb[i].loss, sizeof(double)) == 0);
    }

    Network c = random_net({2}, {DenseSpec{2, 16}, ReluSpec{}, DenseSpec{16, 3}}, 3);
    train(c, data, cfg, 5, 78);
    CHECK(!nets_bit_identical(a, c));
}

TEST_CASE("divergence aborts with the epoch index") {
    Dataset data = gen_synthetic(SyntheticKind::Blobs, 2, 64, 2);
    Network net = random_net({2}, {DenseSpec{2, 8}, ReluSpec{}, DenseSpec{8, 2}}, 1);
    SgdConfig cfg;
    cfg.learning_rate = 1e18; // guaranteed blow-up
    cfg.batch_size = 16;
    CHECK_THROWS_AS(train(net, data, cfg, 5, 1), TrainingDiverged);
}

TEST_CASE("evaluate tie-break: identical logits predict class 0") {
    Network net = make_network({2}, {DenseSpec{2, 4}}); // zero params: all logits equal
    Dataset data;
    data.num_classes = 4;
    data.inputs = Tensor({8, 2});
    data.labels = {0, 1, 2, 3, 0, 0, 1, 0};
    const double frac_zero = 4.0 / 8.0;
    CHECK(evaluate(net, data).top1 == frac_zero);
}

TEST_CASE("perfect logits give accuracy 1") {
    Network net = make_network({3}, {DenseSpec{3, 3}});
    for (std::size_t i = 0; i < 3; ++i) net.weights[0][i * 3 + i] = 10.0;
    Dataset data;
    data.num_classes = 3;
    data.inputs = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    data.labels = {0, 1, 2};
    EvalMetrics m = evaluate(net, data, 2);
    CHECK(m.top1 == 1.0);
    REQUIRE(m.topk.has_value());
    CHECK(*m.topk == 1.0);
}

TEST_CASE("untrained net on random labels scores near chance") {
    Dataset data = gen_synthetic(SyntheticKind::Spirals, 10, 2000, 12);
    Rng rng(99);
    for (auto& l : data.labels) l = static_cast<std::int32_t>(rng.bounded(10));
    Network net = random_net({2}, {DenseSpec{2, 32}, ReluSpec{}, DenseSpec{32, 10}}, 21);
    const double acc = evaluate(net, data).top1;
    CHECK(acc >= 0.05);
    CHECK(acc <= 0.15);
}

TEST_CASE("one sgd step with small lr decreases the batch loss") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Network net = random_net({5}, {DenseSpec{5, 12}, ReluSpec{}, DenseSpec{12, 4}}, seed + 40);
        Tensor batch({6, 5});
        for (double& v : batch.values()) v = rng.normal();
        std::vector<std::int32_t> labels(6);
        for (auto& l : labels) l = static_cast<std::int32_t>(rng.bounded(4));

        auto [before, grads] = loss_and_gradients(net, batch, labels);
        SgdState state = make_sgd_state(net);
        SgdConfig cfg;
        cfg.learning_rate = 1e-4;
        sgd_step(net, grads, state, cfg);
        auto [after, grads2] = loss_and_gradients(net, batch, labels);
        CHECK(after < before);
    }
}

TEST_CASE("learning-rate schedule multipliers apply from their epoch") {
    SgdConfig cfg;
    cfg.learning_rate = 0.2;
    cfg.lr_schedule = {{3, 0.5}, {6, 0.1}};
    CHECK(lr_at_epoch(cfg, 0) == 0.2);
    CHECK(lr_at_epoch(cfg, 3) == 0.1);
    CHECK(lr_at_epoch(cfg, 5) == 0.1);
    CHECK(lr_at_epoch(cfg, 6) == doctest::Approx(0.02));

    SgdConfig bad = cfg;
    bad.lr_schedule = {{3, 0.5}, {3, 0.1}};
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("forward is safe to run concurrently on a shared network") {
    Network net = random_net({2}, {DenseSpec{2, 24}, ReluSpec{}, DenseSpec{24, 5}}, 15);
    Rng rng(4);
    Tensor batch({32, 2});
    for (double& v : batch.values()) v = rng.normal();
    Tensor expected = forward(net, batch);

    std::vector<Tensor> results(4);
    {
        std::vector<std::thread> workers;
        for (auto& slot : results) {
            workers.emplace_back([&net, &batch, &slot] { slot = forward(net, batch); });
        }
        for (auto& w : workers) w.join();
    }
    for (const Tensor& r : results) CHECK(bit_identical(r, expected));
}

TEST_CASE("engine keeps activations finite on finite inputs") {
    Network net = random_net({1, 6, 6},
                             {Conv2DSpec{1, 4, 3, 1, 1}, ReluSpec{}, MaxPool2DSpec{2},
                              FlattenSpec{}, DenseSpec{36, 5}},
                             77);
    Rng rng(8);
    Tensor batch({4, 1, 6, 6});
    for (double& v : batch.values()) v = rng.normal();
    Tensor out = forward(net, batch);
    CHECK(out.all_finite());
}
