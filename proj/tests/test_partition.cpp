#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>

#include "inq/partition.hpp"

using namespace inq;

TEST_CASE("pruning partition freezes the largest magnitudes") {
    Tensor w = Tensor::vec({0.9, -0.1, 0.5, -0.7});
    Mask mask = Mask::ones({4});
    auto fresh = partition_pruning(w, mask, 2);
    CHECK(mask.bits == std::vector<std::uint8_t>{0, 1, 1, 0});
    CHECK(fresh == std::vector<std::size_t>{0, 3});
}

TEST_CASE("pruning partition: target equal to layer size freezes everything") {
    Tensor w = Tensor::vec({0.3, -0.2, 0.0});
    Mask mask = Mask::ones({3});
    partition_pruning(w, mask, 3);
    CHECK(mask.frozen_count() == 3);
}

TEST_CASE("pruning partition tie-break prefers the lower flat index") {
    Tensor w = Tensor::vec({0.5, -0.5});
    Mask mask = Mask::ones({2});
    partition_pruning(w, mask, 1);
    CHECK(mask.bits == std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("pruning partition threshold property over random layers") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor w({32});
        for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
        Mask mask = Mask::ones({32});
        // two incremental calls, as the schedule would make them
        auto first = partition_pruning(w, mask, 10);
        double min_frozen = 1e300;
        for (std::size_t i : first) min_frozen = std::min(min_frozen, std::abs(w[i]));
        double max_free = 0.0;
        for (std::size_t i = 0; i < 32; ++i) {
            if (mask.bits[i]) max_free = std::max(max_free, std::abs(w[i]));
        }
        CHECK(min_frozen >= max_free);

        auto second = partition_pruning(w, mask, 20);
        min_frozen = 1e300;
        for (std::size_t i : second) min_frozen = std::min(min_frozen, std::abs(w[i]));
        max_free = 0.0;
        for (std::size_t i = 0; i < 32; ++i) {
            if (mask.bits[i]) max_free = std::max(max_free, std::abs(w[i]));
        }
        CHECK(min_frozen >= max_free);
        CHECK(mask.frozen_count() == 20);
    }
}

TEST_CASE("partition rejects shrinking targets and oversized targets") {
    Tensor w = Tensor::vec({1.0, 2.0, 3.0});
    Mask mask = Mask::ones({3});
    partition_pruning(w, mask, 2);
    CHECK_THROWS_AS(partition_pruning(w, mask, 1), std::invalid_argument);
    CHECK_THROWS_AS(partition_pruning(w, mask, 4), std::invalid_argument);
    CHECK_THROWS_AS(partition_random(w, mask, 1, 5), std::invalid_argument);
}

TEST_CASE("random partition: full target freezes everything regardless of seed") {
    Tensor w = Tensor::vec({0.1, 0.2, 0.3, 0.4});
    for (std::uint64_t seed : {1ULL, 99ULL, 12345ULL}) {
        Mask mask = Mask::ones({4});
        partition_random(w, mask, 4, seed);
        CHECK(mask.frozen_count() == 4);
    }
}

TEST_CASE("random partition is deterministic per seed") {
    Tensor w({64});
    Mask a = Mask::ones({64});
    Mask b = Mask::ones({64});
    partition_random(w, a, 32, 7);
    partition_random(w, b, 32, 7);
    CHECK(a.bits == b.bits);

    Mask c = Mask::ones({64});
    partition_random(w, c, 32, 8);
    CHECK(a.bits != c.bits);
}

TEST_CASE("random partition selects uniformly") {
    Tensor w = Tensor::vec({1.0, 2.0, 3.0, 4.0});
    std::array<std::size_t, 4> hits{};
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        Mask mask = Mask::ones({4});
        partition_random(w, mask, 2, static_cast<std::uint64_t>(t) + 1);
        for (std::size_t i = 0; i < 4; ++i) hits[i] += (mask.bits[i] == 0);
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const double freq = static_cast<double>(hits[i]) / trials;
        CHECK(freq >= 0.48);
        CHECK(freq <= 0.52);
    }
}

TEST_CASE("masks only ever flip from re-trainable to frozen") {
    Rng rng(3);
    Tensor w({40});
    for (double& v : w.values()) v = rng.normal();
    Mask mask = Mask::ones({40});
    std::vector<std::uint8_t> prev = mask.bits;
    for (std::size_t target : {8, 16, 24, 40}) {
        partition_random(w, mask, target, rng.next());
        for (std::size_t i = 0; i < 40; ++i) {
            if (prev[i] == 0) CHECK(mask.bits[i] == 0);
        }
        prev = mask.bits;
    }
}
