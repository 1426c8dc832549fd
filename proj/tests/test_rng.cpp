#include "doctest.h"

#include <cmath>
#include <set>

#include "fractal/cantor.hpp"
#include "fractal/rng.hpp"

using namespace fractal;

TEST_CASE("philox blocks are deterministic and key/counter sensitive") {
    const auto a = Philox4x32::block(42, 1, 2, 3, 4);
    const auto b = Philox4x32::block(42, 1, 2, 3, 4);
    CHECK(a == b);
    CHECK(a != Philox4x32::block(43, 1, 2, 3, 4));
    CHECK(a != Philox4x32::block(42, 1, 2, 3, 5));
}

TEST_CASE("uniform_below stays in range and is roughly uniform") {
    const std::uint64_t bound = 9;
    std::vector<std::uint64_t> counts(bound, 0);
    const std::uint64_t draws = 90'000;
    for (std::uint64_t i = 0; i < draws; ++i) ++counts[uniform_below(5, 1, i, 0, bound)];
    const double expect = static_cast<double>(draws) / bound;
    const double sigma = std::sqrt(expect * (1.0 - 1.0 / bound));
    for (std::uint64_t k = 0; k < bound; ++k)
        CHECK(std::abs(static_cast<double>(counts[k]) - expect) <= 4 * sigma);
}

TEST_CASE("uniform_unit lies in [0,1) and has mean 1/2") {
    double sum = 0;
    const std::uint64_t n = 100'000;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double u = uniform_unit(9, 2, i, 0);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    const double sigma = std::sqrt(1.0 / 12.0 / static_cast<double>(n));
    CHECK(std::abs(sum / static_cast<double>(n) - 0.5) <= 3 * sigma);
}

TEST_CASE("derive_key separates trial streams") {
    std::set<std::uint64_t> keys;
    for (std::uint64_t i = 0; i < 1000; ++i) keys.insert(derive_key(7, i));
    CHECK(keys.size() == 1000);
}

TEST_CASE("two draws over a 2x2 grid collide with probability 1/4") {
    // enumerating the 16 ordered outcomes gives P(equal) = 4/16
    GridSequence seq;
    seq.M = {2};
    seq.N = {2};
    const std::uint64_t trials = 40'000;
    std::uint64_t equal = 0;
    for (std::uint64_t s = 0; s < trials; ++s) {
        const Construction c = generate(seq, 1, derive_key(0xC0u, s));
        if (c.levels[0].entries[0] == c.levels[0].entries[1]) ++equal;
    }
    const double freq = static_cast<double>(equal) / static_cast<double>(trials);
    const double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(trials));
    CHECK(std::abs(freq - 0.25) <= 3 * sigma);
}

TEST_CASE("full-density sampling hits each child once on average") {
    // N = M^2 = 4 draws over 4 children: each child count has mean 1
    GridSequence seq;
    seq.M = {2};
    seq.N = {4};
    const std::size_t seeds = 10'000;
    std::array<std::uint64_t, 4> counts{0, 0, 0, 0};
    for (std::size_t s = 0; s < seeds; ++s) {
        const Construction c = generate(seq, 1, derive_key(0xF00Du, s));
        for (const SquareAddr& addr : c.levels[0].entries) {
            const auto [col, row] = addr.digits[0];
            ++counts[row * 2 + col];
        }
    }
    const double sigma3 = 3 * std::sqrt(0.75 / static_cast<double>(seeds));
    for (std::uint64_t k = 0; k < 4; ++k) {
        const double mean = static_cast<double>(counts[k]) / static_cast<double>(seeds);
        CHECK(std::abs(mean - 1.0) <= sigma3);
    }
}
