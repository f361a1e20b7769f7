#include <cmath>
#include <vector>

#include "doctest.h"
#include "pathsg/rng.hpp"

using namespace pathsg;

TEST_CASE("philox4x32-10 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("noise streams are pure functions of their coordinates") {
    NoiseStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    CHECK(a.normal(100, 3) == b.normal(100, 3));
    CHECK(a.normal(100, 3) != c.normal(100, 3));
    CHECK(a.normal(100, 3) != d.normal(100, 3));
    CHECK(a.normal(100, 3) != a.with_tag(StreamTag::LevyJumps).normal(100, 3));
    std::vector<double> v(5);
    a.normals(9, v);
    for (std::uint32_t i = 0; i < 5; ++i) CHECK(v[i] == a.normal(9, i));
}

TEST_CASE("normal and uniform moments") {
    NoiseStream s(1, 0);
    const int N = 200000;
    double m = 0, m2 = 0, um = 0;
    for (int i = 0; i < N; ++i) {
        const double z = s.normal(static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(i % 4));
        m += z;
        m2 += z * z;
        const double u = s.uniform(static_cast<std::uint64_t>(i), 5);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        um += u;
    }
    m /= N;
    m2 /= N;
    um /= N;
    CHECK(std::abs(m) < 4 / std::sqrt(N));
    CHECK(std::abs(m2 - 1) < 4 * std::sqrt(2.0 / N));
    CHECK(std::abs(um - 0.5) < 4 * std::sqrt(1.0 / 12 / N));
}

TEST_CASE("derived seeds differ") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}
