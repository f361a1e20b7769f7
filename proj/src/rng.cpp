#include "pathsg/rng.hpp"

#include <cmath>
#include <numbers>

namespace pathsg {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1)
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t u = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(u) + 0.5) * 0x1p-53;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        std::uint32_t h0, l0, h1, l1;
        mulhilo(kM0, c[0], h0, l0);
        mulhilo(kM1, c[2], h1, l1);
        c = {h1 ^ c[1] ^ k[0], l1, h0 ^ c[3] ^ k[1], l0};
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t trajectory, StreamTag tag)
    : seed_(seed), traj_(trajectory), tag_(static_cast<std::uint32_t>(tag)) {
    const std::uint64_t k = derive_seed(seed, trajectory);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

NoiseStream NoiseStream::with_tag(StreamTag tag) const { return NoiseStream(seed_, traj_, tag); }

std::array<std::uint32_t, 4> NoiseStream::block(std::uint64_t step, std::uint32_t b) const {
    return philox4x32({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), b, tag_}, key_);
}

double NoiseStream::uniform(std::uint64_t step, std::uint32_t lane) const {
    const auto r = block(step, lane / 2);
    return lane % 2 ? to_unit(r[2], r[3]) : to_unit(r[0], r[1]);
}

double NoiseStream::normal(std::uint64_t step, std::uint32_t lane) const {
    const auto r = block(step, lane / 2);
    const double u1 = to_unit(r[0], r[1]), u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    return lane % 2 ? rad * std::sin(th) : rad * std::cos(th);
}

void NoiseStream::normals(std::uint64_t step, std::span<double> out) const {
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const auto r = block(step, static_cast<std::uint32_t>(i / 2));
        const double u1 = to_unit(r[0], r[1]), u2 = to_unit(r[2], r[3]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        out[i] = rad * std::cos(th);
        if (i + 1 < out.size()) out[i + 1] = rad * std::sin(th);
    }
}

} // namespace pathsg
