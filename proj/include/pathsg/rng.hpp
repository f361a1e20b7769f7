#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace pathsg {

// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);
// Child seed for an index (outer sample, sub-experiment, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
}

// Purpose tags keep independent draws apart inside one trajectory.
enum class StreamTag : std::uint32_t { Brownian = 0, LevyBrownian = 1, LevyJumps = 2, Aux = 3 };

// Counter-based noise for one trajectory: draw (step, lane) is a pure function
// of (seed, trajectory, tag, step, lane). Copies are cheap and thread-safe.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t trajectory, StreamTag tag = StreamTag::Brownian);

    // Uniform in (0, 1), standard normal.
    double uniform(std::uint64_t step, std::uint32_t lane) const;
    double normal(std::uint64_t step, std::uint32_t lane) const;
    void normals(std::uint64_t step, std::span<double> out) const;
    NoiseStream with_tag(StreamTag tag) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t trajectory() const { return traj_; }

private:
    std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint32_t b) const;
    std::uint64_t seed_, traj_;
    std::array<std::uint32_t, 2> key_;
    std::uint32_t tag_;
};

} // namespace pathsg
