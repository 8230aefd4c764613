#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fbcool {

/// Per-trajectory random source. The engine is seeded from
/// (baseSeed, trajectoryIndex) only, so a trajectory's draws do not depend on
/// which worker runs it or in which order.
class NoiseStream {
public:
    NoiseStream(std::uint64_t baseSeed, std::uint64_t trajectoryIndex);

    /// Wiener increment ~ Normal(0, dt).
    double wiener(double dt) { return std::sqrt(dt) * normal_(engine_); }
    double standard_normal() { return normal_(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    bool coin() { return std::bernoulli_distribution(0.5)(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline NoiseStream::NoiseStream(std::uint64_t baseSeed, std::uint64_t trajectoryIndex) {
    std::seed_seq seq{static_cast<std::uint32_t>(baseSeed), static_cast<std::uint32_t>(baseSeed >> 32),
                      static_cast<std::uint32_t>(trajectoryIndex),
                      static_cast<std::uint32_t>(trajectoryIndex >> 32), 0x5eedu};
    engine_.seed(seq);
}

} // namespace fbcool
