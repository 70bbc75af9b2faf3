#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace affectsim {

/// Seeded random stream. All stochastic operations take one of these
/// explicitly so that experiments replay bit-for-bit.
///
/// Draws are derived directly from the 64-bit engine output rather than
/// through std distributions, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent stream for (seed, stream) using a splitmix64 mix.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next() { return engine_(); }

    std::string serialize() const;
    static Rng deserialize(const std::string& state);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace affectsim
