#include "affectsim/rng.hpp"

#include <limits>
#include <sstream>

#include "affectsim/errors.hpp"

namespace affectsim {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}
}  // namespace

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL)));
}

std::uint64_t Rng::index(std::uint64_t n) {
    if (n == 0) throw UsageError("Rng::index called with n = 0");
    // rejection sampling keeps the draw exactly uniform
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

Rng Rng::deserialize(const std::string& state) {
    Rng r;
    std::istringstream is(state);
    is >> r.engine_;
    if (!is) throw ConfigError("invalid RNG state string");
    return r;
}

}  // namespace affectsim
