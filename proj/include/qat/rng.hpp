#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace qat::rng {

// SplitMix64 finalizer. Used as a keyed counter hash so every random draw is
// a pure function of (seed, stream labels..., index) and never of call order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Keyed stream of deterministic draws. Keys are built by chaining labels;
// draws index into the stream without mutating it.
class Key {
public:
    explicit Key(std::uint64_t seed) : state_(splitmix64(seed)) {}

    Key with(std::uint64_t v) const { return Key(splitmix64(state_ ^ splitmix64(v)), 0); }
    Key with(std::string_view label) const { return with(fnv1a(label)); }

    std::uint64_t bits(std::uint64_t index) const { return splitmix64(state_ ^ splitmix64(index * 2 + 1)); }

    // uniform in [0, 1)
    double uniform(std::uint64_t index) const { return double(bits(index) >> 11) * 0x1.0p-53; }

    double uniform(std::uint64_t index, double lo, double hi) const {
        return lo + uniform(index) * (hi - lo);
    }

    // standard normal via Box-Muller; consumes two sub-draws per index
    double normal(std::uint64_t index) const {
        const double u1 = double((bits(index * 2) >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform(index * 2 + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    Key(std::uint64_t raw, int) : state_(raw) {}
    std::uint64_t state_;
};

} // namespace qat::rng
