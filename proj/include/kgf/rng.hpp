#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace kgf {

// All randomness in the project flows through this splitmix64 stream so that
// results are bit-reproducible across platforms and re-derivable by tests.
// std::mt19937 is avoided because the standard distributions are not
// bit-specified.

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + kGamma));
}

// Folds any number of words into one stream seed. Used to give every
// (entity, walk index), (positive triple, draw index), (epoch, bucket) its
// own independent deterministic stream.
inline std::uint64_t stream_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ull;  // arbitrary non-zero start
    for (std::uint64_t p : parts) h = hash_combine(h, p);
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGamma;
        return mix64(state_);
    }

    // n == 0 returns 0. Modulo bias is negligible for desk-scale n and the
    // reduction is trivially re-implementable in oracle code.
    std::uint64_t bounded(std::uint64_t n) { return n ? next() % n : 0; }

    // Uniform in [0, 1), 53 mantissa bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    bool coin() { return (next() & 1) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::uint64_t i = v.size(); i > 1; --i) {
            std::uint64_t j = bounded(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace kgf
