#pragma once

#include <cstdint>
#include <random>

namespace mimvc {

// Portable random source. The standard distributions are implementation
// defined, so every draw here is built directly on the mt19937_64 bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling removes modulo bias.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller (no cached second value).
    double normal();

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Derives independent child seeds from one root seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace mimvc
