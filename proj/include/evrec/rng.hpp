#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "evrec/common.hpp"

namespace evrec {

// Counter-based deterministic random stream (splitmix64 core).
//
// Standard-library distributions are implementation-defined, which would break
// the bit-identical-replay guarantee across toolchains, so all draws used by
// the simulation go through this type. Identical seeds yield identical
// sequences everywhere.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform integer in [0, n). Lemire reduction; bias < 2^-64 is irrelevant here.
    std::uint32_t next_below(std::uint32_t n) {
        internal_check(n > 0, "next_below: n must be positive");
        return static_cast<std::uint32_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Exact Poisson sampling (Knuth), chunked via additivity so large means
    // cannot underflow exp(-mean).
    int poisson(double mean) {
        internal_check(mean >= 0.0, "poisson: negative mean");
        int total = 0;
        while (mean > 30.0) {
            total += poisson_small(30.0);
            mean -= 30.0;
        }
        return total + poisson_small(mean);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_below(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent stream derived from this stream's seed (not its position).
    RngStream derive(std::uint64_t salt) const { return RngStream(mix(seed_, salt)); }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 0x632BE59BD9B4E019ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

  private:
    int poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double();
        } while (p > limit);
        return k - 1;
    }

    std::uint64_t seed_;
    std::uint64_t state_;
};

}  // namespace evrec
