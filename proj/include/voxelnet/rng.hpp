#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "voxelnet/error.hpp"

namespace voxelnet {

// splitmix64 step (Steele, Lea & Flood; constants from Vigna's reference
// implementation). Used for seeding and for seed derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic child seed from (master seed, stage name, index). The stage
// name is hashed with 64-bit FNV-1a (offset 14695981039346656037, prime
// 1099511628211), mixed with the master seed and index through splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                          std::uint64_t index = 0);

// xoshiro256** 1.0 (Blackman & Vigna, 2018): scrambled xorshift generator
// with a 256-bit state expanded from the 64-bit seed via splitmix64. The
// stream depends only on the seed, on every platform. Single-owner mutable
// state: never share one instance across concurrent tasks, derive a child
// seed per task instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw ParameterError("Rng::uniform: requires lo < hi");
        double v = lo + uniform01() * (hi - lo);
        if (v >= hi) v = std::nextafter(hi, lo);  // guard against rounding up
        return v;
    }

    std::vector<double> uniform_vec(double lo, double hi, std::size_t n) {
        if (!(lo < hi)) throw ParameterError("Rng::uniform_vec: requires lo < hi");
        std::vector<double> out(n);
        for (auto& v : out) v = uniform(lo, hi);
        return out;
    }

    // Uniform integer in [0, bound). Maps next_u64() modulo bound; the
    // resulting bias is below 2^-32 for the index ranges used here.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw ParameterError("Rng::below: bound must be positive");
        return next_u64() % bound;
    }

    // Standard normal via Box-Muller; two uniforms per draw.
    double normal(double mean = 0.0, double sd = 1.0) {
        const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace voxelnet
