#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace pcglab {

// Deterministic 64-bit RNG (splitmix64). Used everywhere a seed appears so
// that datasets, initializations and samplers reproduce bit-for-bit across
// platforms; std:: distributions are not portable across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, bound), bound > 0. Lemire reduction with
    // rejection, unbiased and deterministic.
    uint64_t next_below(uint64_t bound) {
        for (;;) {
            uint64_t x = next_u64();
            unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
            uint64_t lo = static_cast<uint64_t>(m);
            if (lo >= bound || lo >= static_cast<uint64_t>(-bound) % bound)
                return static_cast<uint64_t>(m >> 64);
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (no cached spare; keeps replay trivial).
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent stream for a named purpose. Mixing the tag through
    // the output function decorrelates child streams from the parent.
    Rng fork(uint64_t tag) {
        Rng child(state_ ^ (0x632be59bd9b4e019ULL * (tag + 1)));
        child.next_u64();
        return child;
    }

private:
    uint64_t state_;
};

} // namespace pcglab
