#pragma once

// Test-only reference evaluator for the generator permutations, written as
// bit-array manipulation so it shares no code path (and no bit-twiddling
// idioms) with the production implementation.

#include <cstdint>
#include <vector>

#include "pcglab/generators.hpp"

namespace refpcg {

using Bits = std::vector<int>; // index 0 = least significant bit

inline Bits to_bits(uint64_t v, int width) {
    Bits b(width);
    for (int i = 0; i < width; ++i) b[i] = static_cast<int>((v >> i) & 1);
    return b;
}

inline uint64_t from_bits(const Bits& b) {
    uint64_t v = 0;
    for (size_t i = 0; i < b.size(); ++i)
        if (b[i]) v |= (1ULL << i);
    return v;
}

inline Bits shift_right(const Bits& b, int k) {
    Bits out(b.size(), 0);
    for (size_t i = 0; i + k < b.size(); ++i) out[i] = b[i + k];
    return out;
}

inline Bits xor_bits(const Bits& a, const Bits& b) {
    Bits out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

inline Bits low_bits(const Bits& b, int n) { return Bits(b.begin(), b.begin() + n); }

inline Bits rotate_right(const Bits& b, int r) {
    const int n = static_cast<int>(b.size());
    r %= n;
    Bits out(n);
    for (int i = 0; i < n; ++i) out[i] = b[(i + r) % n];
    return out;
}

inline uint64_t control_value(const Bits& state, int cb) {
    if (cb == 0) return 0;
    Bits top(state.end() - cb, state.end());
    return from_bits(top);
}

// Output permutation per the published formulas, evaluated on bit arrays.
inline uint64_t ref_output(uint64_t state, const pcglab::GeneratorSpec& spec) {
    const int sb = spec.state_bits;
    const int n = spec.output_bits;
    const int cb = spec.control_bits;
    const Bits s = to_bits(state, sb);
    switch (spec.variant) {
        case pcglab::Variant::Tlcg: {
            Bits top(s.end() - n, s.end());
            return from_bits(top);
        }
        case pcglab::Variant::Xslrr: {
            const uint64_t v = control_value(s, cb);
            const Bits x = xor_bits(s, shift_right(s, n));
            return from_bits(rotate_right(low_bits(x, n), static_cast<int>(v)));
        }
        case pcglab::Variant::Xshrr: {
            const uint64_t v = control_value(s, cb);
            const Bits x = xor_bits(s, shift_right(s, (n + cb) / 2));
            const Bits window = low_bits(shift_right(x, n - cb), n);
            return from_bits(rotate_right(window, static_cast<int>(v)));
        }
        case pcglab::Variant::Xshrs: {
            const uint64_t v = control_value(s, cb);
            const Bits x = xor_bits(s, shift_right(s, n - cb - (1 << cb) + 1));
            return from_bits(low_bits(shift_right(x, n + static_cast<int>(v)), n));
        }
    }
    return 0;
}

// Schoolbook 32x32 -> 64 multiplication in halves, then bitwise masking; a
// different arithmetic route than the production 128-bit multiply.
inline uint64_t ref_lcg_step(uint64_t s, uint64_t a, uint64_t c, int state_bits) {
    const uint64_t mask = state_bits >= 64 ? ~0ULL : ((1ULL << state_bits) - 1);
    const uint64_t a_lo = a & 0xffffffffULL, a_hi = a >> 32;
    const uint64_t s_lo = s & 0xffffffffULL, s_hi = s >> 32;
    // low 64 bits of a*s: a_lo*s_lo + ((a_lo*s_hi + a_hi*s_lo) << 32)
    uint64_t prod = a_lo * s_lo;
    prod += (a_lo * s_hi + a_hi * s_lo) << 32;
    return (prod + c) & mask;
}

inline std::vector<uint64_t> ref_sequence(const pcglab::GeneratorSpec& spec, uint64_t s0,
                                          size_t length) {
    std::vector<uint64_t> out;
    uint64_t s = s0 & spec.state_mask();
    for (size_t i = 0; i < length; ++i) {
        s = ref_lcg_step(s, spec.multiplier, spec.increment, spec.state_bits);
        out.push_back(ref_output(s, spec));
    }
    return out;
}

} // namespace refpcg
