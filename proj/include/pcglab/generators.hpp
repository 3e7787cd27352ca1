#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcglab {

// Output permutation applied to the hidden LCG state.
enum class Variant : uint16_t {
    Tlcg  = 0, // keep the top k state bits
    Xslrr = 1, // xorshift low half, random rotation
    Xshrr = 2, // xorshift high, random rotation
    Xshrs = 3, // xorshift high, random shift
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name); // throws on unknown name

// Full description of one generator: permutation, widths and LCG parameters.
// state_bits is the log2 of the modulus; output_bits is the token width.
struct GeneratorSpec {
    Variant variant = Variant::Xslrr;
    int state_bits = 16;
    int output_bits = 8;
    int control_bits = 0;
    uint64_t multiplier = 0;
    uint64_t increment = 0;

    uint64_t modulus() const { return state_mask() + 1; }              // 0 means 2^64
    uint64_t state_mask() const {
        return state_bits >= 64 ? ~0ULL : ((1ULL << state_bits) - 1);
    }
    uint64_t vocab_size() const { return 1ULL << output_bits; }
    std::string name() const; // e.g. "xslrr-16/8cb3"
};

// Throws std::invalid_argument when widths/control bits are inconsistent
// (XSLRR needs output = state/2; XSHRS needs a non-negative xorshift, etc).
void validate_spec(const GeneratorSpec& spec);

// One step of the state recurrence: (a*s + c) mod 2^state_bits.
// 128-bit intermediate keeps the product exact for state_bits up to 64.
inline uint64_t lcg_step(uint64_t state, const GeneratorSpec& spec) {
    unsigned __int128 p = static_cast<unsigned __int128>(spec.multiplier) * state + spec.increment;
    return static_cast<uint64_t>(p) & spec.state_mask();
}

// Right-rotation of the low `width` bits of value by rot mod width.
inline uint64_t rotr(uint64_t value, unsigned rot, unsigned width) {
    uint64_t mask = width >= 64 ? ~0ULL : ((1ULL << width) - 1);
    value &= mask;
    rot %= width;
    if (rot == 0) return value;
    return ((value >> rot) | (value << (width - rot))) & mask;
}

// Output function without spec validation, for pre-validated hot loops.
inline uint64_t permute_output_unchecked(uint64_t state, const GeneratorSpec& spec) {
    const int sb = spec.state_bits;
    const int n = spec.output_bits;
    const int cb = spec.control_bits;
    const uint64_t out_mask = (n >= 64) ? ~0ULL : ((1ULL << n) - 1);
    switch (spec.variant) {
        case Variant::Tlcg:
            return state >> (sb - n);
        case Variant::Xslrr: {
            uint64_t v = cb == 0 ? 0 : state >> (sb - cb);
            uint64_t x = state ^ (state >> n);
            return rotr(x & out_mask, static_cast<unsigned>(v), static_cast<unsigned>(n));
        }
        case Variant::Xshrr: {
            uint64_t v = cb == 0 ? 0 : state >> (sb - cb);
            uint64_t x = state ^ (state >> ((n + cb) / 2));
            return rotr((x >> (n - cb)) & out_mask, static_cast<unsigned>(v), static_cast<unsigned>(n));
        }
        case Variant::Xshrs: {
            uint64_t v = cb == 0 ? 0 : state >> (sb - cb);
            uint64_t x = state ^ (state >> (n - cb - (1 << cb) + 1));
            return (x >> (n + v)) & out_mask;
        }
    }
    throw std::logic_error("unreachable variant");
}

// Per-variant output function. `state` must already be reduced mod 2^state_bits.
// Rejects specs violating the width/control-bit invariants.
inline uint64_t permute_output(uint64_t state, const GeneratorSpec& spec) {
    validate_spec(spec);
    return permute_output_unchecked(state, spec);
}

// Hull-Dobell full-period test for power-of-two moduli: c odd and a = 1 mod 4.
// Throws std::invalid_argument when m is not a power of two >= 4.
bool hull_dobell_check(uint64_t a, uint64_t c, uint64_t m);

// Counts of Hull-Dobell-valid multipliers (m/4) and increments (m/2).
uint64_t valid_multiplier_count(int state_bits);
uint64_t valid_increment_count(int state_bits);

// n_a multipliers and n_c increments sampled uniformly without replacement
// from the valid sets (a = 4t+1, c = 2t+1), deterministically from seed.
// Throws when a requested count exceeds the population.
struct ParamSample {
    std::vector<uint64_t> multipliers;
    std::vector<uint64_t> increments;
};
ParamSample enumerate_valid_params(int state_bits, uint64_t n_a, uint64_t n_c, uint64_t seed);

// Outputs x_1..x_length where x_i = f(s_i), s_i the state after i steps from s0.
std::vector<uint64_t> generate_sequence(const GeneratorSpec& spec, uint64_t s0, size_t length);

// Period of the low k state bits along the full cycle. Must equal 2^k for
// Hull-Dobell parameters. Refuses state_bits > 24 (the walk visits 2^state_bits
// states).
uint64_t measure_bit_period(const GeneratorSpec& spec, int bit_index);

// Orbit length of the state recurrence starting from s0 (walks until s0 recurs).
uint64_t orbit_length(const GeneratorSpec& spec, uint64_t s0);

} // namespace pcglab
