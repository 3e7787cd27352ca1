#include "pcglab/generators.hpp"

#include <bit>
#include <stdexcept>
#include <unordered_map>

#include "pcglab/rng.hpp"

namespace pcglab {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Tlcg: return "tlcg";
        case Variant::Xslrr: return "xslrr";
        case Variant::Xshrr: return "xshrr";
        case Variant::Xshrs: return "xshrs";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "tlcg") return Variant::Tlcg;
    if (name == "xslrr") return Variant::Xslrr;
    if (name == "xshrr") return Variant::Xshrr;
    if (name == "xshrs") return Variant::Xshrs;
    throw std::invalid_argument("unknown generator variant: " + name);
}

std::string GeneratorSpec::name() const {
    std::string s = variant_name(variant);
    s += "-" + std::to_string(state_bits) + "/" + std::to_string(output_bits);
    if (control_bits > 0) s += "cb" + std::to_string(control_bits);
    return s;
}

void validate_spec(const GeneratorSpec& spec) {
    if (spec.state_bits < 8 || spec.state_bits > 64)
        throw std::invalid_argument("state_bits must be in [8, 64]");
    if (spec.output_bits < 1 || spec.output_bits > spec.state_bits)
        throw std::invalid_argument("output_bits must be in [1, state_bits]");
    const int n = spec.output_bits;
    const int cb = spec.control_bits;
    switch (spec.variant) {
        case Variant::Tlcg:
            if (cb != 0) throw std::invalid_argument("TLCG has no control bits");
            break;
        case Variant::Xslrr:
            if (n * 2 != spec.state_bits)
                throw std::invalid_argument("XSLRR requires output_bits = state_bits/2");
            if (cb < 0 || cb > n) throw std::invalid_argument("XSLRR control_bits out of range");
            break;
        case Variant::Xshrr:
            if (cb < 0 || cb > n || n + cb > spec.state_bits)
                throw std::invalid_argument("XSHRR requires control_bits <= output_bits and "
                                            "output_bits + control_bits <= state_bits");
            break;
        case Variant::Xshrs: {
            if (cb < 0 || n + cb > spec.state_bits)
                throw std::invalid_argument("XSHRS requires output_bits + control_bits <= state_bits");
            // The xorshift amount n - cb - 2^cb + 1 must stay non-negative so the
            // shifted output window stays inside the state.
            long long slack = static_cast<long long>(spec.state_bits) - n - cb - ((1LL << cb) - 1);
            if (slack < 0)
                throw std::invalid_argument("XSHRS control bits too large for this output width");
            break;
        }
    }
}

bool hull_dobell_check(uint64_t a, uint64_t c, uint64_t m) {
    if (m < 4 || !std::has_single_bit(m))
        throw std::invalid_argument("modulus must be a power of two >= 4");
    // For m = 2^K the three Hull-Dobell conditions reduce to: c odd, a = 1 mod 4.
    return (c & 1) == 1 && (a & 3) == 1;
}

uint64_t valid_multiplier_count(int state_bits) { return 1ULL << (state_bits - 2); }
uint64_t valid_increment_count(int state_bits) { return 1ULL << (state_bits - 1); }

namespace {

// Partial Fisher-Yates over an implicit index range [0, pop) using a sparse
// swap map, so sampling n of 2^62 costs O(n) memory.
std::vector<uint64_t> sample_without_replacement(uint64_t pop, uint64_t n, Rng& rng) {
    std::unordered_map<uint64_t, uint64_t> swapped;
    std::vector<uint64_t> out;
    out.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        uint64_t j = i + rng.next_below(pop - i);
        auto it_j = swapped.find(j);
        uint64_t value_j = it_j == swapped.end() ? j : it_j->second;
        auto it_i = swapped.find(i);
        uint64_t value_i = it_i == swapped.end() ? i : it_i->second;
        swapped[j] = value_i;
        out.push_back(value_j);
    }
    return out;
}

} // namespace

ParamSample enumerate_valid_params(int state_bits, uint64_t n_a, uint64_t n_c, uint64_t seed) {
    if (state_bits < 2 || state_bits > 64)
        throw std::invalid_argument("state_bits out of range");
    const uint64_t pop_a = valid_multiplier_count(state_bits);
    const uint64_t pop_c = valid_increment_count(state_bits);
    if (n_a > pop_a)
        throw std::invalid_argument("requested multipliers exceed valid population (" +
                                    std::to_string(pop_a) + ")");
    if (n_c > pop_c)
        throw std::invalid_argument("requested increments exceed valid population (" +
                                    std::to_string(pop_c) + ")");
    Rng rng(seed);
    Rng rng_a = rng.fork(1);
    Rng rng_c = rng.fork(2);
    ParamSample s;
    s.multipliers = sample_without_replacement(pop_a, n_a, rng_a);
    s.increments = sample_without_replacement(pop_c, n_c, rng_c);
    for (auto& t : s.multipliers) t = 4 * t + 1;
    for (auto& t : s.increments) t = 2 * t + 1;
    return s;
}

std::vector<uint64_t> generate_sequence(const GeneratorSpec& spec, uint64_t s0, size_t length) {
    validate_spec(spec);
    std::vector<uint64_t> out;
    out.reserve(length);
    uint64_t s = s0 & spec.state_mask();
    for (size_t i = 0; i < length; ++i) {
        s = lcg_step(s, spec);
        out.push_back(permute_output_unchecked(s, spec));
    }
    return out;
}

uint64_t orbit_length(const GeneratorSpec& spec, uint64_t s0) {
    s0 &= spec.state_mask();
    uint64_t s = lcg_step(s0, spec);
    uint64_t len = 1;
    while (s != s0) {
        s = lcg_step(s, spec);
        ++len;
    }
    return len;
}

uint64_t measure_bit_period(const GeneratorSpec& spec, int bit_index) {
    if (spec.state_bits > 24)
        throw std::invalid_argument("cycle walk refused for state_bits > 24");
    if (bit_index < 1 || bit_index > spec.state_bits)
        throw std::invalid_argument("bit_index must be in [1, state_bits]");
    const uint64_t low_mask = (1ULL << bit_index) - 1;

    // Collect the low-bit trace over one full state cycle, then report the
    // smallest power-of-two period (the trace period divides the cycle length,
    // a power of two).
    std::vector<uint64_t> trace;
    trace.reserve(spec.modulus());
    uint64_t s0 = 1, s = s0;
    do {
        trace.push_back(s & low_mask);
        s = lcg_step(s, spec);
    } while (s != s0);

    const uint64_t cycle = trace.size();
    for (uint64_t p = 1; p <= cycle; p *= 2) {
        bool ok = true;
        for (uint64_t t = 0; t + p < cycle && ok; ++t)
            ok = trace[t] == trace[t + p];
        if (ok) return p;
    }
    return cycle;
}

} // namespace pcglab
