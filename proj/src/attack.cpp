#include "pcglab/attack.hpp"

#include <bit>
#include <stdexcept>

#include "pcglab/kernels.hpp"

namespace pcglab {

int min_outputs_bound(uint64_t m) {
    if (m < 4 || !std::has_single_bit(m))
        throw std::invalid_argument("modulus must be a power of two >= 4");
    const uint64_t K = static_cast<uint64_t>(std::countr_zero(m));
    // bits to pin down: (K-2) for a, (K-1) for c, K/2 for the state; each
    // output reveals K/2 bits. Doubling clears the halves exactly.
    const uint64_t num = 2 * ((K - 2) + (K - 1)) + K;
    const uint64_t den = K;
    return static_cast<int>((num + den - 1) / den);
}

CandidateSet recover(const GeneratorSpec& spec_template, const std::vector<uint64_t>& outputs,
                     bool override_guard) {
    GeneratorSpec tmpl = spec_template;
    tmpl.multiplier = 1;
    tmpl.increment = 1;
    validate_spec(tmpl);
    if (tmpl.state_bits > 14 && !override_guard)
        throw std::invalid_argument(
            "state_bits > 14 makes the candidate space very large; pass the size-guard override "
            "to proceed");

    const uint64_t m = tmpl.modulus();
    const uint64_t n_a = valid_multiplier_count(tmpl.state_bits);
    const uint64_t n_c = valid_increment_count(tmpl.state_bits);

    CandidateSet set;
    set.total_candidates = n_a * n_c * m;
    if (outputs.empty()) return set;
    set.materialized = true;
    set.exhausted = true;

    // independent shard per multiplier; merged in multiplier order
    std::vector<std::vector<CandidateTriple>> shards(n_a);
#pragma omp parallel for schedule(dynamic, 4) num_threads(kernels::threads())
    for (long long ai = 0; ai < static_cast<long long>(n_a); ++ai) {
        GeneratorSpec g = tmpl;
        g.multiplier = 4 * static_cast<uint64_t>(ai) + 1;
        auto& local = shards[ai];
        for (uint64_t ci = 0; ci < n_c; ++ci) {
            g.increment = 2 * ci + 1;
            for (uint64_t s0 = 0; s0 < m; ++s0) {
                uint64_t s = s0;
                bool alive = true;
                for (size_t t = 0; t < outputs.size(); ++t) {
                    s = lcg_step(s, g);
                    if (permute_output_unchecked(s, g) != outputs[t]) {
                        alive = false;
                        break;
                    }
                }
                if (alive) local.push_back({g.multiplier, g.increment, s0});
            }
        }
    }
    for (auto& shard : shards)
        set.survivors.insert(set.survivors.end(), shard.begin(), shard.end());
    return set;
}

std::vector<uint64_t> predict_continuation(const CandidateTriple& candidate,
                                           const GeneratorSpec& spec_template, size_t n_observed,
                                           size_t steps) {
    GeneratorSpec g = spec_template;
    g.multiplier = candidate.a;
    g.increment = candidate.c;
    validate_spec(g);
    uint64_t s = candidate.s0 & g.state_mask();
    for (size_t t = 0; t < n_observed; ++t) s = lcg_step(s, g);
    std::vector<uint64_t> out;
    out.reserve(steps);
    for (size_t t = 0; t < steps; ++t) {
        s = lcg_step(s, g);
        out.push_back(permute_output_unchecked(s, g));
    }
    return out;
}

int per_output_op_count(Variant v) {
    // multiply + add for the recurrence (power-of-two reduction is free), then
    // the permutation: shifts, XORs and rotation/window arithmetic.
    switch (v) {
        case Variant::Tlcg: return 2 + 1;
        case Variant::Xslrr: return 2 + 4; // control shift, xor-shift, xor, rotate
        case Variant::Xshrr: return 2 + 5;
        case Variant::Xshrs: return 2 + 4;
    }
    return 2;
}

} // namespace pcglab
