#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pcglab/generators.hpp"

namespace pcglab {

// One (multiplier, increment, initial state) guess.
struct CandidateTriple {
    uint64_t a = 0, c = 0, s0 = 0;
    auto operator<=>(const CandidateTriple&) const = default;
};

// Survivors of guess-and-filter recovery. When `materialized` is false no
// filtering ran (zero observed outputs) and only the space size is reported.
struct CandidateSet {
    std::vector<CandidateTriple> survivors; // sorted by (a, c, s0)
    uint64_t total_candidates = 0;          // (m/4) * (m/2) * m
    bool materialized = false;
    bool exhausted = false; // enumeration covered the full space
};

// Information-theoretic minimum observation count:
// ceil((log2(m/4) + log2(m/2) + log2 sqrt(m)) / log2 sqrt(m)).
int min_outputs_bound(uint64_t m);

// Exhaustive enumeration of Hull-Dobell-valid (a, c) and all s0, keeping the
// triples whose simulated outputs reproduce every observation. Early exit per
// candidate at the first mismatch; shards over multipliers in parallel and
// merges deterministically. Refuses state_bits > 14 unless override_guard.
CandidateSet recover(const GeneratorSpec& spec_template, const std::vector<uint64_t>& outputs,
                     bool override_guard = false);

// Next `steps` outputs of a candidate after it has consumed n_observed values.
std::vector<uint64_t> predict_continuation(const CandidateTriple& candidate,
                                           const GeneratorSpec& spec_template, size_t n_observed,
                                           size_t steps);

// Integer operations per simulated output under the cost accounting used for
// the brute-force baseline (2 for the recurrence, the rest for the permutation).
int per_output_op_count(Variant v);

} // namespace pcglab
