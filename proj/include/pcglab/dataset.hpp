#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcglab/generators.hpp"
#include "pcglab/rng.hpp"

namespace pcglab {

enum class TokenScheme : uint16_t {
    Direct = 0, // one token per value, vocabulary 2^k
    BaseB = 1,  // fixed-width big-endian digits in a smaller base
};

struct Tokenization {
    TokenScheme scheme = TokenScheme::Direct;
    int base = 0;   // digit base (BaseB only)
    int digits = 1; // tokens per value
    int vocab = 0;  // token id range

    bool operator==(const Tokenization&) const = default;
};

// Direct: vocab 2^k, one digit. BaseB: vocab = base, ceil(k / log2 base)
// digits (two base-256 digits for k > 8, one for k <= 8, and so on).
Tokenization make_tokenization(int output_bits, TokenScheme scheme, int base = 256);

// Big-endian digit expansion of one generator output. Throws when the value
// does not fit output_bits.
std::vector<uint32_t> tokenize_value(uint64_t value, int output_bits, const Tokenization& tok);
uint64_t detokenize_value(const uint32_t* digits, const Tokenization& tok);

// Ground-truth provenance of one dataset row, stored in the "PCGI" sidecar.
struct RowInfo {
    uint16_t spec_id = 0;
    uint64_t a = 0, c = 0, s0 = 0;
};

struct SpecGroup {
    GeneratorSpec spec; // multiplier/increment fields are zero (template only)
    uint64_t row_begin = 0;
    uint64_t row_count = 0;
};

// Materialized token sequences, one row per (a, c) pair, grouped by the
// originating generator spec.
struct DatasetFile {
    uint16_t version = 1;
    std::vector<SpecGroup> groups;
    uint32_t seq_len = 0; // values per row (L + 1)
    uint64_t n_seqs = 0;
    uint32_t vocab = 0;
    Tokenization tok;
    std::vector<uint32_t> tokens;
    std::vector<RowInfo> index;

    size_t row_tokens() const { return static_cast<size_t>(seq_len) * tok.digits; }
    const uint32_t* row(size_t r) const { return tokens.data() + r * row_tokens(); }
    uint32_t* row(size_t r) { return tokens.data() + r * row_tokens(); }
};

// "PCGD" + "PCGI" pair; the sidecar path is the dataset path with extension
// swapped to .pcgi.
void save_dataset(const std::string& path, const DatasetFile& ds);
DatasetFile load_dataset(const std::string& path, bool with_index = true);

struct SplitSpec {
    uint64_t n_a = 0, n_c = 0;           // train grid
    uint64_t n_test_a = 0, n_test_c = 0; // held-out grid, disjoint values
    uint64_t seed = 0;
};

// One sequence per (a, c) pair for every template; the combined setting passes
// several templates (all with the same output width). Test rows use multiplier
// and increment values never seen in training rows.
struct BuildResult {
    DatasetFile train;
    DatasetFile test;
};
BuildResult build_dataset(const std::vector<GeneratorSpec>& templates, const SplitSpec& split,
                          uint32_t seq_len, TokenScheme scheme = TokenScheme::Direct,
                          int base = 256);

// Re-derives a sample of rows from the recorded (spec, a, c, s0) and checks the
// stored tokens. Fraction in (0, 1]; throws on the first mismatch.
void verify_rows(const DatasetFile& ds, double fraction, uint64_t seed);

// Per-source mixing-probability schedule.
enum class Decay : uint8_t { None = 0, Linear, Cosine, Exponential, Step };
Decay decay_from_name(const std::string& name);
const char* decay_name(Decay d);

struct CurriculumSource {
    std::string path; // dataset file reference
    double alpha0 = 0.0;
};

struct CurriculumSchedule {
    std::vector<CurriculumSource> sources;
    Decay decay = Decay::None;
    uint64_t decay_steps = 0;
};

// alpha_i(t) for every source. Decaying schedules reach exactly zero at
// decay_steps: linear a0(1-t/T); cosine a0(1+cos(pi t/T))/2; exponential
// a0 r^t with r chosen so a(T) = 1e-4 a0; step halves across four equal
// plateaus. Decay::None holds alpha0 forever.
std::vector<double> curriculum_alpha(const CurriculumSchedule& sched, uint64_t step);

// Shuffled pass over [0, n); reshuffles at the start of every epoch.
class EpochCursor {
public:
    EpochCursor(size_t n, uint64_t seed);
    size_t next();
    uint64_t epoch() const { return epoch_; }

private:
    std::vector<uint32_t> order_;
    size_t pos_ = 0;
    uint64_t epoch_ = 0;
    Rng rng_;
};

// Draws training batches: each row comes from curriculum source i with
// probability alpha_i(step), otherwise from the target dataset. Every dataset
// advances through its own epoch cursor; curriculum draws never advance the
// target cursor.
class BatchSampler {
public:
    BatchSampler(const DatasetFile* target, std::vector<const DatasetFile*> sources,
                 CurriculumSchedule schedule, uint64_t seed);

    struct BatchInfo {
        std::vector<size_t> rows_per_source;
        size_t rows_from_target = 0;
    };

    // Fills batch_size rows of row_tokens() ints each.
    BatchInfo sample(uint64_t step, int batch_size, std::vector<int>& out_tokens);

    size_t row_tokens() const { return target_->row_tokens(); }
    const CurriculumSchedule& schedule() const { return schedule_; }

private:
    const DatasetFile* target_;
    std::vector<const DatasetFile*> sources_;
    CurriculumSchedule schedule_;
    Rng rng_;
    EpochCursor target_cursor_;
    std::vector<EpochCursor> source_cursors_;
};

} // namespace pcglab
