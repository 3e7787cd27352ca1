#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcglab/dataset.hpp"
#include "pcglab/model.hpp"

namespace pcglab {

// Accuracy by prediction position for one spec group. Position i (1-indexed)
// is the prediction of value x_i given x_0..x_{i-1}; with multi-digit
// tokenization a value counts as correct only when every digit is correct.
struct AccuracyCurve {
    std::string source;
    std::vector<double> accuracy; // index p-1 holds position p, p in [1, L]
    size_t n_sequences = 0;
};

struct GroupEval {
    std::string source;
    double mean_loss = 0.0; // token-level cross entropy
    AccuracyCurve curve;
};

// Teacher-forced evaluation of every spec group in a test set. n_eval limits
// the sequences per group (0 = all); rows are taken from the start of each
// group so the held-out subset is fixed across a run.
std::vector<GroupEval> evaluate_dataset(const ModelParams<float>& params, const DatasetFile& test,
                                        int n_eval = 0, const AblationMask* ablation = nullptr,
                                        int batch_size = 16);

std::vector<AccuracyCurve> accuracy_by_position(const ModelParams<float>& params,
                                                const DatasetFile& test, int n_eval = 0);

// Crossing thresholds: absolute value; additive eps + 1/sqrt(m); multiplicative
// gamma / sqrt(m).
struct ThresholdRule {
    enum class Kind { Absolute, Additive, Multiplicative };
    Kind kind = Kind::Absolute;
    double value = 0.9;

    double threshold(uint64_t m) const;
    static ThresholdRule parse(const std::string& text); // "abs:0.9" | "add:0.05" | "mul:2"
    std::string to_string() const;
};

// Smallest 1-indexed position with accuracy strictly above the threshold.
std::optional<int> first_crossing(const AccuracyCurve& curve, const ThresholdRule& rule,
                                  uint64_t m);

// Least-squares line on (log m, log index): index ~ coefficient * m^exponent.
struct ScalingFit {
    double exponent = 0.0;
    double coefficient = 0.0;
    double residual = 0.0; // sum of squared log-space residuals
};
ScalingFit fit_power_law(const std::vector<std::pair<double, double>>& points);

// Per-sequence inference cost split by component:
//   attn    (4 L d^2 + 2 L^2 d) n_layer
//   mlp     8 L d^2 n_layer
//   norm    2 L d n_layer
//   lm_head L d |V|
// Embedding lookup costs nothing.
struct FlopsBreakdown {
    uint64_t attn = 0, mlp = 0, norm = 0, lm_head = 0, total = 0;
};
FlopsBreakdown inference_flops(const ModelConfig& cfg, uint64_t L);

// Forward plus backward, the standard 3x estimate.
uint64_t training_flops(const FlopsBreakdown& per_seq, uint64_t batch_size, uint64_t steps);

// Brute-force baseline (m/4)(m/2) sqrt(m) * 5 * 6 = 3.75 m^2.5.
double brute_force_ops(uint64_t m);

} // namespace pcglab
