#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcglab/dataset.hpp"
#include "pcglab/evaluation.hpp"
#include "pcglab/model.hpp"
#include "pcglab/tensor.hpp"

namespace pcglab {

// Rotation-invariant description of a token's binary form: the multiset of
// zero-run lengths between 1-bits, read cyclically.
struct ZeroRunSignature {
    int width = 0;
    std::vector<int> runs; // sorted descending
    bool all_ones = false;
    bool all_zeros = false;

    int n0() const; // total zero bits
    int run_count() const { return static_cast<int>(runs.size()); }
    std::string to_string() const; // "Z(3,1)", "all-ones", "all-zeros"
    bool operator==(const ZeroRunSignature&) const = default;
};

ZeroRunSignature zero_run_signature(uint64_t token, int width);

// Partition of all width-bit tokens by (run count, zero count), specials
// first. Ids are 1-based; at width 8 the numbering matches the published
// XSLRR-16/8 cluster table (all-ones, all-zeros, then single-run clusters by
// zero count, and so on).
struct TokenClusters {
    int width = 0;
    std::vector<int> cluster_of;                // token -> cluster id
    std::vector<std::vector<uint32_t>> members; // [id-1] -> token list
    std::vector<std::string> labels;            // [id-1] -> "Z(3,1)|Z(2,2)" style
    int count() const { return static_cast<int>(members.size()); }
};
TokenClusters cluster_tokens(int width);

// Exact PCA by symmetric eigendecomposition of the covariance matrix.
struct PcaResult {
    Mat<double> components;                  // k x dims, orthonormal rows
    std::vector<double> explained_variance;  // descending
    Mat<double> projections;                 // rows x k
    std::vector<double> mean;                // column means
    bool rank_deficient = false;             // fewer useful components than asked
};
PcaResult pca(const Mat<double>& data, int k);
PcaResult pca(const Mat<float>& data, int k);

// Spearman rank correlation magnitude between one projection column and a
// per-token feature. Throws when either side is constant.
double pc_feature_correlation(const std::vector<double>& projection,
                              const std::vector<double>& feature);

// 1 - mean pairwise cosine similarity between per-variant mean vectors.
double generator_separation(const std::vector<std::vector<double>>& mean_vectors);

// Per-sequence mean activations per probe point, averaged over eval rows of
// every spec group. Probes: embedding output, each layer's attention output,
// each layer's MLP output.
struct MeanActivations {
    std::vector<std::string> group_names;
    std::vector<std::string> probe_names;
    std::vector<std::vector<Mat<float>>> mean; // [group][probe] L x d
    int positions = 0;
};
MeanActivations mean_activations(const ModelParams<float>& params, const DatasetFile& test,
                                 int n_eval);

// Distance histogram of the top_k most-attended keys per query (distance 0
// excluded), accumulated over positions and heads, one histogram per layer.
// accumulate_attention_distances adds raw counts; the dataset-level wrapper
// averages over sequences and normalizes to percentages.
void accumulate_attention_distances(const ActivationTrace& trace, int top_k,
                                    std::vector<std::vector<double>>& counts_per_layer);
struct DistanceHistogram {
    std::vector<double> percent; // index d-1 holds distance d in [1, L-1]
};
std::vector<DistanceHistogram> attention_distance_histogram(const ModelParams<float>& params,
                                                            const DatasetFile& test, int n_eval,
                                                            int top_k = 8);

// Accuracy change at one position when zeroing each head's value slice:
// delta[(layer, head)][group] = ablated accuracy - baseline accuracy.
struct AblationSweep {
    std::vector<std::string> groups;
    std::vector<double> baseline; // per group, accuracy at `position`
    int n_layers = 0, n_heads = 0;
    std::vector<std::vector<double>> delta; // [layer*n_heads + head][group]
};
AblationSweep head_ablation_sweep(const ModelParams<float>& params, const DatasetFile& test,
                                  int position, int n_eval);

} // namespace pcglab
