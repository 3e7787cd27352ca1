#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcglab/tensor.hpp"

namespace pcglab {

// Decoder-only transformer shape. Pre-norm blocks, RoPE attention, MLP ratio 4,
// gain-only (RMS) norms, no biases, untied embedding / output head.
struct ModelConfig {
    int n_layers = 4;
    int n_heads = 8;
    int d_model = 1024;
    int vocab = 256;
    int context = 512;
    int mlp_ratio = 4;
    double rope_base = 10000.0;

    int head_dim() const { return d_model / n_heads; }
    int d_hidden() const { return d_model * mlp_ratio; }
    size_t param_count() const;
    void validate() const; // throws std::invalid_argument on inconsistent shapes

    bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct LayerParams {
    std::vector<T> attn_norm_gain; // d
    Mat<T> wq, wk, wv, wo;         // d x d
    std::vector<T> mlp_norm_gain;  // d
    Mat<T> w1;                     // d x 4d
    Mat<T> w2;                     // 4d x d
};

template <typename T>
struct ModelParams {
    ModelConfig config;
    Mat<T> embedding;               // vocab x d
    std::vector<LayerParams<T>> layers;
    std::vector<T> final_norm_gain; // d
    Mat<T> lm_head;                 // vocab x d (rows are vocab entries)
};

// Visits every parameter tensor in serialization order:
// embedding, then per layer (attn_norm_gain, wq, wk, wv, wo, mlp_norm_gain,
// w1, w2), then final_norm_gain, lm_head.
template <typename T, typename Fn>
void for_each_tensor(ModelParams<T>& p, Fn&& fn) {
    fn("embedding", p.embedding.v);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        auto& lay = p.layers[l];
        const std::string tag = "layer" + std::to_string(l) + ".";
        fn(tag + "attn_norm_gain", lay.attn_norm_gain);
        fn(tag + "wq", lay.wq.v);
        fn(tag + "wk", lay.wk.v);
        fn(tag + "wv", lay.wv.v);
        fn(tag + "wo", lay.wo.v);
        fn(tag + "mlp_norm_gain", lay.mlp_norm_gain);
        fn(tag + "w1", lay.w1.v);
        fn(tag + "w2", lay.w2.v);
    }
    fn("final_norm_gain", p.final_norm_gain);
    fn("lm_head", p.lm_head.v);
}

template <typename T>
ModelParams<T> alloc_params(const ModelConfig& cfg);

// Deterministic init: normal(0, 0.02) matrices, ones for norm gains.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed);

// Standalone rotary transform of one head_dim-sized vector at `position`.
// Pair (2j, 2j+1) is rotated by position * rope_base^(-2j/head_dim).
template <typename T>
void rope_apply(T* vec, int head_dim, int position, double rope_base);

// (layer, head) pairs whose value-projection output is zeroed before the
// attention output projection.
struct AblationMask {
    std::vector<std::pair<int, int>> heads;
    bool hits(int layer, int head) const {
        for (auto& [l, h] : heads)
            if (l == layer && h == head) return true;
        return false;
    }
};

struct CaptureSpec {
    bool activations = true; // embedding output + per-layer attention/MLP outputs
    bool attention = false;  // per-layer, per-head attention weights
};

// Per-sequence probe record. Activation matrices are positions x d_model;
// attention weights are one L x L lower-triangular matrix per (layer, head).
struct ActivationTrace {
    Mat<float> embed_out;
    std::vector<Mat<float>> attn_out; // per layer
    std::vector<Mat<float>> mlp_out;  // per layer
    std::vector<std::vector<Mat<float>>> attn_weights; // [layer][head]
};

// Scratch + saved activations for one forward/backward. Allocated once for a
// (batch, length) shape and reused across steps.
template <typename T>
struct Workspace {
    int B = 0, L = 0;
    ModelConfig cfg;
    Mat<T> rope_cos, rope_sin; // context x head_dim/2

    Mat<T> x;       // (B*L) x d, running residual stream
    Mat<T> logits;  // (B*L) x vocab
    struct LayerCache {
        Mat<T> x_in;    // residual entering the block
        Mat<T> normed;  // attention-norm output
        std::vector<T> rstd_attn;
        Mat<T> q, k, vv;    // rotated q/k and raw v, head-major (B*heads*L) x head_dim
        Mat<T> probs;       // attention weights, (B*heads*L) x L
        Mat<T> att_concat;  // pre-output-projection head concat, (B*L) x d
        Mat<T> x_mid;       // residual entering the MLP
        Mat<T> normed2;
        std::vector<T> rstd_mlp;
        Mat<T> pre;  // (B*L) x 4d
        Mat<T> act;  // gelu(pre)
    };
    std::vector<LayerCache> layer;
    Mat<T> final_normed;
    std::vector<T> rstd_final;

    // backward scratch
    Mat<T> d_x, d_tmp, d_q, d_k, d_v, d_concat, d_pre, d_act, d_probs;
    Mat<T> head_a, head_b; // head-major scratch, (B*heads*L) x head_dim
    Mat<T> w_t;            // transposed-weight scratch for input-gradient products

    void configure(const ModelConfig& cfg, int batch, int length);
};

// Causal forward pass over a token batch (row-major B x L). Logits land in
// ws.logits, one row per (batch, position). Throws on token ids >= vocab or
// length > context. `trace` (single sequence only, B == 1) records probes.
template <typename T>
void forward(const ModelParams<T>& params, const int* tokens, int B, int L, Workspace<T>& ws,
             const AblationMask* ablation = nullptr, const CaptureSpec* capture = nullptr,
             ActivationTrace* trace = nullptr);

// Mean cross-entropy of ws.logits against targets (B x L), plus per-position
// means over the batch when requested.
template <typename T>
T cross_entropy(const Workspace<T>& ws, const int* targets,
                std::vector<T>* per_position = nullptr);

// Exact reverse-mode gradients of the mean loss. Requires the workspace state
// produced by the immediately preceding forward() on the same tokens.
template <typename T>
void backward(const ModelParams<T>& params, const int* tokens, const int* targets, int B, int L,
              Workspace<T>& ws, ModelParams<T>& grads, const AblationMask* ablation = nullptr);

// Copies all weights into a (possibly larger-vocab) target config; overlapping
// embedding and lm_head rows are copied bit-exactly, new rows drawn fresh.
// Throws when anything but vocab/context differs.
ModelParams<float> transfer_embeddings(const ModelParams<float>& src, const ModelConfig& tgt_cfg,
                                       uint64_t seed);

// AdamW moment accumulators, stored in for_each_tensor order.
struct OptState {
    uint64_t step = 0;
    std::vector<std::vector<float>> m, v;
};

// Checkpoint file ("PCGM"): config, parameter tensors in declaration order as
// little-endian f32, optimizer state appended when present.
void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const OptState* opt = nullptr);
struct Checkpoint {
    ModelParams<float> params;
    std::optional<OptState> opt;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace pcglab
