#include "pcglab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <type_traits>

#include "pcglab/kernels.hpp"
#include "pcglab/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint and dataset formats assume a little-endian host");

namespace pcglab {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)

template <typename T>
inline T gelu(T x) {
    T u = T(kGeluC) * (x + T(0.044715) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
inline T gelu_grad(T x) {
    T x2 = x * x;
    T u = T(kGeluC) * (x + T(0.044715) * x * x2);
    T th = std::tanh(u);
    T sech2 = T(1) - th * th;
    return T(0.5) * (T(1) + th) + T(0.5) * x * sech2 * T(kGeluC) * (T(1) + T(3) * T(0.044715) * x2);
}

// y = x * gain / rms(x) row-wise; rstd kept for the backward pass.
template <typename T>
void rmsnorm_forward(Mat<T>& out, std::vector<T>& rstd, const Mat<T>& in,
                     const std::vector<T>& gain) {
    const int R = in.rows, d = in.cols;
    rstd.resize(R);
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < R; ++r) {
        const T* x = in.row(r);
        T ms = T(0);
        for (int j = 0; j < d; ++j) ms += x[j] * x[j];
        ms /= T(d);
        const T rs = T(1) / std::sqrt(ms + T(kNormEps));
        rstd[r] = rs;
        T* y = out.row(r);
        for (int j = 0; j < d; ++j) y[j] = x[j] * rs * gain[j];
    }
}

// d_in += backward of rmsnorm; d_gain accumulated serially afterwards so the
// parameter gradient stays reduction-order deterministic.
template <typename T>
void rmsnorm_backward(Mat<T>& d_in, std::vector<T>& d_gain, const Mat<T>& d_out, const Mat<T>& in,
                      const std::vector<T>& rstd, const std::vector<T>& gain) {
    const int R = in.rows, d = in.cols;
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < R; ++r) {
        const T* x = in.row(r);
        const T* dy = d_out.row(r);
        T* dx = d_in.row(r);
        const T rs = rstd[r];
        T dot = T(0);
        for (int j = 0; j < d; ++j) dot += dy[j] * gain[j] * x[j];
        const T coef = dot * rs * rs * rs / T(d);
        for (int j = 0; j < d; ++j) dx[j] += dy[j] * gain[j] * rs - x[j] * coef;
    }
    for (int r = 0; r < R; ++r) {
        const T* x = in.row(r);
        const T* dy = d_out.row(r);
        const T rs = rstd[r];
        for (int j = 0; j < d; ++j) d_gain[j] += dy[j] * x[j] * rs;
    }
}

template <typename T>
void add_inplace(Mat<T>& acc, const Mat<T>& other) {
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < acc.rows; ++r) {
        T* a = acc.row(r);
        const T* b = other.row(r);
        for (int j = 0; j < acc.cols; ++j) a[j] += b[j];
    }
}

} // namespace

size_t ModelConfig::param_count() const {
    size_t d = d_model, h = d_hidden(), V = vocab;
    size_t per_layer = 2 * d + 4 * d * d + d * h + h * d;
    return V * d + static_cast<size_t>(n_layers) * per_layer + d + V * d;
}

void ModelConfig::validate() const {
    if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0)
        throw std::invalid_argument("d_model must be a multiple of n_heads");
    if (head_dim() % 2 != 0) throw std::invalid_argument("head_dim must be even for RoPE");
    if (vocab < 2) throw std::invalid_argument("vocab must be >= 2");
    if (context < 1) throw std::invalid_argument("context must be >= 1");
    if (mlp_ratio < 1) throw std::invalid_argument("mlp_ratio must be >= 1");
    if (rope_base <= 1.0) throw std::invalid_argument("rope_base must be > 1");
}

template <typename T>
ModelParams<T> alloc_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams<T> p;
    p.config = cfg;
    p.embedding.assign(cfg.vocab, cfg.d_model);
    p.layers.resize(cfg.n_layers);
    for (auto& l : p.layers) {
        l.attn_norm_gain.assign(cfg.d_model, T(0));
        l.wq.assign(cfg.d_model, cfg.d_model);
        l.wk.assign(cfg.d_model, cfg.d_model);
        l.wv.assign(cfg.d_model, cfg.d_model);
        l.wo.assign(cfg.d_model, cfg.d_model);
        l.mlp_norm_gain.assign(cfg.d_model, T(0));
        l.w1.assign(cfg.d_model, cfg.d_hidden());
        l.w2.assign(cfg.d_hidden(), cfg.d_model);
    }
    p.final_norm_gain.assign(cfg.d_model, T(0));
    p.lm_head.assign(cfg.vocab, cfg.d_model);
    return p;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed) {
    ModelParams<T> p = alloc_params<T>(cfg);
    Rng rng(seed);
    for_each_tensor(p, [&](const std::string& name, std::vector<T>& t) {
        const bool is_gain = name.find("norm_gain") != std::string::npos;
        for (auto& x : t) x = is_gain ? T(1) : T(0.02 * rng.next_normal());
    });
    return p;
}

template <typename T>
void rope_apply(T* vec, int head_dim, int position, double rope_base) {
    for (int j = 0; j < head_dim / 2; ++j) {
        const double theta = position * std::pow(rope_base, -2.0 * j / head_dim);
        const T c = T(std::cos(theta)), s = T(std::sin(theta));
        const T a = vec[2 * j], b = vec[2 * j + 1];
        vec[2 * j] = a * c - b * s;
        vec[2 * j + 1] = a * s + b * c;
    }
}

template <typename T>
void Workspace<T>::configure(const ModelConfig& c, int batch, int length) {
    c.validate();
    if (length > c.context) throw std::invalid_argument("sequence longer than model context");
    cfg = c;
    B = batch;
    L = length;
    const int R = B * L, d = c.d_model, hd = c.head_dim(), H = c.n_heads, dh = c.d_hidden();

    rope_cos.assign(L, hd / 2);
    rope_sin.assign(L, hd / 2);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < hd / 2; ++j) {
            const double theta = i * std::pow(c.rope_base, -2.0 * j / hd);
            rope_cos.at(i, j) = T(std::cos(theta));
            rope_sin.at(i, j) = T(std::sin(theta));
        }

    x.assign(R, d);
    logits.assign(R, c.vocab);
    layer.resize(c.n_layers);
    for (auto& lc : layer) {
        lc.x_in.assign(R, d);
        lc.normed.assign(R, d);
        lc.q.assign(B * H * L, hd);
        lc.k.assign(B * H * L, hd);
        lc.vv.assign(B * H * L, hd);
        lc.probs.assign(B * H * L, L);
        lc.att_concat.assign(R, d);
        lc.x_mid.assign(R, d);
        lc.normed2.assign(R, d);
        lc.pre.assign(R, dh);
        lc.act.assign(R, dh);
    }
    final_normed.assign(R, d);

    d_x.assign(R, d);
    d_tmp.assign(R, d);
    d_q.assign(R, d);
    d_k.assign(R, d);
    d_v.assign(R, d);
    d_concat.assign(R, d);
    d_pre.assign(R, dh);
    d_act.assign(R, dh);
    d_probs.assign(B * H * L, L);
    head_a.assign(B * H * L, hd);
    head_b.assign(B * H * L, hd);
    const int mx = std::max({d, dh, c.vocab});
    w_t.assign(mx, mx);
}

namespace {

// rotary transform over head-major rows; row index (b*H + h)*L + i
template <typename T>
void rope_heads(Mat<T>& m, const Mat<T>& cos_t, const Mat<T>& sin_t, int L, int hd, bool inverse) {
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < m.rows; ++r) {
        const int i = r % L;
        const T* cs = cos_t.row(i);
        const T* sn = sin_t.row(i);
        T* v = m.row(r);
        for (int j = 0; j < hd / 2; ++j) {
            const T c = cs[j];
            const T s = inverse ? -sn[j] : sn[j];
            const T a = v[2 * j], b = v[2 * j + 1];
            v[2 * j] = a * c - b * s;
            v[2 * j + 1] = a * s + b * c;
        }
    }
}

// token-major [B*L x d] head slices <-> head-major [(B*H)*L x hd]
template <typename T>
void pack_heads(Mat<T>& dst, const Mat<T>& src, int /*B*/, int L, int H, int hd) {
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < dst.rows; ++r) {
        const int i = r % L;
        const int bh = r / L;
        const int b = bh / H, h = bh % H;
        std::memcpy(dst.row(r), src.row(b * L + i) + h * hd, sizeof(T) * hd);
    }
}

template <typename T>
void unpack_heads(Mat<T>& dst, const Mat<T>& src, int B, int L, int H, int hd) {
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < B * L; ++r) {
        const int b = r / L, i = r % L;
        T* row = dst.row(r);
        for (int h = 0; h < H; ++h)
            std::memcpy(row + h * hd, src.row((b * H + h) * L + i), sizeof(T) * hd);
    }
}

} // namespace

template <typename T>
void forward(const ModelParams<T>& params, const int* tokens, int B, int L, Workspace<T>& ws,
             const AblationMask* ablation, const CaptureSpec* capture, ActivationTrace* trace) {
    const ModelConfig& cfg = params.config;
    if (ws.B != B || ws.L != L || !(ws.cfg == cfg)) ws.configure(cfg, B, L);
    if (trace && B != 1) throw std::invalid_argument("activation capture expects a single sequence");
    const int R = B * L, d = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim();
    const T scale = T(1) / std::sqrt(T(hd));

    for (int r = 0; r < R; ++r) {
        const int t = tokens[r];
        if (t < 0 || t >= cfg.vocab) throw std::out_of_range("token id outside vocabulary");
        std::memcpy(ws.x.row(r), params.embedding.row(t), sizeof(T) * d);
    }
    if (trace) {
        trace->attn_out.assign(cfg.n_layers, {});
        trace->mlp_out.assign(cfg.n_layers, {});
        trace->attn_weights.assign(cfg.n_layers, {});
        if (capture == nullptr || capture->activations) {
            trace->embed_out.assign(L, d);
            if constexpr (std::is_same_v<T, float>) trace->embed_out.v = ws.x.v;
            else
                for (size_t idx = 0; idx < ws.x.size(); ++idx)
                    trace->embed_out.v[idx] = float(ws.x.v[idx]);
        }
    }

    for (int l = 0; l < cfg.n_layers; ++l) {
        auto& lc = ws.layer[l];
        const auto& lp = params.layers[l];
        lc.x_in.v = ws.x.v;
        rmsnorm_forward(lc.normed, lc.rstd_attn, lc.x_in, lp.attn_norm_gain);

        // projections land token-major in scratch, then repack per head
        kernels::matmul_nn(ws.d_tmp.data(), lc.normed.data(), lp.wq.data(), R, d, d);
        pack_heads(lc.q, ws.d_tmp, B, L, H, hd);
        kernels::matmul_nn(ws.d_tmp.data(), lc.normed.data(), lp.wk.data(), R, d, d);
        pack_heads(lc.k, ws.d_tmp, B, L, H, hd);
        kernels::matmul_nn(ws.d_tmp.data(), lc.normed.data(), lp.wv.data(), R, d, d);
        pack_heads(lc.vv, ws.d_tmp, B, L, H, hd);
        rope_heads(lc.q, ws.rope_cos, ws.rope_sin, L, hd, false);
        rope_heads(lc.k, ws.rope_cos, ws.rope_sin, L, hd, false);

        // scores for every (sequence, head) pair in one batched product
        kernels::batched_matmul_nt(lc.probs.data(), lc.q.data(), lc.k.data(), B * H,
                                   static_cast<size_t>(L) * L, static_cast<size_t>(L) * hd,
                                   static_cast<size_t>(L) * hd, L, hd, L);
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
        for (int row = 0; row < B * H * L; ++row) {
            const int i = row % L;
            T* prow = lc.probs.row(row);
            T maxv = -std::numeric_limits<T>::infinity();
            for (int j = 0; j <= i; ++j) {
                prow[j] *= scale;
                if (prow[j] > maxv) maxv = prow[j];
            }
            T denom = T(0);
            for (int j = 0; j <= i; ++j) {
                prow[j] = std::exp(prow[j] - maxv);
                denom += prow[j];
            }
            const T inv = T(1) / denom;
            for (int j = 0; j <= i; ++j) prow[j] *= inv;
            for (int j = i + 1; j < L; ++j) prow[j] = T(0);
        }
        kernels::batched_matmul_nn(ws.head_a.data(), lc.probs.data(), lc.vv.data(), B * H,
                                   static_cast<size_t>(L) * hd, static_cast<size_t>(L) * L,
                                   static_cast<size_t>(L) * hd, L, L, hd);
        unpack_heads(lc.att_concat, ws.head_a, B, L, H, hd);

        if (ablation) {
            for (auto& [al, ah] : ablation->heads) {
                if (al != l) continue;
                if (ah < 0 || ah >= H) throw std::invalid_argument("ablation head out of range");
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
                for (int r = 0; r < R; ++r) {
                    T* out = lc.att_concat.row(r) + ah * hd;
                    for (int e = 0; e < hd; ++e) out[e] = T(0);
                }
            }
        }

        kernels::matmul_nn(ws.d_tmp.data(), lc.att_concat.data(), lp.wo.data(), R, d, d);
        if (trace && (capture == nullptr || capture->activations)) {
            trace->attn_out[l].assign(L, d);
            for (size_t idx = 0; idx < ws.d_tmp.size(); ++idx)
                trace->attn_out[l].v[idx] = float(ws.d_tmp.v[idx]);
        }
        if (trace && capture && capture->attention) {
            trace->attn_weights[l].assign(H, {});
            for (int h = 0; h < H; ++h) {
                trace->attn_weights[l][h].assign(L, L);
                for (int i = 0; i < L; ++i)
                    for (int j = 0; j < L; ++j)
                        trace->attn_weights[l][h].at(i, j) = float(lc.probs.at(h * L + i, j));
            }
        }
        add_inplace(ws.x, ws.d_tmp);

        lc.x_mid.v = ws.x.v;
        rmsnorm_forward(lc.normed2, lc.rstd_mlp, lc.x_mid, lp.mlp_norm_gain);
        kernels::matmul_nn(lc.pre.data(), lc.normed2.data(), lp.w1.data(), R, d, cfg.d_hidden());
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
        for (int r = 0; r < R; ++r) {
            const T* in = lc.pre.row(r);
            T* out = lc.act.row(r);
            for (int j = 0; j < cfg.d_hidden(); ++j) out[j] = gelu(in[j]);
        }
        kernels::matmul_nn(ws.d_tmp.data(), lc.act.data(), lp.w2.data(), R, cfg.d_hidden(), d);
        if (trace && (capture == nullptr || capture->activations)) {
            trace->mlp_out[l].assign(L, d);
            for (size_t idx = 0; idx < ws.d_tmp.size(); ++idx)
                trace->mlp_out[l].v[idx] = float(ws.d_tmp.v[idx]);
        }
        add_inplace(ws.x, ws.d_tmp);
    }

    rmsnorm_forward(ws.final_normed, ws.rstd_final, ws.x, params.final_norm_gain);
    kernels::transpose(ws.w_t.data(), params.lm_head.data(), cfg.vocab, d);
    kernels::matmul_nn(ws.logits.data(), ws.final_normed.data(), ws.w_t.data(), R, d, cfg.vocab);
}

template <typename T>
T cross_entropy(const Workspace<T>& ws, const int* targets, std::vector<T>* per_position) {
    const int R = ws.B * ws.L, V = ws.cfg.vocab;
    for (int r = 0; r < R; ++r)
        if (targets[r] < 0 || targets[r] >= V)
            throw std::out_of_range("target id outside vocabulary");
    if (per_position) per_position->assign(ws.L, T(0));
    T total = T(0);
    std::vector<T> row_loss(R);
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < R; ++r) {
        const T* lg = ws.logits.row(r);
        T maxv = lg[0];
        for (int j = 1; j < V; ++j) maxv = std::max(maxv, lg[j]);
        T denom = T(0);
        for (int j = 0; j < V; ++j) denom += std::exp(lg[j] - maxv);
        row_loss[r] = std::log(denom) - (lg[targets[r]] - maxv);
    }
    for (int r = 0; r < R; ++r) {
        total += row_loss[r];
        if (per_position) (*per_position)[r % ws.L] += row_loss[r];
    }
    if (per_position)
        for (auto& x : *per_position) x /= T(ws.B);
    return total / T(R);
}

template <typename T>
void backward(const ModelParams<T>& params, const int* tokens, const int* targets, int B, int L,
              Workspace<T>& ws, ModelParams<T>& grads, const AblationMask* ablation) {
    const ModelConfig& cfg = params.config;
    for_each_tensor(grads, [](const std::string&, std::vector<T>& t) {
        std::fill(t.begin(), t.end(), T(0));
    });
    if (B == 0 || L == 0) return;
    const int R = B * L, d = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim();
    const int dh = cfg.d_hidden();
    const T scale = T(1) / std::sqrt(T(hd));
    for (int r = 0; r < R; ++r)
        if (targets[r] < 0 || targets[r] >= cfg.vocab)
            throw std::out_of_range("target id outside vocabulary");

    // dlogits = (softmax - onehot) / R, built in place over the logits
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (int r = 0; r < R; ++r) {
        T* lg = ws.logits.row(r);
        T maxv = lg[0];
        for (int j = 1; j < cfg.vocab; ++j) maxv = std::max(maxv, lg[j]);
        T denom = T(0);
        for (int j = 0; j < cfg.vocab; ++j) denom += std::exp(lg[j] - maxv);
        const T inv = T(1) / denom;
        for (int j = 0; j < cfg.vocab; ++j) lg[j] = std::exp(lg[j] - maxv) * inv / T(R);
        lg[targets[r]] -= T(1) / T(R);
    }

    kernels::matmul_tn(grads.lm_head.data(), ws.logits.data(), ws.final_normed.data(), cfg.vocab, R,
                       d);
    kernels::matmul_nn(ws.d_tmp.data(), ws.logits.data(), params.lm_head.data(), R, cfg.vocab, d);
    ws.d_x.zero();
    rmsnorm_backward(ws.d_x, grads.final_norm_gain, ws.d_tmp, ws.x, ws.rstd_final,
                     params.final_norm_gain);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        auto& lc = ws.layer[l];
        const auto& lp = params.layers[l];
        auto& lg = grads.layers[l];

        // MLP branch: d_x holds the gradient at the block output
        kernels::matmul_tn(lg.w2.data(), lc.act.data(), ws.d_x.data(), dh, R, d);
        kernels::transpose(ws.w_t.data(), lp.w2.data(), dh, d);
        kernels::matmul_nn(ws.d_act.data(), ws.d_x.data(), ws.w_t.data(), R, d, dh);
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
        for (int r = 0; r < R; ++r) {
            const T* pre = lc.pre.row(r);
            const T* da = ws.d_act.row(r);
            T* dp = ws.d_pre.row(r);
            for (int j = 0; j < dh; ++j) dp[j] = da[j] * gelu_grad(pre[j]);
        }
        kernels::matmul_tn(lg.w1.data(), lc.normed2.data(), ws.d_pre.data(), d, R, dh);
        kernels::transpose(ws.w_t.data(), lp.w1.data(), d, dh);
        kernels::matmul_nn(ws.d_tmp.data(), ws.d_pre.data(), ws.w_t.data(), R, dh, d);
        rmsnorm_backward(ws.d_x, lg.mlp_norm_gain, ws.d_tmp, lc.x_mid, lc.rstd_mlp,
                         lp.mlp_norm_gain);

        // attention branch: d_x now holds the gradient at x_mid
        kernels::matmul_tn(lg.wo.data(), lc.att_concat.data(), ws.d_x.data(), d, R, d);
        kernels::transpose(ws.w_t.data(), lp.wo.data(), d, d);
        kernels::matmul_nn(ws.d_concat.data(), ws.d_x.data(), ws.w_t.data(), R, d, d);
        if (ablation) {
            for (auto& [al, ah] : ablation->heads) {
                if (al != l) continue;
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
                for (int r = 0; r < R; ++r) {
                    T* slice = ws.d_concat.row(r) + ah * hd;
                    for (int e = 0; e < hd; ++e) slice[e] = T(0);
                }
            }
        }

        // attention backward as batched per-head products (head-major scratch)
        pack_heads(ws.head_a, ws.d_concat, B, L, H, hd); // d of the head outputs
        kernels::batched_matmul_nt(ws.d_probs.data(), ws.head_a.data(), lc.vv.data(), B * H,
                                   static_cast<size_t>(L) * L, static_cast<size_t>(L) * hd,
                                   static_cast<size_t>(L) * hd, L, hd, L);
        kernels::batched_matmul_tn(ws.head_b.data(), lc.probs.data(), ws.head_a.data(), B * H,
                                   static_cast<size_t>(L) * hd, static_cast<size_t>(L) * L,
                                   static_cast<size_t>(L) * hd, L, L, hd);
        unpack_heads(ws.d_v, ws.head_b, B, L, H, hd);

        // softmax backward in place; zero attention weights above the diagonal
        // null the spurious upper-triangle gradients automatically
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
        for (int row = 0; row < B * H * L; ++row) {
            const int i = row % L;
            const T* prow = lc.probs.row(row);
            T* dprow = ws.d_probs.row(row);
            T dot = T(0);
            for (int j = 0; j <= i; ++j) dot += dprow[j] * prow[j];
            for (int j = 0; j < L; ++j) dprow[j] = prow[j] * (dprow[j] - dot) * scale;
        }

        kernels::batched_matmul_nn(ws.head_a.data(), ws.d_probs.data(), lc.k.data(), B * H,
                                   static_cast<size_t>(L) * hd, static_cast<size_t>(L) * L,
                                   static_cast<size_t>(L) * hd, L, L, hd);
        kernels::batched_matmul_tn(ws.head_b.data(), ws.d_probs.data(), lc.q.data(), B * H,
                                   static_cast<size_t>(L) * hd, static_cast<size_t>(L) * L,
                                   static_cast<size_t>(L) * hd, L, L, hd);
        rope_heads(ws.head_a, ws.rope_cos, ws.rope_sin, L, hd, true);
        rope_heads(ws.head_b, ws.rope_cos, ws.rope_sin, L, hd, true);
        unpack_heads(ws.d_q, ws.head_a, B, L, H, hd);
        unpack_heads(ws.d_k, ws.head_b, B, L, H, hd);

        kernels::matmul_tn(lg.wq.data(), lc.normed.data(), ws.d_q.data(), d, R, d);
        kernels::matmul_tn(lg.wk.data(), lc.normed.data(), ws.d_k.data(), d, R, d);
        kernels::matmul_tn(lg.wv.data(), lc.normed.data(), ws.d_v.data(), d, R, d);

        kernels::transpose(ws.w_t.data(), lp.wq.data(), d, d);
        kernels::matmul_nn(ws.d_tmp.data(), ws.d_q.data(), ws.w_t.data(), R, d, d);
        kernels::transpose(ws.w_t.data(), lp.wk.data(), d, d);
        kernels::matmul_nn(ws.d_concat.data(), ws.d_k.data(), ws.w_t.data(), R, d, d);
        add_inplace(ws.d_tmp, ws.d_concat);
        kernels::transpose(ws.w_t.data(), lp.wv.data(), d, d);
        kernels::matmul_nn(ws.d_concat.data(), ws.d_v.data(), ws.w_t.data(), R, d, d);
        add_inplace(ws.d_tmp, ws.d_concat);

        rmsnorm_backward(ws.d_x, lg.attn_norm_gain, ws.d_tmp, lc.x_in, lc.rstd_attn,
                         lp.attn_norm_gain);
    }

    // embedding scatter, serial for a fixed accumulation order
    for (int r = 0; r < R; ++r) {
        T* dst = grads.embedding.row(tokens[r]);
        const T* src = ws.d_x.row(r);
        for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
}

ModelParams<float> transfer_embeddings(const ModelParams<float>& src, const ModelConfig& tgt_cfg,
                                       uint64_t seed) {
    const ModelConfig& s = src.config;
    if (tgt_cfg.vocab < s.vocab) throw std::invalid_argument("target vocab must be >= source vocab");
    if (tgt_cfg.d_model != s.d_model || tgt_cfg.n_layers != s.n_layers ||
        tgt_cfg.n_heads != s.n_heads || tgt_cfg.mlp_ratio != s.mlp_ratio)
        throw std::invalid_argument("transfer requires matching d_model/layers/heads/mlp_ratio");

    ModelParams<float> out = init_params<float>(tgt_cfg, seed);
    for (int r = 0; r < s.vocab; ++r) {
        std::memcpy(out.embedding.row(r), src.embedding.row(r), sizeof(float) * s.d_model);
        std::memcpy(out.lm_head.row(r), src.lm_head.row(r), sizeof(float) * s.d_model);
    }
    for (int l = 0; l < s.n_layers; ++l) {
        out.layers[l].attn_norm_gain = src.layers[l].attn_norm_gain;
        out.layers[l].wq = src.layers[l].wq;
        out.layers[l].wk = src.layers[l].wk;
        out.layers[l].wv = src.layers[l].wv;
        out.layers[l].wo = src.layers[l].wo;
        out.layers[l].mlp_norm_gain = src.layers[l].mlp_norm_gain;
        out.layers[l].w1 = src.layers[l].w1;
        out.layers[l].w2 = src.layers[l].w2;
    }
    out.final_norm_gain = src.final_norm_gain;
    return out;
}

namespace {

void write_raw(std::ofstream& f, const void* p, size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void write_pod(std::ofstream& f, T v) {
    write_raw(f, &v, sizeof(T));
}
void read_raw(std::ifstream& f, void* p, size_t n) {
    if (!f.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
        throw std::runtime_error("truncated checkpoint file");
}
template <typename T>
T read_pod(std::ifstream& f) {
    T v;
    read_raw(f, &v, sizeof(T));
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const OptState* opt) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    write_raw(f, "PCGM", 4);
    write_pod<uint16_t>(f, 1);
    const ModelConfig& c = params.config;
    write_pod<int32_t>(f, c.n_layers);
    write_pod<int32_t>(f, c.n_heads);
    write_pod<int32_t>(f, c.d_model);
    write_pod<int32_t>(f, c.vocab);
    write_pod<int32_t>(f, c.context);
    write_pod<int32_t>(f, c.mlp_ratio);
    write_pod<double>(f, c.rope_base);
    auto& mut = const_cast<ModelParams<float>&>(params);
    for_each_tensor(mut, [&](const std::string&, std::vector<float>& t) {
        write_pod<uint64_t>(f, t.size());
        write_raw(f, t.data(), t.size() * sizeof(float));
    });
    const bool has_opt = opt && !opt->m.empty();
    write_pod<uint8_t>(f, has_opt ? 1 : 0);
    if (has_opt) {
        write_pod<uint64_t>(f, opt->step);
        for (auto& t : opt->m) {
            write_pod<uint64_t>(f, t.size());
            write_raw(f, t.data(), t.size() * sizeof(float));
        }
        for (auto& t : opt->v) {
            write_pod<uint64_t>(f, t.size());
            write_raw(f, t.data(), t.size() * sizeof(float));
        }
    }
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    read_raw(f, magic, 4);
    if (std::memcmp(magic, "PCGM", 4) != 0) throw std::runtime_error("not a checkpoint file");
    if (read_pod<uint16_t>(f) != 1) throw std::runtime_error("unsupported checkpoint version");
    ModelConfig c;
    c.n_layers = read_pod<int32_t>(f);
    c.n_heads = read_pod<int32_t>(f);
    c.d_model = read_pod<int32_t>(f);
    c.vocab = read_pod<int32_t>(f);
    c.context = read_pod<int32_t>(f);
    c.mlp_ratio = read_pod<int32_t>(f);
    c.rope_base = read_pod<double>(f);

    Checkpoint ck;
    ck.params = alloc_params<float>(c);
    size_t n_tensors = 0;
    for_each_tensor(ck.params, [&](const std::string& name, std::vector<float>& t) {
        uint64_t n = read_pod<uint64_t>(f);
        if (n != t.size())
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        read_raw(f, t.data(), t.size() * sizeof(float));
        ++n_tensors;
    });
    if (read_pod<uint8_t>(f) == 1) {
        OptState opt;
        opt.step = read_pod<uint64_t>(f);
        opt.m.resize(n_tensors);
        opt.v.resize(n_tensors);
        size_t idx = 0;
        for_each_tensor(ck.params, [&](const std::string&, std::vector<float>& t) {
            uint64_t n = read_pod<uint64_t>(f);
            if (n != t.size()) throw std::runtime_error("optimizer state shape mismatch");
            opt.m[idx].resize(n);
            read_raw(f, opt.m[idx].data(), n * sizeof(float));
            ++idx;
        });
        idx = 0;
        for_each_tensor(ck.params, [&](const std::string&, std::vector<float>& t) {
            uint64_t n = read_pod<uint64_t>(f);
            if (n != t.size()) throw std::runtime_error("optimizer state shape mismatch");
            opt.v[idx].resize(n);
            read_raw(f, opt.v[idx].data(), n * sizeof(float));
            ++idx;
        });
        ck.opt = std::move(opt);
    }
    return ck;
}

template struct Workspace<float>;
template struct Workspace<double>;
template ModelParams<float> alloc_params<float>(const ModelConfig&);
template ModelParams<double> alloc_params<double>(const ModelConfig&);
template ModelParams<float> init_params<float>(const ModelConfig&, uint64_t);
template ModelParams<double> init_params<double>(const ModelConfig&, uint64_t);
template void rope_apply<float>(float*, int, int, double);
template void rope_apply<double>(double*, int, int, double);
template void forward<float>(const ModelParams<float>&, const int*, int, int, Workspace<float>&,
                             const AblationMask*, const CaptureSpec*, ActivationTrace*);
template void forward<double>(const ModelParams<double>&, const int*, int, int, Workspace<double>&,
                              const AblationMask*, const CaptureSpec*, ActivationTrace*);
template float cross_entropy<float>(const Workspace<float>&, const int*, std::vector<float>*);
template double cross_entropy<double>(const Workspace<double>&, const int*, std::vector<double>*);
template void backward<float>(const ModelParams<float>&, const int*, const int*, int, int,
                              Workspace<float>&, ModelParams<float>&, const AblationMask*);
template void backward<double>(const ModelParams<double>&, const int*, const int*, int, int,
                               Workspace<double>&, ModelParams<double>&, const AblationMask*);

} // namespace pcglab
