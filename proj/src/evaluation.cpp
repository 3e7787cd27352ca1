#include "pcglab/evaluation.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace pcglab {

std::vector<GroupEval> evaluate_dataset(const ModelParams<float>& params, const DatasetFile& test,
                                        int n_eval, const AblationMask* ablation, int batch_size) {
    const ModelConfig& cfg = params.config;
    if (static_cast<int>(test.vocab) > cfg.vocab)
        throw std::invalid_argument("dataset vocabulary exceeds model vocabulary");
    const int row_tokens = static_cast<int>(test.row_tokens());
    const int L_tok = row_tokens - 1; // input/prediction length in tokens
    if (L_tok > cfg.context) throw std::invalid_argument("sequence longer than model context");
    const int digits = test.tok.digits;
    const int L_val = static_cast<int>(test.seq_len) - 1; // prediction length in values

    Workspace<float> ws;
    std::vector<GroupEval> out;
    std::vector<int> inputs, targets;
    for (const auto& group : test.groups) {
        GroupEval ge;
        ge.source = group.spec.name();
        ge.curve.source = ge.source;
        ge.curve.accuracy.assign(L_val, 0.0);
        const size_t rows =
            n_eval > 0 ? std::min<size_t>(group.row_count, n_eval) : group.row_count;
        ge.curve.n_sequences = rows;

        double loss_sum = 0.0;
        size_t loss_rows = 0;
        std::vector<size_t> correct(L_val, 0);
        for (size_t r0 = 0; r0 < rows; r0 += batch_size) {
            const int B = static_cast<int>(std::min<size_t>(batch_size, rows - r0));
            inputs.assign(static_cast<size_t>(B) * L_tok, 0);
            targets.assign(static_cast<size_t>(B) * L_tok, 0);
            for (int b = 0; b < B; ++b) {
                const uint32_t* row = test.row(group.row_begin + r0 + b);
                for (int t = 0; t < L_tok; ++t) {
                    inputs[static_cast<size_t>(b) * L_tok + t] = static_cast<int>(row[t]);
                    targets[static_cast<size_t>(b) * L_tok + t] = static_cast<int>(row[t + 1]);
                }
            }
            forward(params, inputs.data(), B, L_tok, ws, ablation);
            loss_sum += cross_entropy(ws, targets.data()) * B;
            loss_rows += B;

            // value-level argmax accuracy; ties go to the smallest token id
            for (int b = 0; b < B; ++b) {
                for (int p = 1; p <= L_val; ++p) {
                    bool ok = true;
                    for (int g = 0; g < digits && ok; ++g) {
                        const int tok_pos = p * digits + g; // index in the token row
                        const float* lg = ws.logits.row(b * L_tok + tok_pos - 1);
                        int best = 0;
                        for (int j = 1; j < cfg.vocab; ++j)
                            if (lg[j] > lg[best]) best = j;
                        const uint32_t truth = test.row(group.row_begin + r0 + b)[tok_pos];
                        ok = best == static_cast<int>(truth);
                    }
                    if (ok) ++correct[p - 1];
                }
            }
        }
        ge.mean_loss = loss_rows ? loss_sum / static_cast<double>(loss_rows) : 0.0;
        for (int p = 0; p < L_val; ++p)
            ge.curve.accuracy[p] =
                rows ? static_cast<double>(correct[p]) / static_cast<double>(rows) : 0.0;
        out.push_back(std::move(ge));
    }
    return out;
}

std::vector<AccuracyCurve> accuracy_by_position(const ModelParams<float>& params,
                                                const DatasetFile& test, int n_eval) {
    auto evals = evaluate_dataset(params, test, n_eval);
    std::vector<AccuracyCurve> out;
    out.reserve(evals.size());
    for (auto& e : evals) out.push_back(std::move(e.curve));
    return out;
}

double ThresholdRule::threshold(uint64_t m) const {
    switch (kind) {
        case Kind::Absolute: return value;
        case Kind::Additive: return value + 1.0 / std::sqrt(static_cast<double>(m));
        case Kind::Multiplicative: return value / std::sqrt(static_cast<double>(m));
    }
    return value;
}

ThresholdRule ThresholdRule::parse(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("rule must look like abs:0.9");
    const std::string kind = text.substr(0, colon);
    ThresholdRule r;
    r.value = std::stod(text.substr(colon + 1));
    if (kind == "abs") r.kind = Kind::Absolute;
    else if (kind == "add") r.kind = Kind::Additive;
    else if (kind == "mul") r.kind = Kind::Multiplicative;
    else throw std::invalid_argument("unknown threshold rule: " + kind);
    return r;
}

std::string ThresholdRule::to_string() const {
    const char* k = kind == Kind::Absolute ? "abs" : kind == Kind::Additive ? "add" : "mul";
    return std::string(k) + ":" + std::to_string(value);
}

std::optional<int> first_crossing(const AccuracyCurve& curve, const ThresholdRule& rule,
                                  uint64_t m) {
    const double th = rule.threshold(m);
    for (size_t i = 0; i < curve.accuracy.size(); ++i)
        if (curve.accuracy[i] > th) return static_cast<int>(i + 1);
    return std::nullopt;
}

ScalingFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("power-law fit needs at least 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(points.size());
    for (auto& [m, idx] : points) {
        if (m <= 0 || idx <= 0) throw std::invalid_argument("power-law fit needs positive points");
        const double x = std::log(m), y = std::log(idx);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12 * n * sxx)
        throw std::invalid_argument("power-law fit needs at least two distinct m values");
    ScalingFit fit;
    fit.exponent = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.exponent * sx) / n;
    fit.coefficient = std::exp(intercept);
    fit.residual = 0.0;
    for (auto& [m, idx] : points) {
        const double e = std::log(idx) - (intercept + fit.exponent * std::log(m));
        fit.residual += e * e;
    }
    return fit;
}

FlopsBreakdown inference_flops(const ModelConfig& cfg, uint64_t L) {
    const uint64_t d = static_cast<uint64_t>(cfg.d_model);
    const uint64_t nl = static_cast<uint64_t>(cfg.n_layers);
    const uint64_t V = static_cast<uint64_t>(cfg.vocab);
    FlopsBreakdown fb;
    fb.attn = (4 * L * d * d + 2 * L * L * d) * nl;
    fb.mlp = 8 * L * d * d * nl;
    fb.norm = 2 * L * d * nl;
    fb.lm_head = L * d * V;
    fb.total = fb.attn + fb.mlp + fb.norm + fb.lm_head;
    return fb;
}

uint64_t training_flops(const FlopsBreakdown& per_seq, uint64_t batch_size, uint64_t steps) {
    return 3 * batch_size * steps * per_seq.total;
}

double brute_force_ops(uint64_t m) {
    if (m < 4 || !std::has_single_bit(m))
        throw std::invalid_argument("modulus must be a power of two >= 4");
    const uint64_t grid = (m / 4) * (m / 2) * 30; // 3.75 m^2, exact below 2^53
    return static_cast<double>(grid) * std::sqrt(static_cast<double>(m));
}

} // namespace pcglab
