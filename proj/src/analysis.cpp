#include "pcglab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace pcglab {

int ZeroRunSignature::n0() const {
    if (all_zeros) return width;
    int s = 0;
    for (int r : runs) s += r;
    return s;
}

std::string ZeroRunSignature::to_string() const {
    if (all_ones) return "all-ones";
    if (all_zeros) return "all-zeros";
    std::string s = "Z(";
    for (size_t i = 0; i < runs.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(runs[i]);
    }
    return s + ")";
}

ZeroRunSignature zero_run_signature(uint64_t token, int width) {
    if (width < 1 || width > 63) throw std::invalid_argument("width out of range");
    if (token >= (1ULL << width)) throw std::out_of_range("token does not fit width");
    ZeroRunSignature sig;
    sig.width = width;
    if (token == 0) {
        sig.all_zeros = true;
        return sig;
    }
    const uint64_t full = (1ULL << width) - 1;
    if (token == full) {
        sig.all_ones = true;
        return sig;
    }
    // walk the circular bit string starting just after a 1-bit
    int start = 0;
    while (((token >> start) & 1) == 0) ++start;
    int run = 0;
    for (int i = 1; i <= width; ++i) {
        const int bit = static_cast<int>((token >> ((start + i) % width)) & 1);
        if (bit == 0) {
            ++run;
        } else if (run > 0) {
            sig.runs.push_back(run);
            run = 0;
        }
    }
    std::sort(sig.runs.begin(), sig.runs.end(), std::greater<int>());
    return sig;
}

TokenClusters cluster_tokens(int width) {
    if (width < 1 || width > 16) throw std::invalid_argument("cluster width must be in [1, 16]");
    const uint32_t n = 1u << width;
    std::vector<ZeroRunSignature> sigs(n);
    for (uint32_t t = 0; t < n; ++t) sigs[t] = zero_run_signature(t, width);

    // specials first, then (run count, zero count) ascending
    std::map<std::pair<int, int>, std::vector<uint32_t>> keyed;
    TokenClusters out;
    out.width = width;
    out.cluster_of.assign(n, 0);
    out.members.assign(2, {});
    out.labels = {"all-ones", "all-zeros"};
    for (uint32_t t = 0; t < n; ++t) {
        if (sigs[t].all_ones) {
            out.cluster_of[t] = 1;
            out.members[0].push_back(t);
        } else if (sigs[t].all_zeros) {
            out.cluster_of[t] = 2;
            out.members[1].push_back(t);
        } else {
            keyed[{sigs[t].run_count(), sigs[t].n0()}].push_back(t);
        }
    }
    for (auto& [key, tokens] : keyed) {
        const int id = static_cast<int>(out.members.size()) + 1;
        std::vector<std::string> parts;
        for (uint32_t t : tokens) {
            const std::string s = sigs[t].to_string();
            if (std::find(parts.begin(), parts.end(), s) == parts.end()) parts.push_back(s);
        }
        std::sort(parts.begin(), parts.end());
        std::string label = parts.empty() ? "?" : parts[0];
        for (size_t i = 1; i < parts.size(); ++i) label += "|" + parts[i];
        out.labels.push_back(label);
        out.members.push_back(tokens);
        for (uint32_t t : tokens) out.cluster_of[t] = id;
    }
    return out;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. A is destroyed;
// eigenvectors come back as rows of V.
void jacobi_eigen(Mat<double>& A, Mat<double>& V, std::vector<double>& eigvals) {
    const int n = A.rows;
    V.assign(n, n);
    for (int i = 0; i < n; ++i) V.at(i, i) = 1.0;

    auto off_norm = [&]() {
        double s = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += A.at(i, j) * A.at(i, j);
        return std::sqrt(2 * s);
    };
    double fro = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) fro += A.at(i, j) * A.at(i, j);
    fro = std::sqrt(fro);
    const double tol = 1e-14 * (fro > 0 ? fro : 1.0);

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = A.at(p, q);
                if (std::abs(apq) <= tol / n) continue;
                const double app = A.at(p, p), aqq = A.at(q, q);
                const double theta = (aqq - app) / (2 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cos_r = 1.0 / std::sqrt(t * t + 1.0);
                const double sin_r = t * cos_r;
                for (int k = 0; k < n; ++k) {
                    const double akp = A.at(k, p), akq = A.at(k, q);
                    A.at(k, p) = cos_r * akp - sin_r * akq;
                    A.at(k, q) = sin_r * akp + cos_r * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A.at(p, k), aqk = A.at(q, k);
                    A.at(p, k) = cos_r * apk - sin_r * aqk;
                    A.at(q, k) = sin_r * apk + cos_r * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V.at(p, k), vkq = V.at(q, k);
                    V.at(p, k) = cos_r * vkp - sin_r * vkq;
                    V.at(q, k) = sin_r * vkp + cos_r * vkq;
                }
            }
        }
    }
    eigvals.resize(n);
    for (int i = 0; i < n; ++i) eigvals[i] = A.at(i, i);
}

} // namespace

PcaResult pca(const Mat<double>& data, int k) {
    const int rows = data.rows, dims = data.cols;
    if (rows < 2) throw std::invalid_argument("pca needs at least 2 rows");
    if (k < 1 || k > std::min(rows, dims))
        throw std::invalid_argument("component count out of range");

    PcaResult res;
    res.mean.assign(dims, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < dims; ++j) res.mean[j] += data.at(r, j);
    for (auto& m : res.mean) m /= rows;

    Mat<double> centered(rows, dims);
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < dims; ++j) centered.at(r, j) = data.at(r, j) - res.mean[j];

    Mat<double> cov(dims, dims);
    for (int i = 0; i < dims; ++i)
        for (int j = i; j < dims; ++j) {
            double s = 0;
            for (int r = 0; r < rows; ++r) s += centered.at(r, i) * centered.at(r, j);
            s /= rows - 1;
            cov.at(i, j) = s;
            cov.at(j, i) = s;
        }

    Mat<double> vecs;
    std::vector<double> vals;
    jacobi_eigen(cov, vecs, vals);

    std::vector<int> order(dims);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] > vals[b]; });

    double total = 0;
    for (double v : vals) total += std::max(0.0, v);
    int usable = 0;
    for (int i = 0; i < k; ++i)
        if (vals[order[i]] > 1e-12 * (total > 0 ? total : 1.0)) ++usable;
    res.rank_deficient = usable < k;
    const int kept = std::max(1, usable);

    res.components.assign(kept, dims);
    res.explained_variance.resize(kept);
    for (int i = 0; i < kept; ++i) {
        res.explained_variance[i] = vals[order[i]];
        for (int j = 0; j < dims; ++j) res.components.at(i, j) = vecs.at(order[i], j);
    }
    res.projections.assign(rows, kept);
    for (int r = 0; r < rows; ++r)
        for (int i = 0; i < kept; ++i) {
            double s = 0;
            for (int j = 0; j < dims; ++j) s += centered.at(r, j) * res.components.at(i, j);
            res.projections.at(r, i) = s;
        }
    return res;
}

PcaResult pca(const Mat<float>& data, int k) {
    Mat<double> d(data.rows, data.cols);
    for (size_t i = 0; i < data.size(); ++i) d.v[i] = data.v[i];
    return pca(d, k);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;
        for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double pc_feature_correlation(const std::vector<double>& projection,
                              const std::vector<double>& feature) {
    if (projection.size() != feature.size() || projection.size() < 2)
        throw std::invalid_argument("correlation inputs must have equal length >= 2");
    auto ra = average_ranks(projection);
    auto rb = average_ranks(feature);
    const double n = static_cast<double>(ra.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0 || sbb == 0)
        throw std::invalid_argument("correlation undefined for a constant input");
    return std::abs(sab / std::sqrt(saa * sbb));
}

double generator_separation(const std::vector<std::vector<double>>& mean_vectors) {
    const size_t k = mean_vectors.size();
    if (k < 2) throw std::invalid_argument("separation needs at least 2 variants");
    const size_t d = mean_vectors[0].size();
    for (const auto& v : mean_vectors)
        if (v.size() != d) throw std::invalid_argument("separation vectors must share dimension");
    double sum = 0;
    size_t pairs = 0;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j) {
            double dot = 0, ni = 0, nj = 0;
            for (size_t e = 0; e < d; ++e) {
                dot += mean_vectors[i][e] * mean_vectors[j][e];
                ni += mean_vectors[i][e] * mean_vectors[i][e];
                nj += mean_vectors[j][e] * mean_vectors[j][e];
            }
            if (ni == 0 || nj == 0)
                throw std::invalid_argument("separation undefined for a zero activation vector");
            sum += dot / std::sqrt(ni * nj);
            ++pairs;
        }
    return 1.0 - sum / static_cast<double>(pairs);
}

MeanActivations mean_activations(const ModelParams<float>& params, const DatasetFile& test,
                                 int n_eval) {
    const ModelConfig& cfg = params.config;
    const int L = static_cast<int>(test.row_tokens()) - 1;
    MeanActivations out;
    out.positions = L;
    out.probe_names.push_back("embed");
    for (int l = 0; l < cfg.n_layers; ++l) out.probe_names.push_back("attn" + std::to_string(l));
    for (int l = 0; l < cfg.n_layers; ++l) out.probe_names.push_back("mlp" + std::to_string(l));

    Workspace<float> ws;
    CaptureSpec cap;
    cap.activations = true;
    cap.attention = false;
    std::vector<int> tokens(L);
    for (const auto& group : test.groups) {
        out.group_names.push_back(group.spec.name());
        std::vector<Mat<float>> probes(out.probe_names.size());
        for (auto& p : probes) p.assign(L, cfg.d_model);
        const size_t rows =
            n_eval > 0 ? std::min<size_t>(group.row_count, n_eval) : group.row_count;
        for (size_t r = 0; r < rows; ++r) {
            const uint32_t* row = test.row(group.row_begin + r);
            for (int t = 0; t < L; ++t) tokens[t] = static_cast<int>(row[t]);
            ActivationTrace trace;
            forward(params, tokens.data(), 1, L, ws, nullptr, &cap, &trace);
            size_t pi = 0;
            auto add = [&](const Mat<float>& src) {
                for (size_t idx = 0; idx < src.size(); ++idx) probes[pi].v[idx] += src.v[idx];
                ++pi;
            };
            add(trace.embed_out);
            for (int l = 0; l < cfg.n_layers; ++l) add(trace.attn_out[l]);
            for (int l = 0; l < cfg.n_layers; ++l) add(trace.mlp_out[l]);
        }
        if (rows > 0)
            for (auto& p : probes)
                for (auto& x : p.v) x /= static_cast<float>(rows);
        out.mean.push_back(std::move(probes));
    }
    return out;
}

void accumulate_attention_distances(const ActivationTrace& trace, int top_k,
                                    std::vector<std::vector<double>>& counts_per_layer) {
    const int n_layers = static_cast<int>(trace.attn_weights.size());
    if (counts_per_layer.empty()) counts_per_layer.resize(n_layers);
    for (int l = 0; l < n_layers; ++l) {
        const auto& heads = trace.attn_weights[l];
        if (heads.empty()) throw std::invalid_argument("trace has no attention weights");
        const int L = heads[0].rows;
        if (counts_per_layer[l].empty()) counts_per_layer[l].assign(L, 0.0);
        for (const auto& w : heads) {
            for (int i = 1; i < L; ++i) {
                // keys strictly before the query; distance 0 excluded
                std::vector<std::pair<float, int>> cand;
                cand.reserve(i);
                for (int j = 0; j < i; ++j) cand.emplace_back(w.at(i, j), j);
                const int k = std::min<int>(top_k, static_cast<int>(cand.size()));
                std::partial_sort(cand.begin(), cand.begin() + k, cand.end(),
                                  [](const auto& a, const auto& b) {
                                      return a.first > b.first ||
                                             (a.first == b.first && a.second < b.second);
                                  });
                for (int t = 0; t < k; ++t) counts_per_layer[l][i - cand[t].second] += 1.0;
            }
        }
    }
}

std::vector<DistanceHistogram> attention_distance_histogram(const ModelParams<float>& params,
                                                            const DatasetFile& test, int n_eval,
                                                            int top_k) {
    const ModelConfig& cfg = params.config;
    const int L = static_cast<int>(test.row_tokens()) - 1;
    Workspace<float> ws;
    CaptureSpec cap;
    cap.activations = false;
    cap.attention = true;
    std::vector<std::vector<double>> counts;
    std::vector<int> tokens(L);
    for (const auto& group : test.groups) {
        const size_t rows =
            n_eval > 0 ? std::min<size_t>(group.row_count, n_eval) : group.row_count;
        for (size_t r = 0; r < rows; ++r) {
            const uint32_t* row = test.row(group.row_begin + r);
            for (int t = 0; t < L; ++t) tokens[t] = static_cast<int>(row[t]);
            ActivationTrace trace;
            forward(params, tokens.data(), 1, L, ws, nullptr, &cap, &trace);
            accumulate_attention_distances(trace, top_k, counts);
        }
    }
    std::vector<DistanceHistogram> out(cfg.n_layers);
    for (int l = 0; l < cfg.n_layers; ++l) {
        double total = 0;
        for (double c : counts[l]) total += c;
        out[l].percent.assign(L - 1, 0.0);
        for (int d = 1; d < L; ++d)
            out[l].percent[d - 1] = total > 0 ? 100.0 * counts[l][d] / total : 0.0;
    }
    return out;
}

AblationSweep head_ablation_sweep(const ModelParams<float>& params, const DatasetFile& test,
                                  int position, int n_eval) {
    const ModelConfig& cfg = params.config;
    AblationSweep sweep;
    sweep.n_layers = cfg.n_layers;
    sweep.n_heads = cfg.n_heads;

    auto acc_at = [&](const AblationMask* mask) {
        std::vector<double> accs;
        auto evals = evaluate_dataset(params, test, n_eval, mask);
        for (auto& e : evals) {
            if (position < 1 || position > static_cast<int>(e.curve.accuracy.size()))
                throw std::invalid_argument("ablation position outside curve");
            accs.push_back(e.curve.accuracy[position - 1]);
            if (sweep.groups.size() < evals.size()) sweep.groups.push_back(e.source);
        }
        return accs;
    };

    sweep.baseline = acc_at(nullptr);
    for (int l = 0; l < cfg.n_layers; ++l)
        for (int h = 0; h < cfg.n_heads; ++h) {
            AblationMask mask;
            mask.heads.emplace_back(l, h);
            auto accs = acc_at(&mask);
            std::vector<double> delta(accs.size());
            for (size_t g = 0; g < accs.size(); ++g) delta[g] = accs[g] - sweep.baseline[g];
            sweep.delta.push_back(std::move(delta));
        }
    return sweep;
}

} // namespace pcglab
