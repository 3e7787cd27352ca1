#include "pcglab/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pcglab/kernels.hpp"

namespace pcglab {

Tokenization make_tokenization(int output_bits, TokenScheme scheme, int base) {
    if (output_bits < 1 || output_bits > 63)
        throw std::invalid_argument("output_bits out of range for tokenization");
    Tokenization t;
    t.scheme = scheme;
    if (scheme == TokenScheme::Direct) {
        t.base = 0;
        t.digits = 1;
        t.vocab = 1 << output_bits;
        return t;
    }
    if (base < 2 || (base & (base - 1)) != 0)
        throw std::invalid_argument("digit base must be a power of two >= 2");
    int base_bits = 0;
    while ((1 << base_bits) < base) ++base_bits;
    t.base = base;
    t.digits = (output_bits + base_bits - 1) / base_bits;
    t.vocab = base;
    return t;
}

std::vector<uint32_t> tokenize_value(uint64_t value, int output_bits, const Tokenization& tok) {
    if (output_bits < 64 && value >= (1ULL << output_bits))
        throw std::out_of_range("value does not fit output_bits");
    std::vector<uint32_t> out(tok.digits);
    if (tok.scheme == TokenScheme::Direct) {
        out[0] = static_cast<uint32_t>(value);
        return out;
    }
    for (int i = tok.digits - 1; i >= 0; --i) {
        out[i] = static_cast<uint32_t>(value % tok.base);
        value /= tok.base;
    }
    return out;
}

uint64_t detokenize_value(const uint32_t* digits, const Tokenization& tok) {
    if (tok.scheme == TokenScheme::Direct) return digits[0];
    uint64_t v = 0;
    for (int i = 0; i < tok.digits; ++i) v = v * tok.base + digits[i];
    return v;
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
        throw std::runtime_error("truncated dataset file");
}
template <typename T>
T read_pod(std::ifstream& f) {
    T v;
    read_raw(f, &v, sizeof(T));
    return v;
}

std::string sidecar_path(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return path + ".pcgi";
    return path.substr(0, dot) + ".pcgi";
}

} // namespace

void save_dataset(const std::string& path, const DatasetFile& ds) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open dataset for writing: " + path);
    const uint16_t token_bytes = ds.vocab > 65536 ? 4 : 2;
    write_raw(f, "PCGD", 4);
    write_pod<uint16_t>(f, ds.version);
    write_pod<uint16_t>(f, static_cast<uint16_t>(ds.groups.size()));
    write_pod<uint32_t>(f, ds.seq_len);
    write_pod<uint64_t>(f, ds.n_seqs);
    write_pod<uint32_t>(f, ds.vocab);
    write_pod<uint16_t>(f, static_cast<uint16_t>(ds.tok.scheme));
    write_pod<uint16_t>(f, static_cast<uint16_t>(ds.tok.base));
    write_pod<uint16_t>(f, static_cast<uint16_t>(ds.tok.digits));
    write_pod<uint16_t>(f, token_bytes);
    for (const auto& g : ds.groups) {
        write_pod<uint16_t>(f, static_cast<uint16_t>(g.spec.variant));
        write_pod<uint16_t>(f, static_cast<uint16_t>(g.spec.state_bits));
        write_pod<uint16_t>(f, static_cast<uint16_t>(g.spec.output_bits));
        write_pod<uint16_t>(f, static_cast<uint16_t>(g.spec.control_bits));
        write_pod<uint64_t>(f, g.row_begin);
        write_pod<uint64_t>(f, g.row_count);
    }
    if (token_bytes == 2) {
        std::vector<uint16_t> buf(ds.tokens.size());
        for (size_t i = 0; i < ds.tokens.size(); ++i) buf[i] = static_cast<uint16_t>(ds.tokens[i]);
        write_raw(f, buf.data(), buf.size() * 2);
    } else {
        write_raw(f, ds.tokens.data(), ds.tokens.size() * 4);
    }
    if (!f) throw std::runtime_error("dataset write failed: " + path);

    std::ofstream g(sidecar_path(path), std::ios::binary | std::ios::trunc);
    if (!g) throw std::runtime_error("cannot open sidecar for writing");
    write_raw(g, "PCGI", 4);
    write_pod<uint16_t>(g, ds.version);
    write_pod<uint64_t>(g, static_cast<uint64_t>(ds.index.size()));
    for (const auto& r : ds.index) {
        write_pod<uint16_t>(g, r.spec_id);
        write_pod<uint64_t>(g, r.a);
        write_pod<uint64_t>(g, r.c);
        write_pod<uint64_t>(g, r.s0);
    }
    if (!g) throw std::runtime_error("sidecar write failed");
}

DatasetFile load_dataset(const std::string& path, bool with_index) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open dataset: " + path);
    char magic[4];
    read_raw(f, magic, 4);
    if (std::memcmp(magic, "PCGD", 4) != 0) throw std::runtime_error("not a dataset file: " + path);
    DatasetFile ds;
    ds.version = read_pod<uint16_t>(f);
    if (ds.version != 1) throw std::runtime_error("unsupported dataset version");
    const uint16_t n_specs = read_pod<uint16_t>(f);
    ds.seq_len = read_pod<uint32_t>(f);
    ds.n_seqs = read_pod<uint64_t>(f);
    ds.vocab = read_pod<uint32_t>(f);
    ds.tok.scheme = static_cast<TokenScheme>(read_pod<uint16_t>(f));
    ds.tok.base = read_pod<uint16_t>(f);
    ds.tok.digits = read_pod<uint16_t>(f);
    ds.tok.vocab = static_cast<int>(ds.vocab);
    const uint16_t token_bytes = read_pod<uint16_t>(f);
    ds.groups.resize(n_specs);
    for (auto& g : ds.groups) {
        g.spec.variant = static_cast<Variant>(read_pod<uint16_t>(f));
        g.spec.state_bits = read_pod<uint16_t>(f);
        g.spec.output_bits = read_pod<uint16_t>(f);
        g.spec.control_bits = read_pod<uint16_t>(f);
        g.row_begin = read_pod<uint64_t>(f);
        g.row_count = read_pod<uint64_t>(f);
    }
    const size_t count = ds.n_seqs * static_cast<size_t>(ds.seq_len) * ds.tok.digits;
    ds.tokens.resize(count);
    if (token_bytes == 2) {
        std::vector<uint16_t> buf(count);
        read_raw(f, buf.data(), count * 2);
        for (size_t i = 0; i < count; ++i) ds.tokens[i] = buf[i];
    } else if (token_bytes == 4) {
        read_raw(f, ds.tokens.data(), count * 4);
    } else {
        throw std::runtime_error("bad token width in dataset header");
    }
    for (auto t : ds.tokens)
        if (t >= ds.vocab) throw std::runtime_error("dataset token outside vocabulary");

    if (with_index) {
        std::ifstream g(sidecar_path(path), std::ios::binary);
        if (!g) throw std::runtime_error("cannot open sidecar: " + sidecar_path(path));
        char m2[4];
        if (!g.read(m2, 4) || std::memcmp(m2, "PCGI", 4) != 0)
            throw std::runtime_error("not a sidecar file");
        uint16_t ver;
        g.read(reinterpret_cast<char*>(&ver), 2);
        uint64_t n;
        g.read(reinterpret_cast<char*>(&n), 8);
        if (n != ds.n_seqs) throw std::runtime_error("sidecar row count mismatch");
        ds.index.resize(n);
        for (auto& r : ds.index) {
            g.read(reinterpret_cast<char*>(&r.spec_id), 2);
            g.read(reinterpret_cast<char*>(&r.a), 8);
            g.read(reinterpret_cast<char*>(&r.c), 8);
            g.read(reinterpret_cast<char*>(&r.s0), 8);
        }
        if (!g) throw std::runtime_error("truncated sidecar file");
    }
    return ds;
}

namespace {

void fill_rows(DatasetFile& ds, const GeneratorSpec& tmpl, uint16_t spec_id, size_t row_begin,
               const std::vector<uint64_t>& as, const std::vector<uint64_t>& cs,
               const std::vector<uint64_t>& s0s) {
    const size_t rows = as.size() * cs.size();
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
    for (long long idx = 0; idx < static_cast<long long>(rows); ++idx) {
        const size_t ai = idx / cs.size();
        const size_t ci = idx % cs.size();
        GeneratorSpec g = tmpl;
        g.multiplier = as[ai];
        g.increment = cs[ci];
        const uint64_t s0 = s0s[idx];
        auto values = generate_sequence(g, s0, ds.seq_len);
        uint32_t* out = ds.row(row_begin + idx);
        size_t o = 0;
        for (uint64_t v : values) {
            auto digits = tokenize_value(v, g.output_bits, ds.tok);
            for (auto dgt : digits) out[o++] = dgt;
        }
        ds.index[row_begin + idx] = RowInfo{spec_id, as[ai], cs[ci], s0};
    }
}

} // namespace

BuildResult build_dataset(const std::vector<GeneratorSpec>& templates, const SplitSpec& split,
                          uint32_t seq_len, TokenScheme scheme, int base) {
    if (templates.empty()) throw std::invalid_argument("need at least one generator spec");
    if (seq_len < 2) throw std::invalid_argument("seq_len must be >= 2");
    for (const auto& t : templates) validate_spec(t);
    const int k = templates.front().output_bits;
    for (const auto& t : templates)
        if (t.output_bits != k)
            throw std::invalid_argument("combined datasets require equal output_bits across specs");

    const Tokenization tok = make_tokenization(k, scheme, base);
    auto init_file = [&](uint64_t rows_per_spec_total) {
        DatasetFile ds;
        ds.seq_len = seq_len;
        ds.vocab = static_cast<uint32_t>(tok.vocab);
        ds.tok = tok;
        ds.n_seqs = rows_per_spec_total * templates.size();
        ds.tokens.assign(ds.n_seqs * ds.row_tokens(), 0);
        ds.index.resize(ds.n_seqs);
        return ds;
    };
    BuildResult out;
    out.train = init_file(split.n_a * split.n_c);
    out.test = init_file(split.n_test_a * split.n_test_c);

    Rng master(split.seed);
    for (size_t si = 0; si < templates.size(); ++si) {
        const auto& tmpl = templates[si];
        Rng spec_rng = master.fork(si);
        const uint64_t want_a = split.n_a + split.n_test_a;
        const uint64_t want_c = split.n_c + split.n_test_c;
        auto params =
            enumerate_valid_params(tmpl.state_bits, want_a, want_c, spec_rng.next_u64());
        std::vector<uint64_t> train_a(params.multipliers.begin(),
                                      params.multipliers.begin() + split.n_a);
        std::vector<uint64_t> test_a(params.multipliers.begin() + split.n_a,
                                     params.multipliers.end());
        std::vector<uint64_t> train_c(params.increments.begin(),
                                      params.increments.begin() + split.n_c);
        std::vector<uint64_t> test_c(params.increments.begin() + split.n_c,
                                     params.increments.end());

        Rng s0_rng = spec_rng.fork(7);
        const uint64_t m_mask = tmpl.state_mask();
        auto draw_s0 = [&](size_t n) {
            std::vector<uint64_t> v(n);
            for (auto& x : v)
                x = tmpl.state_bits >= 64 ? s0_rng.next_u64()
                                          : s0_rng.next_below(m_mask + 1);
            return v;
        };
        auto s0_train = draw_s0(train_a.size() * train_c.size());
        auto s0_test = draw_s0(test_a.size() * test_c.size());

        SpecGroup g_train{tmpl, si * split.n_a * split.n_c, split.n_a * split.n_c};
        g_train.spec.multiplier = g_train.spec.increment = 0;
        SpecGroup g_test{tmpl, si * split.n_test_a * split.n_test_c,
                         split.n_test_a * split.n_test_c};
        g_test.spec.multiplier = g_test.spec.increment = 0;
        out.train.groups.push_back(g_train);
        out.test.groups.push_back(g_test);

        fill_rows(out.train, tmpl, static_cast<uint16_t>(si), g_train.row_begin, train_a, train_c,
                  s0_train);
        fill_rows(out.test, tmpl, static_cast<uint16_t>(si), g_test.row_begin, test_a, test_c,
                  s0_test);
    }
    return out;
}

void verify_rows(const DatasetFile& ds, double fraction, uint64_t seed) {
    if (ds.index.size() != ds.n_seqs)
        throw std::runtime_error("dataset has no sidecar index to verify against");
    if (fraction <= 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in (0,1]");
    Rng rng(seed);
    const size_t count = std::max<size_t>(1, static_cast<size_t>(fraction * ds.n_seqs));
    for (size_t t = 0; t < count; ++t) {
        const size_t r = static_cast<size_t>(rng.next_below(ds.n_seqs));
        const RowInfo& info = ds.index[r];
        GeneratorSpec g = ds.groups.at(info.spec_id).spec;
        g.multiplier = info.a;
        g.increment = info.c;
        auto values = generate_sequence(g, info.s0, ds.seq_len);
        const uint32_t* row = ds.row(r);
        size_t o = 0;
        for (uint64_t v : values) {
            auto digits = tokenize_value(v, g.output_bits, ds.tok);
            for (auto dgt : digits)
                if (row[o++] != dgt)
                    throw std::runtime_error("row " + std::to_string(r) +
                                             " does not match its recorded generator");
        }
    }
}

Decay decay_from_name(const std::string& name) {
    if (name == "none") return Decay::None;
    if (name == "linear") return Decay::Linear;
    if (name == "cosine") return Decay::Cosine;
    if (name == "exponential") return Decay::Exponential;
    if (name == "step") return Decay::Step;
    throw std::invalid_argument("unknown decay schedule: " + name);
}

const char* decay_name(Decay d) {
    switch (d) {
        case Decay::None: return "none";
        case Decay::Linear: return "linear";
        case Decay::Cosine: return "cosine";
        case Decay::Exponential: return "exponential";
        case Decay::Step: return "step";
    }
    return "?";
}

std::vector<double> curriculum_alpha(const CurriculumSchedule& sched, uint64_t step) {
    std::vector<double> out(sched.sources.size(), 0.0);
    for (size_t i = 0; i < sched.sources.size(); ++i) {
        const double a0 = sched.sources[i].alpha0;
        if (sched.decay == Decay::None) {
            out[i] = a0;
            continue;
        }
        const uint64_t T = sched.decay_steps;
        if (T == 0 || step >= T) {
            out[i] = 0.0;
            continue;
        }
        const double t = static_cast<double>(step);
        const double Td = static_cast<double>(T);
        switch (sched.decay) {
            case Decay::Linear: out[i] = a0 * (1.0 - t / Td); break;
            case Decay::Cosine:
                out[i] = a0 * (1.0 + std::cos(3.141592653589793 * t / Td)) / 2.0;
                break;
            case Decay::Exponential: {
                // rate solves alpha(T) = 1e-4 * alpha0, hard zero at T
                const double r = std::pow(1e-4, 1.0 / Td);
                out[i] = a0 * std::pow(r, t);
                break;
            }
            case Decay::Step: {
                const int plateau = static_cast<int>(4.0 * t / Td);
                out[i] = a0 / static_cast<double>(1 << plateau);
                break;
            }
            case Decay::None: break;
        }
    }
    return out;
}

EpochCursor::EpochCursor(size_t n, uint64_t seed) : rng_(seed) {
    if (n == 0) throw std::invalid_argument("empty dataset behind cursor");
    order_.resize(n);
    for (size_t i = 0; i < n; ++i) order_[i] = static_cast<uint32_t>(i);
    rng_.shuffle(order_);
}

size_t EpochCursor::next() {
    if (pos_ == order_.size()) {
        rng_.shuffle(order_);
        pos_ = 0;
        ++epoch_;
    }
    return order_[pos_++];
}

BatchSampler::BatchSampler(const DatasetFile* target, std::vector<const DatasetFile*> sources,
                           CurriculumSchedule schedule, uint64_t seed)
    : target_(target), sources_(std::move(sources)), schedule_(std::move(schedule)), rng_(seed),
      target_cursor_(target->n_seqs, Rng(seed).fork(100).next_u64()) {
    if (sources_.size() != schedule_.sources.size())
        throw std::invalid_argument("one alpha per curriculum source required");
    double total = 0.0;
    for (const auto& s : schedule_.sources) {
        if (s.alpha0 < 0.0) throw std::invalid_argument("alpha0 must be >= 0");
        total += s.alpha0;
    }
    if (total > 1.0) throw std::invalid_argument("curriculum alphas sum above 1");
    for (size_t i = 0; i < sources_.size(); ++i) {
        if (sources_[i]->row_tokens() != target_->row_tokens())
            throw std::invalid_argument("curriculum source row length differs from target");
        if (sources_[i]->n_seqs == 0) throw std::invalid_argument("empty curriculum source");
        source_cursors_.emplace_back(sources_[i]->n_seqs, Rng(seed).fork(101 + i).next_u64());
    }
}

BatchSampler::BatchInfo BatchSampler::sample(uint64_t step, int batch_size,
                                             std::vector<int>& out_tokens) {
    const size_t rt = target_->row_tokens();
    out_tokens.resize(static_cast<size_t>(batch_size) * rt);
    BatchInfo info;
    info.rows_per_source.assign(sources_.size(), 0);
    const auto alphas = curriculum_alpha(schedule_, step);
    for (int b = 0; b < batch_size; ++b) {
        const double u = rng_.next_double();
        double acc = 0.0;
        const DatasetFile* src = nullptr;
        size_t row = 0;
        for (size_t i = 0; i < sources_.size() && src == nullptr; ++i) {
            acc += alphas[i];
            if (u < acc) {
                src = sources_[i];
                row = source_cursors_[i].next();
                ++info.rows_per_source[i];
            }
        }
        if (src == nullptr) {
            src = target_;
            row = target_cursor_.next();
            ++info.rows_from_target;
        }
        const uint32_t* in = src->row(row);
        int* out = out_tokens.data() + static_cast<size_t>(b) * rt;
        for (size_t j = 0; j < rt; ++j) out[j] = static_cast<int>(in[j]);
    }
    return info;
}

} // namespace pcglab
