#include "pcglab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pcglab/analysis.hpp"
#include "pcglab/attack.hpp"
#include "pcglab/dataset.hpp"
#include "pcglab/evaluation.hpp"
#include "pcglab/kernels.hpp"
#include "pcglab/model.hpp"
#include "pcglab/training.hpp"

namespace pcglab {

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        // trim
        size_t b = cur.find_first_not_of(" \t");
        size_t e = cur.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

struct RunContext {
    uint64_t seed = 0;
    std::string out_dir = ".";
};

RunContext read_run_section(const ParsedConfig& cfg) {
    RunContext ctx;
    const ConfigSection* sec = cfg.find_section("run");
    if (sec) {
        SectionReader r(*sec);
        ctx.seed = r.get_u64("seed", 0);
        ctx.out_dir = r.get_string("out_dir", ".");
        const int threads = static_cast<int>(r.get_int("threads", 0));
        if (threads > 0) kernels::set_threads(threads);
        r.finish();
    }
    if (const char* root = std::getenv("PCGLAB_OUT_ROOT")) {
        std::filesystem::path p(ctx.out_dir);
        if (p.is_relative()) ctx.out_dir = (std::filesystem::path(root) / p).string();
    }
    std::filesystem::create_directories(ctx.out_dir);
    return ctx;
}

void write_resolved(const RunConfig& run, const RunContext& ctx) {
    std::ofstream f(ctx.out_dir + "/resolved.cfg");
    f << "# resolved configuration for command: " << run.command << "\n";
    f << run.config.serialize();
}

GeneratorSpec read_generator(const ConfigSection& sec) {
    SectionReader r(sec);
    GeneratorSpec g;
    g.variant = variant_from_name(r.get_string("variant"));
    g.state_bits = static_cast<int>(r.get_int("state_bits"));
    const int default_out = g.variant == Variant::Xslrr ? g.state_bits / 2 : g.state_bits;
    g.output_bits = static_cast<int>(r.get_int("output_bits", default_out));
    g.control_bits = static_cast<int>(r.get_int("control_bits", 0));
    r.finish();
    validate_spec(g);
    return g;
}

std::pair<TokenScheme, int> read_tokenization(const std::string& name) {
    if (name == "direct") return {TokenScheme::Direct, 0};
    if (name == "base256") return {TokenScheme::BaseB, 256};
    if (name == "base128") return {TokenScheme::BaseB, 128};
    if (name == "base64") return {TokenScheme::BaseB, 64};
    throw std::invalid_argument("dataset.tokenization: unknown scheme " + name);
}

int cmd_gen_data(const RunConfig& run, const RunContext& ctx) {
    auto gen_secs = run.config.sections_with_prefix("generator");
    if (gen_secs.empty()) throw std::invalid_argument("gen-data needs a [generator] section");
    std::vector<GeneratorSpec> templates;
    for (auto* s : gen_secs) templates.push_back(read_generator(*s));

    const ConfigSection* dsec = run.config.find_section("dataset");
    if (!dsec) throw std::invalid_argument("gen-data needs a [dataset] section");
    SectionReader r(*dsec);
    SplitSpec split;
    split.n_a = r.get_u64("n_a", 256);
    split.n_c = r.get_u64("n_c", 256);
    split.n_test_a = r.get_u64("n_test_a", 128);
    split.n_test_c = r.get_u64("n_test_c", 16);
    split.seed = ctx.seed;
    const uint32_t seq_len = static_cast<uint32_t>(r.get_int("seq_len"));
    auto [scheme, base] = read_tokenization(r.get_string("tokenization", "direct"));
    const std::string train_name = r.get_string("train_name", "train");
    const std::string test_name = r.get_string("test_name", "test");
    const bool verify = r.get_bool("verify", true);
    r.finish();

    BuildResult built = build_dataset(templates, split, seq_len, scheme, base);
    if (verify) {
        verify_rows(built.train, 0.01, ctx.seed + 1);
        verify_rows(built.test, 0.01, ctx.seed + 2);
    }
    const std::string train_path = ctx.out_dir + "/" + train_name + ".pcgd";
    const std::string test_path = ctx.out_dir + "/" + test_name + ".pcgd";
    save_dataset(train_path, built.train);
    save_dataset(test_path, built.test);
    std::cout << "wrote " << train_path << " (" << built.train.n_seqs << " rows, "
              << built.train.tokens.size() << " tokens)\n";
    std::cout << "wrote " << test_path << " (" << built.test.n_seqs << " rows)\n";
    return kOk;
}

ModelConfig read_model(const ConfigSection& sec, const DatasetFile* data) {
    SectionReader r(sec);
    ModelConfig m;
    m.n_layers = static_cast<int>(r.get_int("n_layers"));
    m.n_heads = static_cast<int>(r.get_int("n_heads"));
    m.d_model = static_cast<int>(r.get_int("d_model"));
    m.vocab = static_cast<int>(r.get_int("vocab", data ? data->vocab : 0));
    m.context =
        static_cast<int>(r.get_int("context", data ? static_cast<int>(data->row_tokens()) - 1 : 0));
    m.mlp_ratio = static_cast<int>(r.get_int("mlp_ratio", 4));
    m.rope_base = r.get_double("rope_base", 10000.0);
    r.finish();
    m.validate();
    return m;
}

int cmd_train(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* tsec = run.config.find_section("train");
    if (!tsec) throw std::invalid_argument("train needs a [train] section");
    SectionReader r(*tsec);

    const std::string train_path = r.get_string("train_data");
    DatasetFile train_ds = load_dataset(train_path, false);

    TrainConfig tc;
    tc.steps = r.get_u64("steps", 5000);
    tc.batch_size = static_cast<int>(r.get_int("batch_size", 64));
    tc.peak_lr = r.get_double("peak_lr", 3e-4);
    tc.warmup_steps = r.get_u64("warmup_steps", 200);
    tc.weight_decay = r.get_double("weight_decay", 0.1);
    tc.beta1 = r.get_double("beta1", 0.9);
    tc.beta2 = r.get_double("beta2", 0.999);
    tc.eps = r.get_double("eps", 1e-8);
    tc.grad_clip = r.get_double("grad_clip", 1.0);
    tc.seed = ctx.seed;
    tc.eval_every = r.get_u64("eval_every", 250);
    tc.checkpoint_every = r.get_u64("checkpoint_every", 0);
    tc.eval_sequences = static_cast<int>(r.get_int("eval_sequences", 128));
    tc.out_dir = ctx.out_dir;
    tc.eval_positions.clear();
    for (auto& p : split_csv(r.get_string("eval_positions", "32,64,128")))
        tc.eval_positions.push_back(std::stoi(p));
    const std::string init = r.get_string("init", "random");
    if (init != "random") tc.init_checkpoint = init;
    const std::string resume = r.get_string("resume", "");
    const std::string test_paths = r.get_string("test_data", "");
    r.finish();

    const ConfigSection* msec = run.config.find_section("model");
    if (!msec) throw std::invalid_argument("train needs a [model] section");
    ModelConfig mc = read_model(*msec, &train_ds);

    TrainInputs inputs;
    inputs.train = &train_ds;

    std::vector<DatasetFile> curriculum_store;
    const ConfigSection* csec = run.config.find_section("curriculum");
    if (csec) {
        SectionReader cr(*csec);
        const std::string sources = cr.get_string("sources");
        inputs.schedule.decay = decay_from_name(cr.get_string("decay", "exponential"));
        inputs.schedule.decay_steps = cr.get_u64("decay_steps", tc.steps);
        cr.finish();
        for (auto& item : split_csv(sources)) {
            const auto colon = item.find_last_of(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("curriculum.sources entries look like path:alpha");
            CurriculumSource src;
            src.path = item.substr(0, colon);
            src.alpha0 = std::stod(item.substr(colon + 1));
            inputs.schedule.sources.push_back(src);
            curriculum_store.push_back(load_dataset(src.path, false));
        }
        for (auto& ds : curriculum_store) inputs.curriculum.push_back(&ds);
    }

    std::vector<DatasetFile> test_store;
    for (auto& path : split_csv(test_paths)) test_store.push_back(load_dataset(path, false));
    for (size_t f = 0; f < test_store.size(); ++f) {
        for (size_t g = 0; g < test_store[f].groups.size(); ++g) {
            EvalSet es;
            es.data = &test_store[f];
            es.group = g;
            es.label = test_store[f].groups[g].spec.name();
            for (auto& other : inputs.eval_sets)
                if (other.label == es.label) es.label += "#" + std::to_string(f);
            inputs.eval_sets.push_back(es);
        }
    }

    TrainResult res = train(tc, mc, inputs, resume);
    std::cout << "checkpoint: " << res.checkpoint_path << "\n";
    std::cout << "metrics:    " << res.metrics_path << "\n";
    std::cout << "final train loss: " << res.final_train_loss << "\n";
    return kOk;
}

int cmd_evaluate(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* sec = run.config.find_section("evaluate");
    if (!sec) throw std::invalid_argument("evaluate needs its option block");
    SectionReader r(*sec);
    const std::string ckpt = r.get_string("ckpt");
    const std::string data = r.get_string("data");
    const std::string out = r.get_string("out", "curve.csv");
    const int n_eval = static_cast<int>(r.get_int("n_eval", 0));
    const int batch = static_cast<int>(r.get_int("batch", 16));
    r.finish();

    Checkpoint ck = load_checkpoint(ckpt);
    DatasetFile ds = load_dataset(data, false);
    auto evals = evaluate_dataset(ck.params, ds, n_eval, nullptr, batch);

    const std::string out_path = ctx.out_dir + "/" + out;
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot write " + out_path);
    f << "position";
    for (auto& e : evals) f << ",acc_" << e.source;
    f << "\n";
    const size_t L = evals.empty() ? 0 : evals[0].curve.accuracy.size();
    for (size_t p = 0; p < L; ++p) {
        f << (p + 1);
        for (auto& e : evals) f << "," << e.curve.accuracy[p];
        f << "\n";
    }
    for (auto& e : evals)
        std::cout << e.source << ": loss " << e.mean_loss << " over " << e.curve.n_sequences
                  << " rows\n";
    std::cout << "wrote " << out_path << "\n";
    return kOk;
}

std::vector<uint64_t> read_outputs_arg(const std::string& arg) {
    std::string text = arg;
    if (std::filesystem::exists(arg)) {
        std::ifstream f(arg);
        std::ostringstream buf;
        buf << f.rdbuf();
        text = buf.str();
    }
    for (auto& ch : text)
        if (ch == '\n' || ch == '\t' || ch == ' ' || ch == ';') ch = ',';
    std::vector<uint64_t> out;
    for (auto& tok : split_csv(text)) out.push_back(std::stoull(tok));
    return out;
}

int cmd_attack(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* sec = run.config.find_section("attack");
    if (!sec) throw std::invalid_argument("attack needs its option block");
    SectionReader r(*sec);
    GeneratorSpec g;
    g.variant = variant_from_name(r.get_string("variant"));
    g.state_bits = static_cast<int>(r.get_int("state_bits"));
    g.output_bits = static_cast<int>(
        r.get_int("output_bits", g.variant == Variant::Xslrr ? g.state_bits / 2 : g.state_bits));
    g.control_bits = static_cast<int>(r.get_int("control_bits", 0));
    const std::string outputs_arg = r.get_string("outputs");
    const bool override_guard = r.get_bool("override_size_guard", false);
    const size_t cont_steps = r.get_u64("continue_steps", 16);
    const std::string out = r.get_string("out", "survivors.csv");
    r.finish();

    const auto outputs = read_outputs_arg(outputs_arg);
    CandidateSet set = recover(g, outputs, override_guard);
    if (!set.materialized) {
        std::cout << "no outputs given; candidate space size " << set.total_candidates << "\n";
        return kOk;
    }
    const std::string out_path = ctx.out_dir + "/" + out;
    std::ofstream f(out_path);
    f << "a,c,s0";
    for (size_t t = 1; t <= cont_steps; ++t) f << ",next" << t;
    f << "\n";
    for (const auto& cand : set.survivors) {
        f << cand.a << "," << cand.c << "," << cand.s0;
        for (uint64_t v : predict_continuation(cand, g, outputs.size(), cont_steps)) f << "," << v;
        f << "\n";
    }
    std::cout << set.survivors.size() << " survivor(s) of " << set.total_candidates
              << " candidates; bound says >= " << min_outputs_bound(g.modulus())
              << " outputs identify the generator\n";
    std::cout << "wrote " << out_path << "\n";
    if (set.survivors.empty()) {
        std::cerr << "no survivors: observations inconsistent with the spec template\n";
        return kRuntimeError;
    }
    return kOk;
}

// points file rows: "m,index" or "m,curve.csv[,column]"
std::vector<std::pair<double, double>> load_scaling_points(const std::string& path,
                                                           const ThresholdRule& rule) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open points file: " + path);
    std::vector<std::pair<double, double>> points;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv(line);
        if (fields.size() < 2) throw std::invalid_argument("points rows are m,index or m,curve.csv");
        const double m = std::stod(fields[0]);
        char* end = nullptr;
        const double numeric = std::strtod(fields[1].c_str(), &end);
        if (end && *end == '\0') {
            points.emplace_back(m, numeric);
            continue;
        }
        std::ifstream cf(fields[1]);
        if (!cf) throw std::runtime_error("cannot open curve file: " + fields[1]);
        std::string header;
        std::getline(cf, header);
        auto cols = split_csv(header);
        size_t col = 1;
        if (fields.size() >= 3) {
            col = cols.size();
            for (size_t i = 0; i < cols.size(); ++i)
                if (cols[i] == fields[2] || cols[i] == "acc_" + fields[2]) col = i;
            if (col == cols.size())
                throw std::invalid_argument("column " + fields[2] + " not in " + fields[1]);
        }
        AccuracyCurve curve;
        std::string row;
        while (std::getline(cf, row)) {
            auto vals = split_csv(row);
            if (vals.size() <= col) continue;
            curve.accuracy.push_back(std::stod(vals[col]));
        }
        auto crossing = first_crossing(curve, rule, static_cast<uint64_t>(m));
        if (!crossing)
            throw std::runtime_error("curve " + fields[1] + " never crosses " + rule.to_string());
        points.emplace_back(m, static_cast<double>(*crossing));
    }
    return points;
}

int cmd_fit_scaling(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* sec = run.config.find_section("fit-scaling");
    if (!sec) throw std::invalid_argument("fit-scaling needs its option block");
    SectionReader r(*sec);
    const std::string points_path = r.get_string("points");
    const ThresholdRule rule = ThresholdRule::parse(r.get_string("rule", "abs:0.9"));
    const std::string out = r.get_string("out", "fit.csv");
    r.finish();

    auto points = load_scaling_points(points_path, rule);
    ScalingFit fit = fit_power_law(points);
    const std::string out_path = ctx.out_dir + "/" + out;
    std::ofstream f(out_path);
    f << "m,index\n";
    for (auto& [m, idx] : points) f << m << "," << idx << "\n";
    f << "# rule=" << rule.to_string() << " exponent=" << fit.exponent
      << " coefficient=" << fit.coefficient << " residual=" << fit.residual << "\n";
    std::cout << "exponent " << fit.exponent << ", coefficient " << fit.coefficient
              << ", residual " << fit.residual << " (" << points.size() << " points)\n";
    std::cout << "wrote " << out_path << "\n";
    return kOk;
}

int cmd_flops(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* msec = run.config.find_section("model");
    if (!msec) throw std::invalid_argument("flops needs a [model] section");
    ModelConfig mc = read_model(*msec, nullptr);
    const ConfigSection* fsec = run.config.find_section("flops");
    if (!fsec) throw std::invalid_argument("flops needs an L value (flops.L)");
    SectionReader r(*fsec);
    const uint64_t L = r.get_u64("L", 0);
    const uint64_t batch = r.get_u64("batch", 0);
    const uint64_t steps = r.get_u64("steps", 0);
    const uint64_t m = r.get_u64("m", 0);
    r.finish();
    if (L == 0) throw std::invalid_argument("flops.L must be positive");

    FlopsBreakdown fb = inference_flops(mc, L);
    std::ostringstream os;
    os << "component,flops\n";
    os << "attn," << fb.attn << "\n";
    os << "mlp," << fb.mlp << "\n";
    os << "norm," << fb.norm << "\n";
    os << "lm_head," << fb.lm_head << "\n";
    os << "total," << fb.total << "\n";
    if (batch && steps) os << "training," << training_flops(fb, batch, steps) << "\n";
    if (m) os << "brute_force," << brute_force_ops(m) << "\n";
    std::ofstream f(ctx.out_dir + "/flops.csv");
    f << os.str();
    std::cout << os.str();
    return kOk;
}

int cmd_analyze_embeddings(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* sec = run.config.find_section("analyze");
    if (!sec) throw std::invalid_argument("analyze-embeddings needs its option block");
    SectionReader r(*sec);
    const std::string ckpt = r.get_string("ckpt");
    auto out_names = split_csv(r.get_string("out", "pca.csv,clusters.csv"));
    const int k = static_cast<int>(r.get_int("components", 4));
    r.finish();
    if (out_names.size() != 2)
        throw std::invalid_argument("analyze.out wants two names: pca.csv,clusters.csv");

    Checkpoint ck = load_checkpoint(ckpt);
    const int vocab = ck.params.config.vocab;
    int width = 0;
    while ((1 << width) < vocab) ++width;
    if ((1 << width) != vocab)
        throw std::invalid_argument("embedding analysis expects a power-of-two vocabulary");

    PcaResult res = pca(ck.params.embedding, std::min(k, vocab));
    TokenClusters clusters = cluster_tokens(width);

    std::vector<double> n0(vocab), rc(vocab), pc1(vocab), pc2(vocab);
    for (int t = 0; t < vocab; ++t) {
        auto sig = zero_run_signature(static_cast<uint64_t>(t), width);
        n0[t] = sig.n0();
        rc[t] = sig.run_count();
        pc1[t] = res.projections.at(t, 0);
        if (res.projections.cols > 1) pc2[t] = res.projections.at(t, 1);
    }

    const std::string pca_path = ctx.out_dir + "/" + out_names[0];
    std::ofstream pf(pca_path);
    pf << "token";
    for (int i = 0; i < res.projections.cols; ++i) pf << ",pc" << (i + 1);
    pf << ",n0,run_count,cluster\n";
    for (int t = 0; t < vocab; ++t) {
        pf << t;
        for (int i = 0; i < res.projections.cols; ++i) pf << "," << res.projections.at(t, i);
        pf << "," << n0[t] << "," << rc[t] << "," << clusters.cluster_of[t] << "\n";
    }

    const std::string cl_path = ctx.out_dir + "/" + out_names[1];
    std::ofstream cf(cl_path);
    cf << "cluster,label,tokens\n";
    for (int cidx = 0; cidx < clusters.count(); ++cidx) {
        cf << (cidx + 1) << "," << clusters.labels[cidx] << ",";
        for (size_t i = 0; i < clusters.members[cidx].size(); ++i) {
            if (i) cf << "|";
            cf << clusters.members[cidx][i];
        }
        cf << "\n";
    }

    std::cout << "corr(PC1, zero count) = " << pc_feature_correlation(pc1, n0) << "\n";
    if (res.projections.cols > 1)
        std::cout << "corr(PC2, run count) = " << pc_feature_correlation(pc2, rc) << "\n";
    std::cout << "wrote " << pca_path << " and " << cl_path << "\n";
    return kOk;
}

int cmd_analyze_separation(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* sec = run.config.find_section("analyze");
    if (!sec) throw std::invalid_argument("analyze-separation needs its option block");
    SectionReader r(*sec);
    const std::string ckpt = r.get_string("ckpt");
    const std::string data = r.get_string("data");
    const int n_eval = static_cast<int>(r.get_int("n_eval", 128));
    const std::string out = r.get_string("out", "separation.csv");
    const std::string positions_arg = r.get_string("positions", "");
    r.finish();

    Checkpoint ck = load_checkpoint(ckpt);
    std::vector<DatasetFile> files;
    for (auto& p : split_csv(data)) files.push_back(load_dataset(p, false));

    std::vector<MeanActivations> acts;
    for (auto& f : files) acts.push_back(mean_activations(ck.params, f, n_eval));
    // flatten groups across files
    MeanActivations all = std::move(acts[0]);
    for (size_t i = 1; i < acts.size(); ++i) {
        for (size_t g = 0; g < acts[i].group_names.size(); ++g) {
            all.group_names.push_back(acts[i].group_names[g]);
            all.mean.push_back(std::move(acts[i].mean[g]));
        }
    }
    if (all.group_names.size() < 2)
        throw std::invalid_argument("separation needs at least two variant groups");

    std::vector<int> positions;
    if (positions_arg.empty()) {
        for (int p : {64, 128, 256, 512})
            if (p <= all.positions) positions.push_back(p);
        if (positions.empty()) positions.push_back(all.positions);
    } else {
        for (auto& p : split_csv(positions_arg)) positions.push_back(std::stoi(p));
    }

    const std::string out_path = ctx.out_dir + "/" + out;
    std::ofstream f(out_path);
    f << "probe,position,separation\n";
    for (size_t pi = 0; pi < all.probe_names.size(); ++pi) {
        for (int pos : positions) {
            if (pos < 1 || pos > all.positions)
                throw std::invalid_argument("separation position outside sequence");
            std::vector<std::vector<double>> vecs;
            for (size_t g = 0; g < all.group_names.size(); ++g) {
                const float* row = all.mean[g][pi].row(pos - 1);
                vecs.emplace_back(row, row + all.mean[g][pi].cols);
            }
            f << all.probe_names[pi] << "," << pos << "," << generator_separation(vecs) << "\n";
        }
    }
    std::cout << "wrote " << out_path << " (groups:";
    for (auto& g : all.group_names) std::cout << " " << g;
    std::cout << ")\n";
    return kOk;
}

int cmd_analyze_attention(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* sec = run.config.find_section("analyze");
    if (!sec) throw std::invalid_argument("analyze-attention needs its option block");
    SectionReader r(*sec);
    const std::string ckpt = r.get_string("ckpt");
    const std::string data = r.get_string("data");
    const int n_eval = static_cast<int>(r.get_int("n_eval", 32));
    const int top_k = static_cast<int>(r.get_int("top_k", 8));
    const std::string out = r.get_string("out", "attention.csv");
    r.finish();

    Checkpoint ck = load_checkpoint(ckpt);
    DatasetFile ds = load_dataset(data, false);
    auto hists = attention_distance_histogram(ck.params, ds, n_eval, top_k);

    const std::string out_path = ctx.out_dir + "/" + out;
    std::ofstream f(out_path);
    f << "layer,distance,percent\n";
    for (size_t l = 0; l < hists.size(); ++l)
        for (size_t d = 0; d < hists[l].percent.size(); ++d)
            f << l << "," << (d + 1) << "," << hists[l].percent[d] << "\n";
    std::cout << "wrote " << out_path << "\n";
    return kOk;
}

int cmd_ablate_heads(const RunConfig& run, const RunContext& ctx) {
    const ConfigSection* sec = run.config.find_section("analyze");
    if (!sec) throw std::invalid_argument("ablate-heads needs its option block");
    SectionReader r(*sec);
    const std::string ckpt = r.get_string("ckpt");
    const std::string data = r.get_string("data");
    const int position = static_cast<int>(r.get_int("position"));
    const int n_eval = static_cast<int>(r.get_int("n_eval", 128));
    const std::string out = r.get_string("out", "ablation.csv");
    r.finish();

    Checkpoint ck = load_checkpoint(ckpt);
    DatasetFile ds = load_dataset(data, false);
    AblationSweep sweep = head_ablation_sweep(ck.params, ds, position, n_eval);

    const std::string out_path = ctx.out_dir + "/" + out;
    std::ofstream f(out_path);
    f << "layer,head,group,baseline,delta\n";
    for (int l = 0; l < sweep.n_layers; ++l)
        for (int h = 0; h < sweep.n_heads; ++h)
            for (size_t g = 0; g < sweep.groups.size(); ++g)
                f << l << "," << h << "," << sweep.groups[g] << "," << sweep.baseline[g] << ","
                  << sweep.delta[static_cast<size_t>(l) * sweep.n_heads + h][g] << "\n";
    std::cout << "wrote " << out_path << "\n";
    return kOk;
}

} // namespace

int dispatch(const RunConfig& run) {
    try {
        RunContext ctx = read_run_section(run.config);
        write_resolved(run, ctx);
        if (run.command == "gen-data") return cmd_gen_data(run, ctx);
        if (run.command == "train") return cmd_train(run, ctx);
        if (run.command == "evaluate") return cmd_evaluate(run, ctx);
        if (run.command == "attack") return cmd_attack(run, ctx);
        if (run.command == "fit-scaling") return cmd_fit_scaling(run, ctx);
        if (run.command == "flops") return cmd_flops(run, ctx);
        if (run.command == "analyze-embeddings") return cmd_analyze_embeddings(run, ctx);
        if (run.command == "analyze-separation") return cmd_analyze_separation(run, ctx);
        if (run.command == "analyze-attention") return cmd_analyze_attention(run, ctx);
        if (run.command == "ablate-heads") return cmd_ablate_heads(run, ctx);
        std::cerr << "unknown command: " << run.command << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}

} // namespace pcglab
