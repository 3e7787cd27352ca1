// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Training-based criteria run at desk scale and take a few hours on
// two cores; pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pcglab/analysis.hpp"
#include "pcglab/attack.hpp"
#include "pcglab/dataset.hpp"
#include "pcglab/evaluation.hpp"
#include "pcglab/generators.hpp"
#include "pcglab/kernels.hpp"
#include "pcglab/model.hpp"
#include "pcglab/rng.hpp"
#include "pcglab/training.hpp"
#include "../gradcheck.hpp"
#include "../reference_pcg.hpp"

using namespace pcglab;

namespace {

int g_failures = 0;
std::string g_work;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

GeneratorSpec make_spec(Variant v, int sb, int ob, int cb) {
    GeneratorSpec g;
    g.variant = v;
    g.state_bits = sb;
    g.output_bits = ob;
    g.control_bits = cb;
    return g;
}

// ---------------------------------------------------------------- criterion 1
void criterion_1() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    ok &= permute_output(0x1234, make_spec(Variant::Xslrr, 16, 8, 3)) == 38;
    ok &= permute_output(0x1234, make_spec(Variant::Xshrr, 16, 8, 3)) == 149;
    ok &= permute_output(0x1234, make_spec(Variant::Xshrs, 16, 8, 2)) == 16;
    ok &= permute_output(0x1234, make_spec(Variant::Tlcg, 16, 1, 0)) == 0;
    ok &= permute_output(0xF234, make_spec(Variant::Tlcg, 16, 1, 0)) == 1;
    if (!ok) why = "hand vectors differ";

    Rng rng(424242);
    int checked = 0;
    while (checked < 10000 && ok) {
        GeneratorSpec g;
        switch (rng.next_below(4)) {
            case 0:
                g = make_spec(Variant::Tlcg, 16, 1 + static_cast<int>(rng.next_below(16)), 0);
                break;
            case 1: g = make_spec(Variant::Xslrr, 16, 8, static_cast<int>(rng.next_below(4))); break;
            case 2: g = make_spec(Variant::Xshrr, 16, 8, static_cast<int>(rng.next_below(4))); break;
            default: g = make_spec(Variant::Xshrs, 16, 8, static_cast<int>(rng.next_below(3)));
        }
        try {
            validate_spec(g);
        } catch (const std::invalid_argument&) {
            continue;
        }
        const uint64_t s = rng.next_below(1ULL << 16);
        if (permute_output(s, g) != refpcg::ref_output(s, g)) {
            ok = false;
            why = "cross-check mismatch vs reference evaluator at state " + std::to_string(s);
        }
        ++checked;
    }
    const double dt = now_seconds() - t0;
    if (ok && dt >= 1.0) {
        ok = false;
        why = "runtime " + std::to_string(dt) + "s exceeds 1s";
    }
    report(1, ok,
           "generator bit-exactness (hand vectors + 10^4 reference cross-check, " +
               std::to_string(dt).substr(0, 5) + "s)" + (why.empty() ? "" : ": " + why));
}

// ---------------------------------------------------------------- criterion 2
void criterion_2() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    auto full = enumerate_valid_params(16, 16384, 32768, 7);
    std::set<uint64_t> ua(full.multipliers.begin(), full.multipliers.end());
    std::set<uint64_t> uc(full.increments.begin(), full.increments.end());
    if (ua.size() != 16384 || uc.size() != 32768) {
        ok = false;
        why = "enumeration sizes " + std::to_string(ua.size()) + "/" + std::to_string(uc.size());
    }
    for (uint64_t a : ua)
        if (!hull_dobell_check(a, 1, 1ULL << 16)) ok = false;

    auto sampled = enumerate_valid_params(12, 50, 50, 11);
    for (int i = 0; i < 50 && ok; ++i) {
        auto g = make_spec(Variant::Tlcg, 12, 12, 0);
        g.multiplier = sampled.multipliers[i];
        g.increment = sampled.increments[i];
        if (orbit_length(g, i * 37) != 4096) {
            ok = false;
            why = "orbit not full period at m=2^12";
        }
    }

    auto g = make_spec(Variant::Tlcg, 12, 12, 0);
    g.multiplier = sampled.multipliers[0];
    g.increment = sampled.increments[0];
    for (int k = 1; k <= 12 && ok; ++k) {
        if (measure_bit_period(g, k) != (1ULL << k)) {
            ok = false;
            why = "bit period wrong at k=" + std::to_string(k);
        }
    }
    const double dt = now_seconds() - t0;
    if (ok && dt >= 60.0) {
        ok = false;
        why = "runtime exceeds 1 min";
    }
    report(2, ok,
           "Hull-Dobell enumeration, full-period walks, bit periods (" +
               std::to_string(dt).substr(0, 5) + "s)" + (why.empty() ? "" : ": " + why));
}

// ---------------------------------------------------------------- criterion 3
void criterion_3() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_model = 16;
    cfg.vocab = 17;
    cfg.context = 8;
    auto params = init_params<double>(cfg, 31);
    auto grads = alloc_params<double>(cfg);
    Workspace<double> ws;
    const int B = 2, L = 8;
    std::vector<int> in(B * L), tgt(B * L);
    Rng rng(32);
    for (auto& x : in) x = static_cast<int>(rng.next_below(cfg.vocab));
    for (auto& x : tgt) x = static_cast<int>(rng.next_below(cfg.vocab));

    forward(params, in.data(), B, L, ws);
    backward(params, in.data(), tgt.data(), B, L, ws, grads);

    auto res = gradcheck::run(params, grads, [&] {
        forward(params, in.data(), B, L, ws);
        return cross_entropy(ws, tgt.data());
    });
    const double worst = res.worst_rel;
    if (worst > 1e-3) {
        ok = false;
        why = "worst rel err " + std::to_string(worst) + " in " + res.worst_tensor;
    }
    const double dt = now_seconds() - t0;
    if (ok && dt >= 120.0) {
        ok = false;
        why = "runtime exceeds 2 min";
    }
    report(3, ok,
           "finite-difference gradient agreement, worst rel err " + std::to_string(worst) + " (" +
               std::to_string(dt).substr(0, 5) + "s)" + (why.empty() ? "" : ": " + why));
}

// ---------------------------------------------------------------- criterion 4
void criterion_4() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    if (min_outputs_bound(1ULL << 16) != 5) {
        ok = false;
        why = "min_outputs_bound(2^16) != 5";
    }

    auto tmpl = make_spec(Variant::Xslrr, 10, 5, 3);
    Rng rng(314159);
    for (int trial = 0; trial < 20 && ok; ++trial) {
        GeneratorSpec g = tmpl;
        g.multiplier = 4 * rng.next_below(1ULL << 8) + 1;
        g.increment = 2 * rng.next_below(1ULL << 9) + 1;
        const uint64_t s0 = rng.next_below(1ULL << 10);
        auto outputs = generate_sequence(g, s0, 8);

        auto set = recover(tmpl, outputs);
        const CandidateTriple truth{g.multiplier, g.increment, s0};
        bool found = false;
        for (const auto& cand : set.survivors)
            if (cand == truth) found = true;
        if (!found) {
            ok = false;
            why = "truth missing from survivor set in trial " + std::to_string(trial);
            break;
        }
        auto expect = predict_continuation(set.survivors.front(), tmpl, 8, 16);
        for (const auto& cand : set.survivors) {
            if (predict_continuation(cand, tmpl, 8, 16) != expect) {
                ok = false;
                why = "survivors disagree on the continuation";
            }
        }
    }
    const double dt = now_seconds() - t0;
    if (ok && dt >= 600.0) {
        ok = false;
        why = "runtime exceeds 10 min";
    }
    report(4, ok,
           "attack oracle equivalence over 20 recoveries (" + std::to_string(dt).substr(0, 6) +
               "s)" + (why.empty() ? "" : ": " + why));
}

// ------------------------------------------------------- shared training runs
struct DeskRun {
    std::string ckpt;
    DatasetFile test;      // full held-out set
    DatasetFile train_ds;  // kept for curriculum reuse
};

DeskRun g_run12; // criterion 5 artifact, reused by 6 and 10

BuildResult build_desk_dataset(Variant v, int sb, int cb, uint64_t n_a, uint64_t n_c,
                               uint64_t n_test_a, uint64_t n_test_c, uint32_t seq_len,
                               uint64_t seed) {
    auto tmpl = make_spec(v, sb, sb / 2, cb);
    SplitSpec split;
    split.n_a = n_a;
    split.n_c = n_c;
    split.n_test_a = n_test_a;
    split.n_test_c = n_test_c;
    split.seed = seed;
    return build_dataset({tmpl}, split, seq_len);
}

ModelConfig desk_model(int vocab) {
    ModelConfig m;
    m.n_layers = 2;
    m.n_heads = 4;
    m.d_model = 256;
    m.vocab = vocab;
    m.context = 128;
    return m;
}

// ---------------------------------------------------------------- criterion 5
void criterion_5() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    auto built = build_desk_dataset(Variant::Xslrr, 12, 3, 256, 256, 32, 16, 129, 1001);
    TrainInputs in;
    in.train = &built.train;
    in.eval_sets.push_back({"xslrr12", &built.test, 0});

    TrainConfig tc;
    tc.steps = 5000;
    tc.batch_size = 64;
    tc.peak_lr = 3e-4;
    tc.warmup_steps = 250;
    tc.weight_decay = 0.1;
    tc.seed = 2001;
    tc.eval_every = 500;
    tc.eval_sequences = 128;
    tc.eval_positions = {32, 64, 128};
    tc.out_dir = g_work + "/c5_xslrr12";

    auto res = train(tc, desk_model(64), in);
    auto ck = load_checkpoint(res.checkpoint_path);
    auto evals = evaluate_dataset(ck.params, built.test, 0);
    const auto& acc = evals[0].curve.accuracy;
    const size_t n_rows = evals[0].curve.n_sequences;

    const double acc128 = acc[127];
    if (acc128 < 0.5) {
        ok = false;
        why = "accuracy at position 128 is " + std::to_string(acc128) + " < 0.5";
    }

    // windowed means over 8 positions must not decrease beyond sampling noise
    std::vector<double> win;
    for (size_t w = 0; w + 8 <= acc.size(); w += 8) {
        double s = 0;
        for (size_t i = w; i < w + 8; ++i) s += acc[i];
        win.push_back(s / 8.0);
    }
    for (size_t i = 1; i < win.size() && ok; ++i) {
        const double p = std::min(0.9999, std::max(0.0001, win[i - 1]));
        const double se = std::sqrt(p * (1 - p) / (8.0 * static_cast<double>(n_rows)));
        if (win[i] < win[i - 1] - 2.0 * se) {
            ok = false;
            why = "smoothed curve decreases from window " + std::to_string(i - 1) + " (" +
                  std::to_string(win[i - 1]) + " -> " + std::to_string(win[i]) + ")";
        }
    }

    const double step_gain = acc[64] - acc[62]; // positions 65 and 63, 1-indexed
    if (ok && step_gain < 0.02) {
        ok = false;
        why = "position 65 exceeds position 63 by only " + std::to_string(step_gain);
    }

    const double dt = now_seconds() - t0;
    if (ok && dt > 4 * 3600.0) {
        ok = false;
        why = "runtime exceeds 4h";
    }
    report(5, ok,
           "desk-scale learning on xslrr-12/6cb3: acc@128 = " + std::to_string(acc128) +
               ", step gain 63->65 = " + std::to_string(step_gain) + " (" +
               std::to_string(dt / 60.0).substr(0, 5) + " min)" +
               (why.empty() ? "" : ": " + why));
    if (ok) {
        g_run12.ckpt = res.checkpoint_path;
        g_run12.test = std::move(built.test);
        g_run12.train_ds = std::move(built.train);
    }
}

// ---------------------------------------------------------------- criterion 6
void criterion_6() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    // planted-exponent recovery
    for (double beta : {0.25, 0.5}) {
        std::vector<std::pair<double, double>> pts;
        for (int k = 10; k <= 22; k += 2) {
            const double m = std::pow(2.0, k);
            pts.emplace_back(m, 0.5 * std::pow(m, beta));
        }
        auto fit = fit_power_law(pts);
        if (std::abs(fit.exponent - beta) > 1e-10 || fit.residual >= 1e-10) {
            ok = false;
            why = "planted exponent " + std::to_string(beta) + " not recovered";
        }
    }

    std::vector<std::pair<double, double>> points;
    const ThresholdRule rule{ThresholdRule::Kind::Absolute, 0.9};

    // m = 2^10: train from scratch
    {
        auto built = build_desk_dataset(Variant::Xslrr, 10, 3, 128, 128, 32, 16, 129, 1002);
        TrainInputs in;
        in.train = &built.train;
        in.eval_sets.push_back({"xslrr10", &built.test, 0});
        TrainConfig tc;
        tc.steps = 2000;
        tc.batch_size = 64;
        tc.peak_lr = 3e-4;
        tc.warmup_steps = 150;
        tc.weight_decay = 0.1;
        tc.seed = 2002;
        tc.eval_every = 500;
        tc.eval_sequences = 128;
        tc.eval_positions = {16, 32, 128};
        tc.out_dir = g_work + "/c6_xslrr10";
        auto res = train(tc, desk_model(32), in);
        auto ck = load_checkpoint(res.checkpoint_path);
        auto evals = evaluate_dataset(ck.params, built.test, 0);
        auto cross = first_crossing(evals[0].curve, rule, 1ULL << 10);
        if (!cross) {
            ok = false;
            why = "m=2^10 model never crosses 90%";
        } else {
            points.emplace_back(std::pow(2.0, 10), static_cast<double>(*cross));
        }
    }

    // m = 2^12: the criterion-5 model
    if (ok) {
        if (g_run12.ckpt.empty()) {
            ok = false;
            why = "criterion 5 artifact unavailable";
        } else {
            auto ck = load_checkpoint(g_run12.ckpt);
            auto evals = evaluate_dataset(ck.params, g_run12.test, 0);
            auto cross = first_crossing(evals[0].curve, rule, 1ULL << 12);
            if (!cross) {
                ok = false;
                why = "m=2^12 model never crosses 90%";
            } else {
                points.emplace_back(std::pow(2.0, 12), static_cast<double>(*cross));
            }
        }
    }

    // m = 2^14: pretrained from the 2^12 checkpoint plus curriculum
    if (ok) {
        auto built = build_desk_dataset(Variant::Xslrr, 14, 3, 256, 256, 32, 16, 129, 1003);
        TrainInputs in;
        in.train = &built.train;
        in.curriculum = {&g_run12.train_ds};
        in.schedule.sources.push_back({"m12", 0.01});
        in.schedule.decay = Decay::Exponential;
        in.schedule.decay_steps = 2500;
        in.eval_sets.push_back({"xslrr14", &built.test, 0});
        TrainConfig tc;
        tc.steps = 3500;
        tc.batch_size = 64;
        tc.peak_lr = 3e-4;
        tc.warmup_steps = 200;
        tc.weight_decay = 0.1;
        tc.seed = 2003;
        tc.eval_every = 500;
        tc.eval_sequences = 128;
        tc.eval_positions = {64, 100, 128};
        tc.out_dir = g_work + "/c6_xslrr14";
        tc.init_checkpoint = g_run12.ckpt;
        auto res = train(tc, desk_model(128), in);
        auto ck = load_checkpoint(res.checkpoint_path);
        auto evals = evaluate_dataset(ck.params, built.test, 0);
        auto cross = first_crossing(evals[0].curve, rule, 1ULL << 14);
        if (!cross) {
            ok = false;
            why = "m=2^14 model never crosses 90%";
        } else {
            points.emplace_back(std::pow(2.0, 14), static_cast<double>(*cross));
        }
    }

    double beta = 0;
    if (ok) {
        auto fit = fit_power_law(points);
        beta = fit.exponent;
        if (beta < 0.3 || beta > 0.7) {
            ok = false;
            why = "fitted beta " + std::to_string(beta) + " outside [0.3, 0.7]";
        }
    }
    const double dt = now_seconds() - t0;
    std::string crossings;
    for (auto& [m, idx] : points)
        crossings += " " + std::to_string(static_cast<int>(idx)) + "@2^" +
                     std::to_string(static_cast<int>(std::log2(m)));
    report(6, ok,
           "scaling fit: planted exponents exact; trained crossings" + crossings + ", beta = " +
               std::to_string(beta) + " (" + std::to_string(dt / 60.0).substr(0, 5) + " min)" +
               (why.empty() ? "" : ": " + why));
}

// ---------------------------------------------------------------- criterion 7
void criterion_7() {
    bool ok = true;
    std::string why;
    Rng rng(777);
    for (int t = 0; t < 10 && ok; ++t) {
        ModelConfig cfg;
        cfg.n_layers = 1 + static_cast<int>(rng.next_below(8));
        cfg.n_heads = 8;
        cfg.d_model = 64 * (1 + static_cast<int>(rng.next_below(16)));
        cfg.vocab = 1 << (4 + rng.next_below(8));
        const uint64_t L = 16 * (1 + rng.next_below(64));
        auto fb = inference_flops(cfg, L);
        const uint64_t d = cfg.d_model, nl = cfg.n_layers, V = cfg.vocab;
        // independent recompute, factored differently
        const uint64_t attn = nl * L * d * (4 * d + 2 * L);
        const uint64_t mlp = nl * L * (8 * d * d);
        const uint64_t norm = nl * (2 * L * d);
        const uint64_t head = L * d * V;
        if (fb.attn != attn || fb.mlp != mlp || fb.norm != norm || fb.lm_head != head ||
            fb.total != attn + mlp + norm + head) {
            ok = false;
            why = "breakdown mismatch at trial " + std::to_string(t);
        }
        if (training_flops(fb, 512, 1000) != 3ULL * 512 * 1000 * fb.total) ok = false;
    }
    for (int k = 10; k <= 22 && ok; ++k) {
        const uint64_t m = 1ULL << k;
        const double expect = 3.75 * static_cast<double>(m) * static_cast<double>(m) *
                              std::sqrt(static_cast<double>(m));
        if (brute_force_ops(m) != expect) {
            ok = false;
            why = "brute-force ops differ from 3.75 m^2.5 at m=2^" + std::to_string(k);
        }
    }
    report(7, ok, std::string("FLOPs accounting (10 random configs, brute force 2^10..2^22)") +
                      (why.empty() ? "" : ": " + why));
}

// ---------------------------------------------------------------- criterion 8
void criterion_8() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    const std::vector<std::vector<uint32_t>> expected = {
        {255},
        {0},
        {127, 191, 223, 239, 247, 251, 253, 254},
        {63, 126, 159, 207, 231, 243, 249, 252},
        {31, 62, 124, 143, 199, 227, 241, 248},
        {15, 30, 60, 120, 135, 195, 225, 240},
        {7, 14, 28, 56, 112, 131, 193, 224},
        {3, 6, 12, 24, 48, 96, 129, 192},
        {1, 2, 4, 8, 16, 32, 64, 128},
        {95, 125, 175, 190, 215, 235, 245, 250, 111, 123, 183, 189, 219, 222, 237, 246, 119, 187,
         221, 238},
        {47, 94, 121, 151, 188, 203, 229, 242, 55, 110, 115, 155, 185, 205, 220, 230, 59, 103,
         118, 157, 179, 206, 217, 236, 61, 79, 122, 158, 167, 211, 233, 244},
        {23, 46, 92, 113, 139, 184, 197, 226, 27, 54, 99, 108, 141, 177, 198, 216, 29, 58, 71,
         116, 142, 163, 209, 232, 39, 57, 78, 114, 147, 156, 201, 228, 51, 102, 153, 204},
        {11, 22, 44, 88, 97, 133, 176, 194, 13, 26, 52, 67, 104, 134, 161, 208, 19, 38, 49, 76,
         98, 137, 152, 196, 25, 35, 50, 70, 100, 140, 145, 200},
        {5, 10, 20, 40, 65, 80, 130, 160, 9, 18, 33, 36, 66, 72, 132, 144, 17, 34, 68, 136},
        {87, 93, 117, 171, 174, 186, 213, 234, 91, 107, 109, 173, 181, 182, 214, 218},
        {43, 86, 89, 101, 149, 172, 178, 202, 45, 75, 90, 105, 150, 165, 180, 210, 53, 77, 83,
         106, 154, 166, 169, 212},
        {21, 42, 69, 81, 84, 138, 162, 168, 37, 41, 73, 74, 82, 146, 148, 164},
        {85, 170},
    };

    auto cl = cluster_tokens(8);
    if (cl.count() != 18) {
        ok = false;
        why = "expected 18 clusters, got " + std::to_string(cl.count());
    }
    size_t assignments = 0;
    for (size_t cid = 0; ok && cid < expected.size(); ++cid) {
        std::set<uint32_t> want(expected[cid].begin(), expected[cid].end());
        std::set<uint32_t> got(cl.members[cid].begin(), cl.members[cid].end());
        assignments += want.size();
        if (want != got) {
            ok = false;
            why = "cluster " + std::to_string(cid + 1) + " membership differs";
        }
    }
    const double dt = now_seconds() - t0;
    if (ok && dt >= 1.0) {
        ok = false;
        why = "runtime exceeds 1s";
    }
    report(8, ok,
           "zero-run clustering reproduces all 18 published clusters (" +
               std::to_string(assignments) + " token assignments)" +
               (why.empty() ? "" : ": " + why));
}

// ---------------------------------------------------------------- criterion 9
void criterion_9() {
    bool ok = true;
    std::string why;

    CurriculumSchedule s;
    s.sources.push_back({"", 0.2});
    s.decay_steps = 40000;
    auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
    for (Decay d : {Decay::Linear, Decay::Cosine, Decay::Exponential, Decay::Step}) {
        s.decay = d;
        if (!close(curriculum_alpha(s, 0)[0], 0.2)) ok = false;
        if (curriculum_alpha(s, 40000)[0] != 0.0) ok = false;
        if (curriculum_alpha(s, 100000)[0] != 0.0) ok = false;
    }
    s.decay = Decay::Linear;
    if (!close(curriculum_alpha(s, 20000)[0], 0.1)) ok = false;
    s.decay = Decay::Cosine;
    if (!close(curriculum_alpha(s, 20000)[0], 0.1)) ok = false;
    s.decay = Decay::Exponential;
    if (!close(curriculum_alpha(s, 20000)[0], 0.2 * 0.01)) ok = false;
    s.decay = Decay::Step;
    if (!close(curriculum_alpha(s, 25000)[0], 0.05)) ok = false;
    if (!ok) why = "schedule identities";

    // sampler mixing over 10^6 draws
    if (ok) {
        GeneratorSpec g = make_spec(Variant::Xslrr, 10, 5, 3);
        SplitSpec split;
        split.n_a = 8;
        split.n_c = 8;
        split.n_test_a = 1;
        split.n_test_c = 1;
        split.seed = 33;
        auto target = build_dataset({g}, split, 9).train;
        auto source = build_dataset({g}, split, 9).train;
        CurriculumSchedule sched;
        sched.sources.push_back({"src", 0.01});
        BatchSampler sampler(&target, {&source}, sched, 99);
        std::vector<int> batch;
        uint64_t from_source = 0;
        const uint64_t draws = 1000000;
        for (uint64_t i = 0; i < draws / 1000; ++i) {
            auto info = sampler.sample(0, 1000, batch);
            from_source += info.rows_per_source[0];
        }
        const double frac = static_cast<double>(from_source) / static_cast<double>(draws);
        const double sigma = std::sqrt(0.01 * 0.99 / static_cast<double>(draws));
        if (std::abs(frac - 0.01) >= 3 * sigma) {
            ok = false;
            why = "mixing fraction " + std::to_string(frac) + " outside 3 sigma";
        }
    }

    // embedding transfer
    if (ok) {
        ModelConfig src_cfg;
        src_cfg.n_layers = 2;
        src_cfg.n_heads = 2;
        src_cfg.d_model = 32;
        src_cfg.vocab = 256;
        src_cfg.context = 16;
        auto src = init_params<float>(src_cfg, 5);
        ModelConfig tgt_cfg = src_cfg;
        tgt_cfg.vocab = 512;
        auto out = transfer_embeddings(src, tgt_cfg, 6);
        size_t copied = 0;
        for (int r = 0; r < src_cfg.vocab; ++r)
            for (int j = 0; j < src_cfg.d_model; ++j)
                if (out.embedding.at(r, j) == src.embedding.at(r, j) &&
                    out.lm_head.at(r, j) == src.lm_head.at(r, j))
                    ++copied;
        if (copied != static_cast<size_t>(src_cfg.vocab) * src_cfg.d_model) {
            ok = false;
            why = "overlap rows not copied bit-exactly";
        }
        bool fresh_differ = false;
        for (int r = src_cfg.vocab; r < tgt_cfg.vocab && !fresh_differ; ++r)
            for (int j = 0; j < src_cfg.d_model; ++j)
                if (out.embedding.at(r, j) != src.embedding.at(r % src_cfg.vocab, j))
                    fresh_differ = true;
        if (!fresh_differ) {
            ok = false;
            why = "fresh rows identical to source rows";
        }
    }
    report(9, ok, std::string("curriculum mechanics: schedules, 10^6-draw mixing, transfer") +
                      (why.empty() ? "" : ": " + why));
}

// --------------------------------------------------------------- criterion 10
void criterion_10() {
    const double t0 = now_seconds();
    bool ok = true;
    std::string why;

    if (g_run12.ckpt.empty()) {
        report(10, false, "curriculum effect: criterion 5 checkpoint unavailable");
        return;
    }

    // Pinned loss threshold on the m=2^14 test set. Chance level is
    // ln(128) = 4.852; the threshold asks for a clear step below it.
    const double loss_threshold = 4.3;
    const uint64_t max_steps = 900;
    const uint64_t probe_every = 25;

    auto built = build_desk_dataset(Variant::Xslrr, 14, 3, 256, 256, 16, 8, 129, 1004);

    auto crossing_step = [&](bool pretrained, uint64_t seed) -> uint64_t {
        TrainInputs in;
        in.train = &built.train;
        if (pretrained) {
            in.curriculum = {&g_run12.train_ds};
            in.schedule.sources.push_back({"m12", 0.01});
            in.schedule.decay = Decay::Exponential;
            in.schedule.decay_steps = 700;
        }
        in.eval_sets.push_back({"xslrr14", &built.test, 0});
        TrainConfig tc;
        tc.steps = max_steps;
        tc.batch_size = 32;
        tc.peak_lr = 3e-4;
        tc.warmup_steps = 50;
        tc.weight_decay = 0.1;
        tc.seed = seed;
        tc.eval_every = probe_every;
        tc.eval_sequences = 128;
        tc.eval_positions = {64, 128};
        tc.out_dir = g_work + "/c10_" + (pretrained ? "pre" : "rand") + std::to_string(seed);
        if (pretrained) tc.init_checkpoint = g_run12.ckpt;
        auto res = train(tc, desk_model(128), in);

        // scan the metrics stream for the first eval below threshold
        std::ifstream f(res.metrics_path);
        std::string line;
        std::getline(f, line); // header
        auto cols = [&](const std::string& row) {
            std::vector<std::string> out;
            std::string cur;
            std::istringstream is(row);
            while (std::getline(is, cur, ',')) out.push_back(cur);
            return out;
        };
        auto header_cols = cols(line);
        size_t loss_col = SIZE_MAX;
        for (size_t i = 0; i < header_cols.size(); ++i)
            if (header_cols[i] == "test_loss_xslrr14") loss_col = i;
        if (loss_col == SIZE_MAX) return UINT64_MAX;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            auto c = cols(line);
            if (c.size() <= loss_col) continue;
            if (std::stod(c[loss_col]) < loss_threshold)
                return static_cast<uint64_t>(std::stoull(c[0]));
        }
        return UINT64_MAX;
    };

    std::string detail;
    for (uint64_t seed : {501, 502, 503}) {
        const uint64_t pre = crossing_step(true, seed);
        const uint64_t rnd = crossing_step(false, seed);
        detail += " seed" + std::to_string(seed) + ": pre=" +
                  (pre == UINT64_MAX ? std::string("never") : std::to_string(pre)) + " rand=" +
                  (rnd == UINT64_MAX ? std::string("never") : std::to_string(rnd));
        if (pre == UINT64_MAX || pre >= rnd) {
            ok = false;
            why = "pretrained run not strictly faster for seed " + std::to_string(seed);
        }
    }
    const double dt = now_seconds() - t0;
    report(10, ok,
           "curriculum effect (loss < 4.3 on xslrr-14/7):" + detail + " (" +
               std::to_string(dt / 60.0).substr(0, 5) + " min)" +
               (why.empty() ? "" : ": " + why));
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto want = [&](int c) { return only.empty() || only.count(c) > 0; };

    g_work = "acceptance_work";
    std::filesystem::create_directories(g_work);
    std::printf("acceptance suite, %d thread(s), work dir %s\n", kernels::threads(),
                g_work.c_str());

    if (want(1)) criterion_1();
    if (want(2)) criterion_2();
    if (want(3)) criterion_3();
    if (want(4)) criterion_4();
    if (want(7)) criterion_7();
    if (want(8)) criterion_8();
    if (want(9)) criterion_9();
    if (want(5)) criterion_5();
    if (want(6)) criterion_6();
    if (want(10)) criterion_10();

    if (g_failures == 0) std::printf("all acceptance criteria passed\n");
    else std::printf("%d criterion/criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
