// Single entry point for the whole workflow: dataset generation, training,
// evaluation, the brute-force attack and the analysis commands. Flags override
// config-file values; every run leaves a resolved.cfg in its output directory.

#include <CLI11.hpp>

#include <string>
#include <vector>

#include "pcglab/cli.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seed, out_dir, threads;
};

void add_common(CLI::App* cmd, CommonFlags& fl) {
    cmd->add_option("--config", fl.config_path, "configuration file");
    cmd->add_option("--set", fl.sets, "override: section.key=value")->take_all();
    cmd->add_option("--seed", fl.seed, "override run.seed");
    cmd->add_option("--out-dir", fl.out_dir, "override run.out_dir");
    cmd->add_option("--threads", fl.threads, "override run.threads");
}

pcglab::RunConfig assemble(const std::string& command, const CommonFlags& fl,
                           const std::vector<std::pair<std::string, std::string>>& flag_keys) {
    pcglab::RunConfig run;
    run.command = command;
    if (!fl.config_path.empty()) run.config = pcglab::parse_config_file(fl.config_path);
    for (const auto& [key, value] : flag_keys)
        if (!value.empty()) run.config.set(key, value);
    if (!fl.seed.empty()) run.config.set("run.seed", fl.seed);
    if (!fl.out_dir.empty()) run.config.set("run.out_dir", fl.out_dir);
    if (!fl.threads.empty()) run.config.set("run.threads", fl.threads);
    for (const auto& s : fl.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set wants section.key=value");
        run.config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    return run;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pcglab: PCG sequence-learning laboratory"};
    app.require_subcommand(1);

    int exit_code = 0;
    auto run_later = [&](const std::string& name, const CommonFlags& fl,
                         const std::vector<std::pair<std::string, std::string>>& keys) {
        exit_code = pcglab::dispatch(assemble(name, fl, keys));
    };

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "materialize train/test datasets");
    static CommonFlags gen_fl;
    static std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "dataset spec file (same as --config)");
    gen->add_option("--out", gen_out, "output directory");
    add_common(gen, gen_fl);
    gen->callback([&] {
        CommonFlags fl = gen_fl;
        if (!gen_spec.empty()) fl.config_path = gen_spec;
        if (!gen_out.empty()) fl.out_dir = gen_out;
        run_later("gen-data", fl, {});
    });

    // train
    auto* tr = app.add_subcommand("train", "run the training loop");
    static CommonFlags tr_fl;
    static std::string tr_resume;
    tr->add_option("--resume", tr_resume, "checkpoint to resume from");
    add_common(tr, tr_fl);
    tr->callback([&] { run_later("train", tr_fl, {{"train.resume", tr_resume}}); });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "accuracy-by-position curves");
    static CommonFlags ev_fl;
    static std::string ev_ckpt, ev_data, ev_out;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint file");
    ev->add_option("--data", ev_data, "test dataset");
    ev->add_option("--out", ev_out, "output CSV name");
    add_common(ev, ev_fl);
    ev->callback([&] {
        run_later("evaluate", ev_fl,
                  {{"evaluate.ckpt", ev_ckpt}, {"evaluate.data", ev_data}, {"evaluate.out", ev_out}});
    });

    // attack
    auto* at = app.add_subcommand("attack", "brute-force (a, c, s0) recovery");
    static CommonFlags at_fl;
    static std::string at_variant, at_sb, at_cb, at_ob, at_outputs, at_steps, at_out;
    static bool at_override = false;
    at->add_option("--variant", at_variant, "tlcg|xslrr|xshrr|xshrs");
    at->add_option("--state-bits", at_sb, "state width in bits");
    at->add_option("--cb", at_cb, "control bits");
    at->add_option("--output-bits", at_ob, "output width (defaults per variant)");
    at->add_option("--outputs", at_outputs, "observed outputs: file or inline csv");
    at->add_option("--continue-steps", at_steps, "continuation length to emit");
    at->add_option("--out", at_out, "survivors CSV name");
    at->add_flag("--override-size-guard", at_override, "allow state_bits > 14");
    add_common(at, at_fl);
    at->callback([&] {
        std::vector<std::pair<std::string, std::string>> keys = {
            {"attack.variant", at_variant},   {"attack.state_bits", at_sb},
            {"attack.control_bits", at_cb},   {"attack.output_bits", at_ob},
            {"attack.outputs", at_outputs},   {"attack.continue_steps", at_steps},
            {"attack.out", at_out},
        };
        if (at_override) keys.emplace_back("attack.override_size_guard", "true");
        run_later("attack", at_fl, keys);
    });

    // fit-scaling
    auto* fs = app.add_subcommand("fit-scaling", "power-law fit of crossing indices");
    static CommonFlags fs_fl;
    static std::string fs_points, fs_rule, fs_out;
    fs->add_option("--points", fs_points, "csv of m,index or m,curve.csv rows");
    fs->add_option("--rule", fs_rule, "abs:<v> | add:<eps> | mul:<gamma>");
    fs->add_option("--out", fs_out, "output CSV name");
    add_common(fs, fs_fl);
    fs->callback([&] {
        run_later("fit-scaling", fs_fl,
                  {{"fit-scaling.points", fs_points},
                   {"fit-scaling.rule", fs_rule},
                   {"fit-scaling.out", fs_out}});
    });

    // flops
    auto* fp = app.add_subcommand("flops", "inference/training cost accounting");
    static CommonFlags fp_fl;
    static std::string fp_L, fp_batch, fp_steps, fp_m;
    fp->add_option("--L", fp_L, "sequence length");
    fp->add_option("--batch", fp_batch, "batch size for training cost");
    fp->add_option("--steps", fp_steps, "step count for training cost");
    fp->add_option("--m", fp_m, "modulus for the brute-force baseline");
    add_common(fp, fp_fl);
    fp->callback([&] {
        run_later("flops", fp_fl,
                  {{"flops.L", fp_L},
                   {"flops.batch", fp_batch},
                   {"flops.steps", fp_steps},
                   {"flops.m", fp_m}});
    });

    // analysis commands share the [analyze] block
    auto add_analysis = [&](const std::string& name, const std::string& desc, bool with_position) {
        auto* cmd = app.add_subcommand(name, desc);
        auto fl = std::make_shared<CommonFlags>();
        auto ckpt = std::make_shared<std::string>();
        auto data = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto n_eval = std::make_shared<std::string>();
        auto position = std::make_shared<std::string>();
        auto top_k = std::make_shared<std::string>();
        auto components = std::make_shared<std::string>();
        cmd->add_option("--ckpt", *ckpt, "checkpoint file");
        if (name != "analyze-embeddings") {
            cmd->add_option("--data", *data, "test dataset (csv of paths for separation)");
            cmd->add_option("--data-per-variant", *data, "alias of --data");
            cmd->add_option("--n-eval", *n_eval, "sequences per group");
        } else {
            cmd->add_option("--components", *components, "principal components to keep");
        }
        if (with_position) cmd->add_option("--position", *position, "prediction position");
        if (name == "analyze-attention") cmd->add_option("--top-k", *top_k, "keys per query");
        cmd->add_option("--out", *out, "output name(s)");
        add_common(cmd, *fl);
        cmd->callback([=, &exit_code] {
            std::vector<std::pair<std::string, std::string>> keys = {
                {"analyze.ckpt", *ckpt},     {"analyze.data", *data},
                {"analyze.out", *out},       {"analyze.n_eval", *n_eval},
                {"analyze.position", *position}, {"analyze.top_k", *top_k},
                {"analyze.components", *components},
            };
            exit_code = pcglab::dispatch(assemble(name, *fl, keys));
        });
    };
    add_analysis("analyze-embeddings", "PCA + zero-run clusters of the embedding matrix", false);
    add_analysis("analyze-separation", "per-variant activation separation", false);
    add_analysis("analyze-attention", "attention distance histograms", false);
    add_analysis("ablate-heads", "per-head value-slice ablation sweep", true);

    CLI11_PARSE(app, argc, argv);
    return exit_code;
}
