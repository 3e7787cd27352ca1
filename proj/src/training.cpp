#include "pcglab/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "pcglab/evaluation.hpp"
#include "pcglab/kernels.hpp"

namespace pcglab {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (warmup_steps >= steps && steps > 0)
        throw std::invalid_argument("warmup_steps must be < steps");
    if (peak_lr <= 0) throw std::invalid_argument("peak_lr must be positive");
    if (eval_every == 0) throw std::invalid_argument("eval_every must be >= 1");
}

double lr_at(uint64_t step, const TrainConfig& cfg) {
    if (step > cfg.steps) step = cfg.steps;
    if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
        return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    if (cfg.steps == cfg.warmup_steps) return cfg.peak_lr;
    const double progress = static_cast<double>(step - cfg.warmup_steps) /
                            static_cast<double>(cfg.steps - cfg.warmup_steps);
    return cfg.peak_lr * (1.0 + std::cos(3.141592653589793 * progress)) / 2.0;
}

void adamw_step(ModelParams<float>& params, ModelParams<float>& grads, OptState& opt, double lr,
                const TrainConfig& cfg) {
    opt.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));

    size_t idx = 0;
    std::vector<std::pair<std::vector<float>*, std::vector<float>*>> tensors;
    for_each_tensor(params, [&](const std::string&, std::vector<float>& t) {
        tensors.emplace_back(&t, nullptr);
    });
    for_each_tensor(grads, [&](const std::string& name, std::vector<float>& g) {
        for (float x : g)
            if (!std::isfinite(x))
                throw std::runtime_error("non-finite gradient in " + name);
        tensors[idx++].second = &g;
    });
    if (opt.m.size() != tensors.size()) {
        opt.m.resize(tensors.size());
        opt.v.resize(tensors.size());
        for (size_t i = 0; i < tensors.size(); ++i) {
            opt.m[i].assign(tensors[i].first->size(), 0.0f);
            opt.v[i].assign(tensors[i].first->size(), 0.0f);
        }
    }

    for (size_t i = 0; i < tensors.size(); ++i) {
        auto& p = *tensors[i].first;
        auto& g = *tensors[i].second;
        auto& m = opt.m[i];
        auto& v = opt.v[i];
        const float b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
#pragma omp parallel for schedule(static) num_threads(kernels::threads())
        for (long long j = 0; j < static_cast<long long>(p.size()); ++j) {
            m[j] = b1 * m[j] + (1.0f - b1) * g[j];
            v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
            const double mh = m[j] / bc1;
            const double vh = v[j] / bc2;
            p[j] = static_cast<float>(p[j] - lr * (mh / (std::sqrt(vh) + cfg.eps) +
                                                   cfg.weight_decay * p[j]));
        }
    }
}

namespace {

double grad_global_norm(ModelParams<float>& grads) {
    double sum = 0.0;
    for_each_tensor(grads, [&](const std::string&, std::vector<float>& g) {
        for (float x : g) sum += static_cast<double>(x) * x;
    });
    return std::sqrt(sum);
}

void scale_grads(ModelParams<float>& grads, float s) {
    for_each_tensor(grads, [&](const std::string&, std::vector<float>& g) {
        for (auto& x : g) x *= s;
    });
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

} // namespace

TrainResult train(const TrainConfig& cfg, const ModelConfig& model_cfg, const TrainInputs& inputs,
                  const std::string& resume_from) {
    cfg.validate();
    model_cfg.validate();
    if (!inputs.train) throw std::invalid_argument("no training dataset");
    const DatasetFile& train_ds = *inputs.train;
    if (static_cast<int>(train_ds.vocab) != model_cfg.vocab)
        throw std::invalid_argument("model vocab does not match training dataset vocab");
    const int row_tokens = static_cast<int>(train_ds.row_tokens());
    const int L = row_tokens - 1;
    if (L > model_cfg.context)
        throw std::invalid_argument("training rows do not fit the model context");
    for (auto* src : inputs.curriculum)
        if (static_cast<int>(src->vocab) > model_cfg.vocab)
            throw std::invalid_argument("curriculum source vocab exceeds model vocab");
    for (const auto& es : inputs.eval_sets)
        if (es.group >= es.data->groups.size())
            throw std::invalid_argument("eval set group out of range");

    std::filesystem::create_directories(cfg.out_dir);

    ModelParams<float> params;
    OptState opt;
    uint64_t start_step = 0;
    if (!resume_from.empty()) {
        Checkpoint ck = load_checkpoint(resume_from);
        if (!(ck.params.config == model_cfg))
            throw std::invalid_argument("resume checkpoint config differs from model config");
        params = std::move(ck.params);
        if (!ck.opt) throw std::invalid_argument("resume checkpoint has no optimizer state");
        opt = std::move(*ck.opt);
        start_step = opt.step;
    } else if (!cfg.init_checkpoint.empty()) {
        Checkpoint ck = load_checkpoint(cfg.init_checkpoint);
        if (ck.params.config == model_cfg) {
            params = std::move(ck.params);
        } else {
            // vocab/context growth: transfer overlapping rows, keep all weights
            params = transfer_embeddings(ck.params, model_cfg, cfg.seed ^ 0x7ad5f3u);
        }
    } else {
        params = init_params<float>(model_cfg, cfg.seed);
    }

    ModelParams<float> grads = alloc_params<float>(model_cfg);
    Workspace<float> ws;

    BatchSampler sampler(&train_ds, inputs.curriculum, inputs.schedule, cfg.seed ^ 0xba7c511eULL);
    std::vector<int> batch_tokens;
    // replay consumed draws so a resumed run sees the same batch stream
    for (uint64_t s = 0; s < start_step; ++s) sampler.sample(s, cfg.batch_size, batch_tokens);

    const std::string metrics_path = cfg.out_dir + "/metrics.csv";
    const bool fresh_metrics = !std::filesystem::exists(metrics_path) || resume_from.empty();
    std::ofstream metrics(metrics_path, fresh_metrics ? std::ios::trunc : std::ios::app);
    if (!metrics) throw std::runtime_error("cannot open metrics file: " + metrics_path);
    if (fresh_metrics) {
        metrics << "step,lr";
        for (size_t i = 0; i < inputs.schedule.sources.size(); ++i)
            metrics << ",alpha_src" << i;
        metrics << ",train_loss";
        for (const auto& es : inputs.eval_sets) metrics << ",test_loss_" << es.label;
        for (const auto& es : inputs.eval_sets)
            for (int p : cfg.eval_positions) metrics << ",acc@" << p << "_" << es.label;
        for (size_t i = 0; i < inputs.schedule.sources.size(); ++i)
            metrics << ",mixfrac_src" << i;
        metrics << ",grad_clip,wall_time\n";
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<int> in_tokens(static_cast<size_t>(cfg.batch_size) * L);
    std::vector<int> tgt_tokens(static_cast<size_t>(cfg.batch_size) * L);

    // per-eval-window mixing accounting
    std::vector<uint64_t> src_rows(inputs.curriculum.size(), 0);
    uint64_t window_rows = 0;

    auto write_eval_row = [&](uint64_t step, double train_loss) {
        metrics << step << "," << fmt(lr_at(step, cfg));
        auto alphas = curriculum_alpha(inputs.schedule, step);
        for (double a : alphas) metrics << "," << fmt(a);
        metrics << "," << fmt(train_loss);
        std::vector<std::vector<GroupEval>> cache;
        std::vector<const DatasetFile*> seen;
        auto eval_of = [&](const EvalSet& es) -> GroupEval {
            for (size_t i = 0; i < seen.size(); ++i)
                if (seen[i] == es.data) return cache[i][es.group];
            cache.push_back(
                evaluate_dataset(params, *es.data, cfg.eval_sequences, nullptr, cfg.batch_size));
            seen.push_back(es.data);
            return cache.back()[es.group];
        };
        std::vector<GroupEval> evals;
        for (const auto& es : inputs.eval_sets) evals.push_back(eval_of(es));
        for (const auto& ev : evals) metrics << "," << fmt(ev.mean_loss);
        for (const auto& ev : evals)
            for (int p : cfg.eval_positions) {
                if (p < 1 || p > static_cast<int>(ev.curve.accuracy.size()))
                    throw std::invalid_argument("eval position outside curve");
                metrics << "," << fmt(ev.curve.accuracy[p - 1]);
            }
        for (size_t i = 0; i < src_rows.size(); ++i)
            metrics << ","
                    << fmt(window_rows ? static_cast<double>(src_rows[i]) / window_rows : 0.0);
        metrics << "," << fmt(cfg.grad_clip) << "," << fmt(wall()) << "\n";
        metrics.flush();
        std::fill(src_rows.begin(), src_rows.end(), 0);
        window_rows = 0;
    };

    TrainResult result;
    result.metrics_path = metrics_path;
    double last_loss = 0.0;

    for (uint64_t step = start_step; step < cfg.steps; ++step) {
        auto info = sampler.sample(step, cfg.batch_size, batch_tokens);
        for (size_t i = 0; i < info.rows_per_source.size(); ++i)
            src_rows[i] += info.rows_per_source[i];
        window_rows += cfg.batch_size;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const int* row = batch_tokens.data() + static_cast<size_t>(b) * row_tokens;
            std::copy(row, row + L, in_tokens.data() + static_cast<size_t>(b) * L);
            std::copy(row + 1, row + 1 + L, tgt_tokens.data() + static_cast<size_t>(b) * L);
        }

        forward(params, in_tokens.data(), cfg.batch_size, L, ws);
        last_loss = cross_entropy(ws, tgt_tokens.data());
        if (step % cfg.eval_every == 0) write_eval_row(step, last_loss);

        backward(params, in_tokens.data(), tgt_tokens.data(), cfg.batch_size, L, ws, grads);
        if (cfg.grad_clip > 0) {
            const double norm = grad_global_norm(grads);
            if (norm > cfg.grad_clip)
                scale_grads(grads, static_cast<float>(cfg.grad_clip / norm));
        }
        adamw_step(params, grads, opt, lr_at(step, cfg), cfg);

        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
            step + 1 < cfg.steps) {
            save_checkpoint(cfg.out_dir + "/ckpt_step" + std::to_string(step + 1) + ".pcgm",
                            params, &opt);
        }
    }

    write_eval_row(cfg.steps, last_loss);
    result.checkpoint_path = cfg.out_dir + "/final.pcgm";
    save_checkpoint(result.checkpoint_path, params, &opt);
    result.steps_done = cfg.steps - start_step;
    result.final_train_loss = last_loss;
    return result;
}

} // namespace pcglab
