#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcglab/dataset.hpp"
#include "pcglab/model.hpp"

namespace pcglab {

struct TrainConfig {
    uint64_t steps = 5000;
    int batch_size = 64;
    double peak_lr = 3e-4;
    uint64_t warmup_steps = 200;
    double weight_decay = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip = 1.0; // global-norm clip; <= 0 disables
    uint64_t seed = 0;
    uint64_t eval_every = 250;
    uint64_t checkpoint_every = 0; // 0: checkpoint only at the end
    int eval_sequences = 128;
    std::vector<int> eval_positions = {32, 64, 128};
    std::string init_checkpoint; // empty: random init
    std::string out_dir = ".";

    void validate() const;
};

// Linear warmup to peak_lr, then cosine decay to zero at `steps`.
double lr_at(uint64_t step, const TrainConfig& cfg);

// Decoupled weight decay update. Throws on non-finite gradients.
void adamw_step(ModelParams<float>& params, ModelParams<float>& grads, OptState& opt, double lr,
                const TrainConfig& cfg);

// Named evaluation source: one spec group of one test file.
struct EvalSet {
    std::string label;
    const DatasetFile* data = nullptr;
    size_t group = 0;
};

struct TrainInputs {
    const DatasetFile* train = nullptr;              // target dataset
    std::vector<const DatasetFile*> curriculum;      // auxiliary datasets
    CurriculumSchedule schedule;                     // alphas for `curriculum`
    std::vector<EvalSet> eval_sets;
};

struct TrainResult {
    std::string checkpoint_path;
    std::string metrics_path;
    uint64_t steps_done = 0;
    double final_train_loss = 0.0;
};

// Runs the sample -> forward -> loss -> backward -> update loop, evaluating
// every eval_every steps (including step 0) and appending one CSV row per
// evaluation. Checkpoints land in cfg.out_dir; `resume_from` continues a run
// from a checkpoint that carries optimizer state, replaying the batch stream
// up to the saved step so the sampler sequence is unchanged.
TrainResult train(const TrainConfig& cfg, const ModelConfig& model_cfg, const TrainInputs& inputs,
                  const std::string& resume_from = "");

} // namespace pcglab
