#pragma once

#include <filesystem>
#include <functional>
#include <map>

#include "scgn/data.hpp"
#include "scgn/losses.hpp"
#include "scgn/model.hpp"

namespace scgn {

/// Raised when training hits a non-finite loss or gradient.
struct TrainingAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double lr_generator = 1e-4;
    double lr_discriminator = 1e-5;
    double decay_factor = 0.1;
    std::int64_t decay_at_iteration = 185700;
    double epsilon = 1e-8;

    void validate() const;
};

struct TrainConfig {
    std::int64_t total_iterations = 371400;
    int batch_size = 1;
    LossWeights weights;
    OptimizerConfig optimizer;
    AblationFlags ablation;
    SharpnessConfig sharpness;
    std::int64_t checkpoint_interval = 10000;
    std::uint64_t seed = 1;
    bool vdn_input_ground_truth = false;  // feed I^gt (not I^s) to the decomposition net

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

/// Optimizer moments, iteration counter, and sampling state.
struct TrainState {
    std::int64_t iteration = 0;
    ParamMap moment1, moment2;                    // Adam moments, keyed like the parameters
    std::map<std::string, std::int64_t> adam_steps;  // per-partition bias-correction counters
    Rng rng{1};
    std::vector<LossReport> history;
};

TrainState make_train_state(const ModelBundle& bundle, std::uint64_t seed);

enum class WhichRate { generator, discriminator };

/// Step schedule: the base rate before `decay_at_iteration`, base*decay_factor
/// at and after it. Products are rounded back onto the decimal grid so decayed
/// decimal config values stay exact.
double learning_rate(std::int64_t t, const OptimizerConfig& cfg, WhichRate which);

/// One Adam update of a single partition; used by train_step and exposed for
/// optimizer-level tests.
void adam_step(ModelBundle& bundle, TrainState& state, const ParamMap& grads, Partition partition,
               double lr, const OptimizerConfig& cfg);

enum class SubStep { discriminator, generator, decomposer };
using StepObserver = std::function<void(SubStep)>;

/// One iteration of the alternating scheme: synthesize and decompose with
/// iteration-start parameters, then update theta_D on L_disc (synthesized view
/// held constant), theta_G on L_G (with the updated discriminator), and
/// theta_V on L_vc, in that order. Each sub-update touches exactly its own
/// partition. The observer, when given, runs after each applied sub-step.
LossReport train_step(ModelBundle& bundle, const std::vector<ViewTriplet>& batch, TrainState& state,
                      const TrainConfig& cfg, const StepObserver& observer = {});

struct FitResult {
    std::vector<LossReport> history;
    std::filesystem::path loss_csv;
    std::vector<std::filesystem::path> checkpoints;
};

/// Runs the training loop for cfg.total_iterations, sampling mini-batches
/// uniformly with replacement. Writes loss.csv, run_manifest.json, and
/// ckpt_<t>.scgn files under out_dir. Pass a state to resume mid-run (the
/// CSV then contains only the resumed iterations).
FitResult fit(ModelBundle& bundle, const std::vector<ViewTriplet>& dataset, const TrainConfig& cfg,
              const std::filesystem::path& out_dir, TrainState* resume_state = nullptr);

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
    int excluded = 0;  // samples skipped by the smoothness (kink) test
    std::string worst_name;
    std::int64_t worst_index = -1;
    double worst_analytic = 0.0, worst_numeric = 0.0;
};

/// Central finite differences (step 1e-4) against the analytic gradients of
/// L_G w.r.t. theta_G, L_vc w.r.t. theta_V, and L_disc w.r.t. theta_D on a
/// tiny bundle (<= 500 parameters). Samples that straddle an activation kink
/// (detected by a two-step-size consistency test) are excluded.
GradCheckResult gradient_check(const ModelBundle& bundle, const ViewTriplet& triplet, const TrainConfig& cfg,
                               int samples_per_partition, std::uint64_t seed);

// --- checkpointing -----------------------------------------------------

/// Single-file archive: the network specs, every parameter, and the trainer
/// state (iteration, moments, rng). Loading validates every tensor shape
/// against the embedded specs and fails loudly on mismatch.
void save_checkpoint(const std::filesystem::path& file, const ModelBundle& bundle, const TrainState& state);

struct Checkpoint {
    ModelBundle bundle;
    TrainState state;
};

Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace scgn
