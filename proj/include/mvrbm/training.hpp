#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mvrbm/metrics.hpp"
#include "mvrbm/oracle.hpp"
#include "mvrbm/prediction.hpp"

namespace mvrbm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Objective {
  generative,       // data log-likelihood
  discriminative,   // conditional log-likelihood of one target variable
  hybrid,           // lambda * generative(inputs) + (1 - lambda) * discriminative
  pretrain_finetune // generative on inputs, then discriminative from there
};

const char* objective_name(Objective objective);
Objective objective_from_name(std::string_view name);

struct TrainConfig {
  int hidden_units = 10;
  int epochs = 30;
  int batch_size = 100;
  double learning_rate = 0.05;
  double momentum = 0.5;
  double weight_decay = 1e-4;  // applied to hidden-interaction weights only
  int cd_steps = 1;
  double lambda = 0.5;  // hybrid mix, weight of the generative term
  std::uint64_t seed = 0;
  Objective objective = Objective::generative;
  std::optional<std::size_t> target;  // required unless generative
  bool freeze_gamma = false;
  double init_scale = 0.01;
  int threads = 1;
  // Replaces the CD estimate with the enumerated gradient; only viable for
  // models small enough for `budget`.
  bool exact_gradient = false;
  EnumerationBudget budget{};
  // Candidate outputs for a continuous discriminative target. The conditional
  // likelihood is normalized over these points (discrete targets enumerate
  // their value space exactly and ignore the grid).
  Grid target_grid{-3.0, 3.0, 21};
  bool track_reconstruction = true;
  // Per-stage epoch counts for pretrain_finetune; unset means `epochs`.
  std::optional<int> pretrain_epochs;
  std::optional<int> finetune_epochs;
};

// One line of the training log. `objective` is the exact per-instance
// log-likelihood when exact_gradient is on; otherwise the generative value is
// the mean negative free energy (unnormalized) and the discriminative value
// stays exact. Reconstruction errors are per-type, on the training data.
struct EpochLog {
  int epoch = 0;
  double objective = 0.0;
  EvalReport reconstruction;
  double wall_ms = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

// Throws ConfigError on out-of-range fields, a missing/invalid target for
// objectives that need one, or a target value space larger than the budget.
void validate_config(const TrainConfig& config, const DatasetSchema& schema);

// Zero hidden biases, gamma = 1, interaction weights uniform on
// [-init_scale, init_scale]. With a dataset, input biases start at the
// independent-model fit of each variable's observed entries (log-odds,
// log-frequencies, the mean, a moment-matched level trend, or pairwise-rate
// strengths); without one they start at zero.
ModelParams init_params(const DatasetSchema& schema, int hidden_units, double init_scale,
                        std::uint64_t seed, const Dataset* data = nullptr);

// Batch gradients. All return parameter-shaped sums over contributing
// instances with `instance_count` set; callers divide to average.
GradientAccumulator generative_batch_gradient(const ModelParams& params,
                                              std::span<const Instance> batch,
                                              const TrainConfig& config, Rng& cd_rng);

// Exact gradient of sum_i log P(target_i | inputs_i) over instances with an
// observed target, by enumerating the target's value space (grid points for a
// continuous target). Inputs are clamped; their bias gradients are exactly
// zero. Instances missing the target are skipped.
GradientAccumulator discriminative_batch_gradient(const ModelParams& params,
                                                  std::span<const Instance> batch,
                                                  std::size_t target, const Grid& target_grid);

// Matching objective value: sum of log P(target | inputs), normalized over the
// same candidate set the gradient uses.
double discriminative_loglik(const ModelParams& params, std::span<const Instance> batch,
                             std::size_t target, const Grid& target_grid);
std::size_t count_labeled(std::span<const Instance> batch, std::size_t target);

// lambda * mean generative gradient (target hidden) plus (1 - lambda) * mean
// discriminative gradient, with instance_count = 1.
GradientAccumulator hybrid_batch_gradient(const ModelParams& params,
                                          std::span<const Instance> batch,
                                          const TrainConfig& config, Rng& cd_rng);

// Mini-batch SGD with momentum; weight decay acts on interaction weights
// only. `start` overrides the data-driven initialization.
TrainResult train_generative(const Dataset& data, const TrainConfig& config,
                             const ModelParams* start = nullptr);
TrainResult train_discriminative(const Dataset& data, const TrainConfig& config,
                                 const ModelParams* start = nullptr);
TrainResult train_hybrid(const Dataset& data, const TrainConfig& config,
                         const ModelParams* start = nullptr);

// Stage 1 trains generatively with the target hidden (identical to
// train_generative on that masked dataset); stage 2 reinitializes the target
// variable's parameters and continues discriminatively.
TrainResult pretrain_finetune(const Dataset& data, const TrainConfig& config);

// Dispatches on config.objective.
TrainResult train(const Dataset& data, const TrainConfig& config);

// Copy of the dataset with every entry of one variable hidden.
Dataset mask_target(const Dataset& data, std::size_t target);

// Tab-separated: epoch, objective, the six per-type reconstruction errors
// ("-" when absent), wall_ms. Header row included.
std::string format_training_log(std::span<const EpochLog> log);

// Independent per-variable marginal model: Bernoulli rate, category
// frequencies, per-indicator rates, Gaussian mean, level frequencies, or
// pairwise preference frequencies. Never-observed variables fall back to
// uniform.
struct BaselineModel {
  DatasetSchema schema;
  std::vector<PredictiveDistribution> marginals;
};

BaselineModel fit_baseline(const Dataset& data);

// Mode of the marginal, decoded the same way model predictions are.
Value baseline_predict(const BaselineModel& baseline, std::size_t i, double threshold = 0.5);

// Fills the request's targets (all missing positions when unspecified) with
// baseline predictions.
Instance baseline_complete(const BaselineModel& baseline, const CompletionRequest& request,
                           double threshold = 0.5);

}  // namespace mvrbm
