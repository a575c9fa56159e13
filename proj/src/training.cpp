#include "mvrbm/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>

namespace mvrbm {
namespace {

// Mean level of the one-parameter family P(m) proportional to
// exp(slope * m / (M - 1)), m = 0..M-1.
double ordinal_level_mean(int M, double slope) {
  double max_logit = 0.0;
  for (int m = 0; m < M; ++m) max_logit = std::max(max_logit, slope * m / (M - 1));
  double z = 0.0;
  double acc = 0.0;
  for (int m = 0; m < M; ++m) {
    const double w = std::exp(slope * m / (M - 1) - max_logit);
    z += w;
    acc += m * w;
  }
  return acc / z;
}

double solve_ordinal_slope(int M, double mean_level) {
  const double eps = 1e-6;
  mean_level = std::clamp(mean_level, eps, M - 1 - eps);
  if (ordinal_level_mean(M, 0.0) == mean_level) return 0.0;
  double lo = -60.0;
  double hi = 60.0;
  if (ordinal_level_mean(M, lo) >= mean_level) return lo;
  if (ordinal_level_mean(M, hi) <= mean_level) return hi;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (ordinal_level_mean(M, mid) < mean_level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Independent-model fit of one variable's bias from its observed entries.
void ml_bias_init(VarParams& vp, const VariableSpec& spec, const Dataset& data, std::size_t i) {
  const int M = spec.arity();
  switch (spec.kind) {
    case VarKind::binary: {
      double n = 0.0;
      double ones = 0.0;
      for (const Instance& inst : data.instances) {
        if (!inst.observed(i)) continue;
        n += 1.0;
        ones += std::get<BinaryV>(inst.values[i]).value;
      }
      const double rate = (ones + 1.0) / (n + 2.0);
      vp.bias[0] = std::log(rate / (1.0 - rate));
      break;
    }
    case VarKind::categorical: {
      std::vector<double> counts(M, 0.0);
      double n = 0.0;
      for (const Instance& inst : data.instances) {
        if (!inst.observed(i)) continue;
        n += 1.0;
        counts[std::get<CategoricalV>(inst.values[i]).index] += 1.0;
      }
      for (int m = 0; m < M; ++m) vp.bias[m] = std::log((counts[m] + 1.0) / (n + M));
      break;
    }
    case VarKind::multicat: {
      std::vector<double> on(M, 0.0);
      double n = 0.0;
      for (const Instance& inst : data.instances) {
        if (!inst.observed(i)) continue;
        n += 1.0;
        const auto& v = std::get<MulticatV>(inst.values[i]);
        for (int m = 0; m < M; ++m) on[m] += v.active[m];
      }
      for (int m = 0; m < M; ++m) {
        const double rate = (on[m] + 1.0) / (n + 2.0);
        vp.bias[m] = std::log(rate / (1.0 - rate));
      }
      break;
    }
    case VarKind::continuous: {
      double n = 0.0;
      double sum = 0.0;
      for (const Instance& inst : data.instances) {
        if (!inst.observed(i)) continue;
        n += 1.0;
        sum += std::get<ContinuousV>(inst.values[i]).value;
      }
      const double mean = n > 0.0 ? sum / n : 0.0;
      vp.bias[0] = mean / (vp.sigma * vp.sigma);
      break;
    }
    case VarKind::ordinal: {
      double n = 0.0;
      double sum = 0.0;
      for (const Instance& inst : data.instances) {
        if (!inst.observed(i)) continue;
        n += 1.0;
        sum += std::get<OrdinalV>(inst.values[i]).level;
      }
      const double mean_level = (sum + 0.5 * (M - 1)) / (n + 1.0);
      vp.bias.setConstant(solve_ordinal_slope(M, mean_level) / M);
      break;
    }
    case VarKind::rank: {
      std::vector<double> score(M, 0.0);
      double n = 0.0;
      for (const Instance& inst : data.instances) {
        if (!inst.observed(i)) continue;
        n += 1.0;
        const auto& ranks = std::get<RankedV>(inst.values[i]).ranks;
        for (int l = 0; l < M; ++l) {
          for (int m = l + 1; m < M; ++m) {
            if (ranks[l] < ranks[m]) {
              score[l] += 1.0;
            } else if (ranks[l] > ranks[m]) {
              score[m] += 1.0;
            } else {
              score[l] += 0.5;
              score[m] += 0.5;
            }
          }
        }
      }
      for (int m = 0; m < M; ++m) {
        const double rate = (score[m] + 1.0) / (n * (M - 1) + 2.0);
        vp.bias[m] = M * std::log(rate);
      }
      break;
    }
  }
}

void reinit_target(ModelParams& params, std::size_t target, const TrainConfig& config,
                   const Dataset& data) {
  const VariableSpec& spec = params.schema.variables[target];
  VarParams& vp = params.vars[target];
  vp.bias.setZero();
  vp.log_gamma = 0.0;
  vp.sigma = 1.0;
  ml_bias_init(vp, spec, data, target);
  Rng rng = Rng(config.seed).split(4);
  for (Eigen::Index b = 0; b < vp.weights.rows(); ++b) {
    for (Eigen::Index k = 0; k < vp.weights.cols(); ++k) {
      vp.weights(b, k) = rng.uniform(-config.init_scale, config.init_scale);
    }
  }
}

struct TargetScores {
  std::vector<double> logw;        // unnormalized log weight per candidate
  std::vector<Eigen::VectorXd> q;  // hidden posterior per candidate
  double norm = 0.0;
};

TargetScores score_candidates(const ModelParams& params, std::size_t target,
                              const std::vector<Value>& candidates,
                              const Eigen::VectorXd& lam) {
  TargetScores out;
  out.logw.reserve(candidates.size());
  out.q.reserve(candidates.size());
  for (const Value& v : candidates) {
    const Eigen::VectorXd act = lam + h_vector(params, target, v);
    double lw = g_value(params, target, v);
    Eigen::VectorXd qc(act.size());
    for (Eigen::Index k = 0; k < act.size(); ++k) {
      lw += softplus(act[k]);
      qc[k] = logistic(act[k]);
    }
    out.logw.push_back(lw);
    out.q.push_back(std::move(qc));
  }
  out.norm = log_sum_exp(out.logw);
  return out;
}

void apply_update(ModelParams& params, const GradientAccumulator& grad,
                  GradientAccumulator& velocity, const TrainConfig& config) {
  if (grad.instance_count <= 0.0 || config.learning_rate == 0.0) return;
  const double s = config.learning_rate / grad.instance_count;
  const double decay = config.learning_rate * config.weight_decay;
  velocity.scale(config.momentum);
  velocity.hidden_bias += s * grad.hidden_bias;
  params.hidden_bias += velocity.hidden_bias;
  for (std::size_t i = 0; i < params.vars.size(); ++i) {
    auto& vel = velocity.vars[i];
    auto& vp = params.vars[i];
    vel.bias += s * grad.vars[i].bias;
    vel.weights += s * grad.vars[i].weights - decay * vp.weights;
    vp.bias += vel.bias;
    vp.weights += vel.weights;
    if (config.freeze_gamma) {
      vel.log_gamma = 0.0;
    } else {
      vel.log_gamma += s * grad.vars[i].log_gamma;
      vp.log_gamma += vel.log_gamma;
    }
  }
}

EvalReport reconstruction_report(const ModelParams& params, const Dataset& data) {
  std::vector<Instance> preds;
  preds.reserve(data.instances.size());
  for (const Instance& inst : data.instances) preds.push_back(reconstruct(params, inst));
  return evaluate(data.schema, data.instances, preds);
}

double mean_negative_free_energy(const ModelParams& params, std::span<const Instance> insts) {
  double acc = 0.0;
  for (const Instance& inst : insts) acc -= free_energy(params, inst);
  return insts.empty() ? 0.0 : acc / static_cast<double>(insts.size());
}

double epoch_objective(const ModelParams& params, const Dataset& data, const TrainConfig& config,
                       Objective mode) {
  const auto n = static_cast<double>(data.instances.size());
  switch (mode) {
    case Objective::generative:
      if (config.exact_gradient) return exact_loglik(params, data, config.budget) / n;
      return mean_negative_free_energy(params, data.instances);
    case Objective::discriminative: {
      const std::size_t labeled = count_labeled(data.instances, *config.target);
      if (labeled == 0) return 0.0;
      return discriminative_loglik(params, data.instances, *config.target, config.target_grid) /
             static_cast<double>(labeled);
    }
    default: {
      const Dataset masked = mask_target(data, *config.target);
      const double gen = config.exact_gradient
                             ? exact_loglik(params, masked, config.budget) / n
                             : mean_negative_free_energy(params, masked.instances);
      const std::size_t labeled = count_labeled(data.instances, *config.target);
      const double disc =
          labeled == 0 ? 0.0
                       : discriminative_loglik(params, data.instances, *config.target,
                                               config.target_grid) /
                             static_cast<double>(labeled);
      return config.lambda * gen + (1.0 - config.lambda) * disc;
    }
  }
}

TrainResult run_sgd(const Dataset& data, const TrainConfig& config, Objective mode,
                    const ModelParams* start, int epochs) {
  if (data.instances.empty()) throw ConfigError("training requires a non-empty dataset");
  if (mode != Objective::generative && count_labeled(data.instances, *config.target) == 0) {
    throw ConfigError("no instance has an observed target");
  }
  ModelParams params = start ? *start
                             : init_params(data.schema, config.hidden_units, config.init_scale,
                                           config.seed, &data);
  auto velocity = GradientAccumulator::zeros_like(params);
  Rng root(config.seed);
  const std::size_t n = data.instances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  TrainResult result;
  result.log.reserve(static_cast<std::size_t>(std::max(epochs, 0)));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng = root.split(1).split(static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    const std::size_t n_batches = (n + batch_size - 1) / batch_size;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * batch_size;
      const std::size_t end = std::min(n, begin + batch_size);
      std::vector<Instance> batch;
      batch.reserve(end - begin);
      for (std::size_t j = begin; j < end; ++j) batch.push_back(data.instances[order[j]]);
      Rng cd_rng = root.split(2).split(static_cast<std::uint64_t>(epoch)).split(b);
      GradientAccumulator grad =
          mode == Objective::generative
              ? generative_batch_gradient(params, batch, config, cd_rng)
          : mode == Objective::discriminative
              ? discriminative_batch_gradient(params, batch, *config.target, config.target_grid)
              : hybrid_batch_gradient(params, batch, config, cd_rng);
      apply_update(params, grad, velocity, config);
    }
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.objective = epoch_objective(params, data, config, mode);
    if (config.track_reconstruction) entry.reconstruction = reconstruction_report(params, data);
    entry.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(std::move(entry));
  }
  result.params = std::move(params);
  return result;
}

}  // namespace

const char* objective_name(Objective objective) {
  switch (objective) {
    case Objective::generative: return "generative";
    case Objective::discriminative: return "discriminative";
    case Objective::hybrid: return "hybrid";
    case Objective::pretrain_finetune: return "pretrain_finetune";
  }
  return "unknown";
}

Objective objective_from_name(std::string_view name) {
  if (name == "generative") return Objective::generative;
  if (name == "discriminative") return Objective::discriminative;
  if (name == "hybrid") return Objective::hybrid;
  if (name == "pretrain_finetune") return Objective::pretrain_finetune;
  throw ConfigError("unknown objective '" + std::string(name) +
                    "' (expected generative, discriminative, hybrid, or pretrain_finetune)");
}

void validate_config(const TrainConfig& config, const DatasetSchema& schema) {
  if (config.hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(config.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw ConfigError("momentum must be in [0, 1)");
  }
  if (!(config.weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (config.cd_steps < 1) throw ConfigError("cd_steps must be >= 1");
  if (config.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(config.init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
  if (config.pretrain_epochs && *config.pretrain_epochs < 0) {
    throw ConfigError("pretrain_epochs must be >= 0");
  }
  if (config.finetune_epochs && *config.finetune_epochs < 0) {
    throw ConfigError("finetune_epochs must be >= 0");
  }
  if (config.objective == Objective::hybrid &&
      !(config.lambda > 0.0 && config.lambda < 1.0)) {
    throw ConfigError("lambda must be in (0, 1) for hybrid training");
  }
  if (config.objective != Objective::generative) {
    if (!config.target) {
      throw ConfigError(std::string(objective_name(config.objective)) +
                        " training requires a target variable");
    }
    if (*config.target >= schema.size()) throw ConfigError("target index out of range");
    const VariableSpec& spec = schema.variables[*config.target];
    std::uint64_t space = 0;
    if (spec.kind == VarKind::continuous) {
      if (config.target_grid.n < 1) throw ConfigError("target_grid must have at least one point");
      space = static_cast<std::uint64_t>(config.target_grid.n);
    } else {
      space = value_space_size(spec);
    }
    if (space > config.budget.max_states) {
      throw ConfigError("target value space of '" + spec.name + "' exceeds the enumeration budget");
    }
  }
}

ModelParams init_params(const DatasetSchema& schema, int hidden_units, double init_scale,
                        std::uint64_t seed, const Dataset* data) {
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
  ModelParams params = make_zero_params(schema, hidden_units);
  Rng rng(seed);
  for (auto& vp : params.vars) {
    for (Eigen::Index b = 0; b < vp.weights.rows(); ++b) {
      for (Eigen::Index k = 0; k < vp.weights.cols(); ++k) {
        vp.weights(b, k) = rng.uniform(-init_scale, init_scale);
      }
    }
  }
  if (data) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
      ml_bias_init(params.vars[i], schema.variables[i], *data, i);
    }
  }
  return params;
}

GradientAccumulator generative_batch_gradient(const ModelParams& params,
                                              std::span<const Instance> batch,
                                              const TrainConfig& config, Rng& cd_rng) {
  if (config.exact_gradient) {
    Dataset slice{params.schema, {batch.begin(), batch.end()}, {}};
    return exact_loglik_gradient(params, slice, config.budget);
  }
  return cd_k(params, batch, config.cd_steps, cd_rng, config.threads);
}

GradientAccumulator discriminative_batch_gradient(const ModelParams& params,
                                                  std::span<const Instance> batch,
                                                  std::size_t target, const Grid& target_grid) {
  auto acc = GradientAccumulator::zeros_like(params);
  const VariableSpec& spec = params.schema.variables[target];
  const std::vector<Value> candidates = enumerate_values(spec, &target_grid);
  for (const Instance& inst : batch) {
    if (!inst.observed(target)) continue;
    Instance inputs = inst;
    inputs.values[target] = MissingV{};
    const Eigen::VectorXd lam = hidden_input(params, inputs);
    const TargetScores scores = score_candidates(params, target, candidates, lam);

    const Eigen::VectorXd act_star = lam + h_vector(params, target, inst.values[target]);
    Eigen::VectorXd q_star(act_star.size());
    for (Eigen::Index k = 0; k < act_star.size(); ++k) q_star[k] = logistic(act_star[k]);
    accumulate_statistics(params, inst, q_star, 1.0, acc);

    Eigen::VectorXd q_bar = Eigen::VectorXd::Zero(act_star.size());
    std::vector<double> p(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      p[c] = std::exp(scores.logw[c] - scores.norm);
      q_bar += p[c] * scores.q[c];
    }
    // Clamped inputs: one pass at the mean posterior cancels their positive
    // statistics exactly; only the target's statistics vary per candidate.
    accumulate_statistics(params, inputs, q_bar, -1.0, acc);
    auto& tslot = acc.vars[target];
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const Eigen::VectorXd f = feature_vector(spec, candidates[c]);
      tslot.bias -= p[c] * f;
      tslot.weights -= p[c] * (f * scores.q[c].transpose());
      if (spec.kind == VarKind::rank) {
        tslot.log_gamma -= p[c] * tie_pair_count(std::get<RankedV>(candidates[c]));
      }
    }
    acc.instance_count += 1.0;
  }
  return acc;
}

double discriminative_loglik(const ModelParams& params, std::span<const Instance> batch,
                             std::size_t target, const Grid& target_grid) {
  const VariableSpec& spec = params.schema.variables[target];
  const std::vector<Value> candidates = enumerate_values(spec, &target_grid);
  double total = 0.0;
  for (const Instance& inst : batch) {
    if (!inst.observed(target)) continue;
    Instance inputs = inst;
    inputs.values[target] = MissingV{};
    const Eigen::VectorXd lam = hidden_input(params, inputs);
    const TargetScores scores = score_candidates(params, target, candidates, lam);
    const Eigen::VectorXd act_star = lam + h_vector(params, target, inst.values[target]);
    double lw_star = g_value(params, target, inst.values[target]);
    for (Eigen::Index k = 0; k < act_star.size(); ++k) lw_star += softplus(act_star[k]);
    total += lw_star - scores.norm;
  }
  return total;
}

std::size_t count_labeled(std::span<const Instance> batch, std::size_t target) {
  std::size_t n = 0;
  for (const Instance& inst : batch) n += inst.observed(target) ? 1 : 0;
  return n;
}

GradientAccumulator hybrid_batch_gradient(const ModelParams& params,
                                          std::span<const Instance> batch,
                                          const TrainConfig& config, Rng& cd_rng) {
  const std::size_t target = *config.target;
  std::vector<Instance> masked(batch.begin(), batch.end());
  for (Instance& inst : masked) inst.values[target] = MissingV{};
  const GradientAccumulator gen = generative_batch_gradient(params, masked, config, cd_rng);
  const GradientAccumulator disc =
      discriminative_batch_gradient(params, batch, target, config.target_grid);
  auto out = GradientAccumulator::zeros_like(params);
  if (gen.instance_count > 0.0) out.add_scaled(gen, config.lambda / gen.instance_count);
  if (disc.instance_count > 0.0) {
    out.add_scaled(disc, (1.0 - config.lambda) / disc.instance_count);
  }
  out.instance_count = 1.0;
  return out;
}

TrainResult train_generative(const Dataset& data, const TrainConfig& config,
                             const ModelParams* start) {
  TrainConfig cfg = config;
  cfg.objective = Objective::generative;
  validate_config(cfg, data.schema);
  return run_sgd(data, cfg, Objective::generative, start, cfg.epochs);
}

TrainResult train_discriminative(const Dataset& data, const TrainConfig& config,
                                 const ModelParams* start) {
  TrainConfig cfg = config;
  cfg.objective = Objective::discriminative;
  validate_config(cfg, data.schema);
  return run_sgd(data, cfg, Objective::discriminative, start, cfg.epochs);
}

TrainResult train_hybrid(const Dataset& data, const TrainConfig& config,
                         const ModelParams* start) {
  TrainConfig cfg = config;
  cfg.objective = Objective::hybrid;
  validate_config(cfg, data.schema);
  return run_sgd(data, cfg, Objective::hybrid, start, cfg.epochs);
}

TrainResult pretrain_finetune(const Dataset& data, const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.objective = Objective::pretrain_finetune;
  validate_config(cfg, data.schema);
  const std::size_t target = *cfg.target;

  const Dataset inputs = mask_target(data, target);
  const int stage1_epochs = cfg.pretrain_epochs.value_or(cfg.epochs);
  TrainResult stage1 = run_sgd(inputs, cfg, Objective::generative, nullptr, stage1_epochs);

  ModelParams warm = std::move(stage1.params);
  reinit_target(warm, target, cfg, data);
  const int stage2_epochs = cfg.finetune_epochs.value_or(cfg.epochs);
  TrainResult stage2 = run_sgd(data, cfg, Objective::discriminative, &warm, stage2_epochs);

  TrainResult out;
  out.params = std::move(stage2.params);
  out.log = std::move(stage1.log);
  out.log.reserve(out.log.size() + stage2.log.size());
  for (EpochLog entry : stage2.log) {
    entry.epoch += stage1_epochs;
    out.log.push_back(std::move(entry));
  }
  return out;
}

TrainResult train(const Dataset& data, const TrainConfig& config) {
  validate_config(config, data.schema);
  switch (config.objective) {
    case Objective::generative: return train_generative(data, config);
    case Objective::discriminative: return train_discriminative(data, config);
    case Objective::hybrid: return train_hybrid(data, config);
    case Objective::pretrain_finetune: return pretrain_finetune(data, config);
  }
  throw ConfigError("unknown objective");
}

Dataset mask_target(const Dataset& data, std::size_t target) {
  Dataset out = data;
  for (Instance& inst : out.instances) inst.values[target] = MissingV{};
  return out;
}

std::string format_training_log(std::span<const EpochLog> log) {
  std::string out =
      "epoch\tobjective\tbinary_error\tcategorical_error\tmulticat_error\tcontinuous_rmse"
      "\tordinal_mae\trank_disagreement\twall_ms\n";
  const auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("-");
  };
  for (const EpochLog& entry : log) {
    out += std::to_string(entry.epoch);
    out += '\t';
    out += format_double(entry.objective);
    const EvalReport& r = entry.reconstruction;
    for (const auto* v : {&r.binary_error, &r.categorical_error, &r.multicat_error,
                          &r.continuous_rmse, &r.ordinal_mae, &r.rank_error}) {
      out += '\t';
      out += cell(*v);
    }
    out += '\t';
    out += format_double(entry.wall_ms);
    out += '\n';
  }
  return out;
}

BaselineModel fit_baseline(const Dataset& data) {
  BaselineModel out{data.schema, {}};
  out.marginals.reserve(data.schema.size());
  for (std::size_t i = 0; i < data.schema.size(); ++i) {
    const VariableSpec& spec = data.schema.variables[i];
    const int M = spec.arity();
    switch (spec.kind) {
      case VarKind::binary: {
        double n = 0.0;
        double ones = 0.0;
        for (const Instance& inst : data.instances) {
          if (!inst.observed(i)) continue;
          n += 1.0;
          ones += std::get<BinaryV>(inst.values[i]).value;
        }
        out.marginals.emplace_back(BernoulliDist{n > 0.0 ? ones / n : 0.5});
        break;
      }
      case VarKind::categorical:
      case VarKind::ordinal: {
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(M);
        double n = 0.0;
        for (const Instance& inst : data.instances) {
          if (!inst.observed(i)) continue;
          n += 1.0;
          const int m = spec.kind == VarKind::categorical
                            ? std::get<CategoricalV>(inst.values[i]).index
                            : std::get<OrdinalV>(inst.values[i]).level;
          counts[m] += 1.0;
        }
        Eigen::VectorXd probs =
            n > 0.0 ? Eigen::VectorXd(counts / n)
                    : Eigen::VectorXd(Eigen::VectorXd::Constant(M, 1.0 / M));
        if (spec.kind == VarKind::categorical) {
          out.marginals.emplace_back(CategoricalDist{std::move(probs)});
        } else {
          out.marginals.emplace_back(OrdinalDist{std::move(probs)});
        }
        break;
      }
      case VarKind::multicat: {
        Eigen::VectorXd on = Eigen::VectorXd::Zero(M);
        double n = 0.0;
        for (const Instance& inst : data.instances) {
          if (!inst.observed(i)) continue;
          n += 1.0;
          const auto& v = std::get<MulticatV>(inst.values[i]);
          for (int m = 0; m < M; ++m) on[m] += v.active[m];
        }
        Eigen::VectorXd probs = n > 0.0 ? Eigen::VectorXd(on / n)
                                        : Eigen::VectorXd(Eigen::VectorXd::Constant(M, 0.5));
        out.marginals.emplace_back(IndicatorDist{std::move(probs)});
        break;
      }
      case VarKind::continuous: {
        double n = 0.0;
        double sum = 0.0;
        for (const Instance& inst : data.instances) {
          if (!inst.observed(i)) continue;
          n += 1.0;
          sum += std::get<ContinuousV>(inst.values[i]).value;
        }
        out.marginals.emplace_back(GaussianDist{n > 0.0 ? sum / n : 0.0, 1.0});
        break;
      }
      case VarKind::rank: {
        PairwiseDist dist;
        dist.succ = Eigen::MatrixXd::Zero(M, M);
        dist.tie = Eigen::MatrixXd::Zero(M, M);
        dist.prec = Eigen::MatrixXd::Zero(M, M);
        for (int m = 0; m < M; ++m) dist.tie(m, m) = 1.0;
        for (int l = 0; l < M; ++l) {
          for (int m = l + 1; m < M; ++m) {
            double wins_l = 0.0;
            double ties = 0.0;
            double wins_m = 0.0;
            for (const Instance& inst : data.instances) {
              if (!inst.observed(i)) continue;
              const auto& ranks = std::get<RankedV>(inst.values[i]).ranks;
              if (ranks[l] < ranks[m]) {
                wins_l += 1.0;
              } else if (ranks[l] > ranks[m]) {
                wins_m += 1.0;
              } else {
                ties += 1.0;
              }
            }
            const double total = wins_l + ties + wins_m;
            const double ps = total > 0.0 ? wins_l / total : 1.0 / 3.0;
            const double pt = total > 0.0 ? ties / total : 1.0 / 3.0;
            const double pp = total > 0.0 ? wins_m / total : 1.0 / 3.0;
            dist.succ(l, m) = ps;
            dist.tie(l, m) = pt;
            dist.prec(l, m) = pp;
            dist.succ(m, l) = pp;
            dist.tie(m, l) = pt;
            dist.prec(m, l) = ps;
          }
        }
        out.marginals.emplace_back(std::move(dist));
        break;
      }
    }
  }
  return out;
}

Value baseline_predict(const BaselineModel& baseline, std::size_t i, double threshold) {
  if (i >= baseline.schema.size()) throw ModelError("variable index out of range");
  return decode_mode(baseline.schema.variables[i], baseline.marginals[i], threshold);
}

Instance baseline_complete(const BaselineModel& baseline, const CompletionRequest& request,
                           double threshold) {
  const Instance& inst = request.instance;
  if (inst.values.size() != baseline.schema.size()) throw ModelError("instance arity mismatch");
  std::vector<std::size_t> targets = request.targets;
  if (targets.empty()) {
    for (std::size_t i = 0; i < inst.values.size(); ++i) {
      if (!inst.observed(i)) targets.push_back(i);
    }
  }
  Instance out = inst;
  for (std::size_t t : targets) out.values[t] = baseline_predict(baseline, t, threshold);
  return out;
}

}  // namespace mvrbm
