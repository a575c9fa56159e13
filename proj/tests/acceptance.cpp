// Acceptance gate. Each check below guards one shipping requirement and
// prints a single PASS/FAIL line with the measured quantity; the exit status
// is the number of failures. The checks are self-contained and ordered from
// exact-oracle equivalence to end-to-end CLI behavior, so a failure high up
// usually explains the ones below it.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mvrbm/metrics.hpp"
#include "mvrbm/oracle.hpp"
#include "mvrbm/prediction.hpp"
#include "mvrbm/training.hpp"

using namespace mvrbm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

ModelParams random_params(const DatasetSchema& schema, int k, std::uint64_t seed, double scale,
                          double bias_scale = -1.0) {
  if (bias_scale < 0.0) bias_scale = scale;
  ModelParams p = make_zero_params(schema, k);
  Rng rng(seed);
  for (int j = 0; j < k; ++j) p.hidden_bias[j] = rng.uniform(-0.3, 0.3);
  for (auto& vp : p.vars) {
    for (Eigen::Index b = 0; b < vp.bias.size(); ++b) {
      vp.bias[b] = rng.uniform(-bias_scale, bias_scale);
    }
    for (Eigen::Index b = 0; b < vp.weights.rows(); ++b) {
      for (Eigen::Index j = 0; j < vp.weights.cols(); ++j) {
        vp.weights(b, j) = rng.uniform(-scale, scale);
      }
    }
    vp.log_gamma = rng.uniform(-0.3, 0.3);
  }
  return p;
}

// ---------------------------------------------------------------------------
// 1. Posterior and predictive distributions against exhaustive enumeration.

ModelParams drop_first_variable(const ModelParams& p) {
  DatasetSchema s;
  s.variables.assign(p.schema.variables.begin() + 1, p.schema.variables.end());
  ModelParams r = make_zero_params(s, p.hidden_units);
  r.hidden_bias = p.hidden_bias;
  for (std::size_t i = 1; i < p.vars.size(); ++i) r.vars[i - 1] = p.vars[i];
  return r;
}

// Largest probability deviation between a decoded predictive distribution and
// the enumerated conditional over the same candidate list.
double predictive_deviation(const VariableSpec& spec, const PredictiveDistribution& dist,
                            const std::vector<Value>& cands, const std::vector<double>& probs) {
  double dev = 0.0;
  switch (spec.kind) {
    case VarKind::binary: {
      const double p1 = std::get<BernoulliDist>(dist).p;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const double model = std::get<BinaryV>(cands[c]).value ? p1 : 1.0 - p1;
        dev = std::max(dev, std::abs(model - probs[c]));
      }
      return dev;
    }
    case VarKind::categorical: {
      const auto& d = std::get<CategoricalDist>(dist);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        dev = std::max(dev, std::abs(d.probs[std::get<CategoricalV>(cands[c]).index] - probs[c]));
      }
      return dev;
    }
    case VarKind::ordinal: {
      const auto& d = std::get<OrdinalDist>(dist);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        dev = std::max(dev, std::abs(d.probs[std::get<OrdinalV>(cands[c]).level] - probs[c]));
      }
      return dev;
    }
    case VarKind::multicat: {
      const auto& d = std::get<IndicatorDist>(dist);
      for (int m = 0; m < spec.arity(); ++m) {
        double marginal = 0.0;
        for (std::size_t c = 0; c < cands.size(); ++c) {
          if (std::get<MulticatV>(cands[c]).active[static_cast<std::size_t>(m)]) {
            marginal += probs[c];
          }
        }
        dev = std::max(dev, std::abs(d.probs[m] - marginal));
      }
      return dev;
    }
    case VarKind::rank: {
      const auto& d = std::get<PairwiseDist>(dist);
      const int M = spec.arity();
      for (int l = 0; l < M; ++l) {
        for (int m = 0; m < M; ++m) {
          double succ = 0.0, tie = 0.0;
          for (std::size_t c = 0; c < cands.size(); ++c) {
            const auto& ranks = std::get<RankedV>(cands[c]).ranks;
            const int dl = ranks[static_cast<std::size_t>(l)];
            const int dm = ranks[static_cast<std::size_t>(m)];
            if (dl < dm) succ += probs[c];
            if (dl == dm) tie += probs[c];
          }
          dev = std::max(dev, std::abs(d.succ(l, m) - succ));
          dev = std::max(dev, std::abs(d.tie(l, m) - tie));
        }
      }
      return dev;
    }
    case VarKind::continuous:
      return 0.0;  // no finite predictive enumeration; covered by mean tests
  }
  return dev;
}

Outcome check_posterior_exactness() {
  struct Setup {
    const char* schema;
    int k;
  };
  const Setup setups[] = {
      {"a binary\nb categorical x,y,z\n", 2},
      {"a continuous\nb ordinal l1,l2,l3\nc binary\n", 3},
      {"a multicat p,q\nb rank r1,r2,r3\n", 2},
      {"a rank r1,r2\nb continuous\nc categorical x,y\nd ordinal u,v\n", 3},
  };
  EnumerationBudget budget;
  budget.grid = Grid{-2.0, 2.0, 5};

  double worst = 0.0;
  int models = 0;
  for (const Setup& setup : setups) {
    const DatasetSchema schema = parse_schema(setup.schema);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const ModelParams params = random_params(schema, setup.k, 31 * seed + models, 0.8);
      const JointTable table = exact_joint(params, budget);
      ++models;

      for (std::size_t pick = 0; pick < 2; ++pick) {
        const std::size_t v_state =
            (7919 * (pick + 1) + 13 * seed) % table.v_state_count();
        Instance inst = empty_instance(schema.size());
        inst.values = table.decode(v_state);

        const Eigen::VectorXd q = hidden_posterior(params, inst);
        const Eigen::VectorXd ref = table.hidden_conditional(inst);
        for (int j = 0; j < setup.k; ++j) worst = std::max(worst, std::abs(q[j] - ref[j]));

        // The same posterior with one entry hidden must match the model that
        // simply does not contain that variable.
        Instance partial = inst;
        partial.values[0] = MissingV{};
        const ModelParams reduced = drop_first_variable(params);
        Instance rinst = empty_instance(schema.size() - 1);
        for (std::size_t i = 1; i < schema.size(); ++i) rinst.values[i - 1] = inst.values[i];
        const Eigen::VectorXd qp = hidden_posterior(params, partial);
        const Eigen::VectorXd rp = exact_joint(reduced, budget).hidden_conditional(rinst);
        for (int j = 0; j < setup.k; ++j) worst = std::max(worst, std::abs(qp[j] - rp[j]));

        for (std::size_t i = 0; i < schema.size(); ++i) {
          if (schema.variables[i].kind == VarKind::continuous) continue;
          Instance view = inst;
          view.values[i] = MissingV{};
          const std::vector<double> probs = table.target_conditional(i, view);
          const PredictiveDistribution dist = predictive_distribution(params, i, view);
          worst = std::max(worst, predictive_deviation(schema.variables[i], dist,
                                                       table.value_lists[i], probs));
        }
      }
    }
  }

  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d models, max deviation %.3g", models, worst);
  return {worst <= 1e-10 && models >= 20, buf};
}

// ---------------------------------------------------------------------------
// 2. Exact gradient against central finite differences, every parameter.

struct ParamRef {
  std::string cls;
  double* value;
  const double* grad;
};

std::vector<ParamRef> all_parameters(ModelParams& p, const GradientAccumulator& g) {
  std::vector<ParamRef> refs;
  for (Eigen::Index j = 0; j < p.hidden_bias.size(); ++j) {
    refs.push_back({"w", &p.hidden_bias[j], &g.hidden_bias[j]});
  }
  for (std::size_t i = 0; i < p.vars.size(); ++i) {
    const VarKind kind = p.schema.variables[i].kind;
    std::string bias_cls = "U", weight_cls = "V_ik";
    if (kind == VarKind::categorical || kind == VarKind::multicat || kind == VarKind::rank) {
      bias_cls = "U_im";
      weight_cls = "V_imk";
    } else if (kind == VarKind::ordinal) {
      bias_cls = "U_id";
      weight_cls = "V_idk";
    }
    auto& vp = p.vars[i];
    const auto& vg = g.vars[i];
    for (Eigen::Index b = 0; b < vp.bias.size(); ++b) {
      refs.push_back({bias_cls, &vp.bias[b], &vg.bias[b]});
    }
    for (Eigen::Index b = 0; b < vp.weights.rows(); ++b) {
      for (Eigen::Index j = 0; j < vp.weights.cols(); ++j) {
        refs.push_back({weight_cls, &vp.weights(b, j), &vg.weights(b, j)});
      }
    }
    if (kind == VarKind::rank) refs.push_back({"log_gamma", &vp.log_gamma, &vg.log_gamma});
  }
  return refs;
}

Outcome check_gradient() {
  const DatasetSchema schema = parse_schema(
      "a binary\n"
      "b categorical x,y,z\n"
      "c multicat p,q\n"
      "d continuous\n"
      "e ordinal l1,l2,l3\n"
      "f rank r1,r2,r3\n");
  EnumerationBudget budget;
  budget.grid = Grid{-2.0, 2.0, 5};
  const std::vector<double> grid_points = budget.grid.points();

  ModelParams params = random_params(schema, 2, 404, 0.6);
  Dataset ds{schema, {}, std::vector<Standardization>(schema.size())};
  Instance i0 = empty_instance(6);
  i0.values = {BinaryV{1}, CategoricalV{2}, MulticatV{{1, 0}}, ContinuousV{grid_points[3]},
               OrdinalV{1}, RankedV{{2, 1, 2}}};
  Instance i1 = i0;
  i1.values[0] = MissingV{};
  i1.values[4] = MissingV{};
  i1.values[1] = CategoricalV{0};
  Instance i2 = i0;
  i2.values[5] = MissingV{};
  i2.values[3] = ContinuousV{grid_points[1]};
  ds.instances = {i0, i1, i2};

  const GradientAccumulator grad = exact_loglik_gradient(params, ds, budget);
  const double step = 1e-5;
  double worst = 0.0;
  std::string worst_cls = "-";
  std::map<std::string, int> classes;
  for (const ParamRef& ref : all_parameters(params, grad)) {
    const double saved = *ref.value;
    *ref.value = saved + step;
    const double hi = exact_loglik(params, ds, budget);
    *ref.value = saved - step;
    const double lo = exact_loglik(params, ds, budget);
    *ref.value = saved;
    const double fd = (hi - lo) / (2.0 * step);
    const double scale = std::max({std::abs(fd), std::abs(*ref.grad), 1e-8});
    const double rel = std::abs(fd - *ref.grad) / scale;
    ++classes[ref.cls];
    if (rel > worst) {
      worst = rel;
      worst_cls = ref.cls;
    }
  }

  // Every parameter class must actually appear in the sweep.
  const char* expected[] = {"w", "U", "U_im", "U_id", "V_ik", "V_imk", "V_idk", "log_gamma"};
  bool covered = true;
  for (const char* cls : expected) covered = covered && classes.count(cls) > 0;

  std::size_t total = 0;
  for (const auto& [cls, count] : classes) total += static_cast<std::size_t>(count);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu parameters in %zu classes, max rel err %.3g (%s)", total,
                classes.size(), worst, worst_cls.c_str());
  return {covered && worst < 1e-4, buf};
}

// ---------------------------------------------------------------------------
// 3. Alternating Gibbs chain against the enumerated joint.

Outcome check_sampler() {
  const DatasetSchema schema = parse_schema(
      "a binary\n"
      "b categorical x,y,z\n"
      "c ordinal l1,l2,l3\n");
  const ModelParams params = random_params(schema, 2, 17, 0.9);
  const JointTable table = exact_joint(params);

  // Flatten exact visible-state probabilities onto (binary, cat, ordinal).
  std::vector<double> exact(18, 0.0);
  auto key = [](const std::vector<Value>& v) {
    const int b = std::get<BinaryV>(v[0]).value;
    const int c = std::get<CategoricalV>(v[1]).index;
    const int o = std::get<OrdinalV>(v[2]).level;
    return static_cast<std::size_t>((b * 3 + c) * 3 + o);
  };
  for (std::size_t s = 0; s < table.v_state_count(); ++s) {
    exact[key(table.decode(s))] += table.v_marginal_at(s);
  }

  const std::vector<std::size_t> positions = {0, 1, 2};
  Rng rng(2024);
  Instance inst = sample_visible(params, std::vector<std::uint8_t>(2, 0), positions, rng);
  const int burn_in = 10'000;
  const int n_samples = 200'000;
  for (int t = 0; t < burn_in; ++t) {
    const auto h = sample_hidden(params, inst, rng);
    sample_visible_into(params, h, positions, rng, inst);
  }
  std::vector<double> counts(18, 0.0);
  for (int t = 0; t < n_samples; ++t) {
    const auto h = sample_hidden(params, inst, rng);
    sample_visible_into(params, h, positions, rng, inst);
    counts[key(inst.values)] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t s = 0; s < exact.size(); ++s) {
    tv += std::abs(counts[s] / n_samples - exact[s]);
  }
  tv *= 0.5;

  char buf[96];
  std::snprintf(buf, sizeof(buf), "TV %.4f over 18 states, %d samples", tv, n_samples);
  return {tv < 0.02, buf};
}

// ---------------------------------------------------------------------------
// 4. Monotone ascent of the exact objectives under full-batch steps.

Dataset synthetic_discrete(std::uint64_t seed, std::size_t n) {
  const DatasetSchema schema = parse_schema(
      "a binary\n"
      "b categorical x,y,z\n"
      "c ordinal l1,l2,l3\n");
  const ModelParams planted = random_params(schema, 2, seed, 1.0);
  return generate_synthetic(planted, n, seed + 1, 500, 5);
}

Outcome check_ascent() {
  const Dataset ds = synthetic_discrete(5, 30);
  int total_violations = 0;
  double max_drop = 0.0;
  std::string parts;

  for (const Objective objective :
       {Objective::generative, Objective::discriminative, Objective::hybrid}) {
    TrainConfig cfg;
    cfg.hidden_units = 2;
    cfg.epochs = 200;
    cfg.batch_size = static_cast<int>(ds.instances.size());
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    cfg.exact_gradient = true;
    cfg.objective = objective;
    cfg.seed = 9;
    cfg.track_reconstruction = false;
    if (objective != Objective::generative) cfg.target = 0;

    const TrainResult result = train(ds, cfg);
    int violations = 0;
    for (std::size_t t = 1; t < result.log.size(); ++t) {
      const double drop = result.log[t - 1].objective - result.log[t].objective;
      if (drop > 0.0) {
        ++violations;
        max_drop = std::max(max_drop, drop);
      }
    }
    total_violations += violations;
    parts += std::string(parts.empty() ? "" : ", ") + objective_name(objective) + " " +
             std::to_string(violations);
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf), "violations: %s; largest drop %.2g", parts.c_str(), max_drop);
  return {total_violations <= 5 && max_drop <= 1e-6, buf};
}

// ---------------------------------------------------------------------------
// 5 & 6. Trend checks on data planted from a wide model.

struct Planted {
  DatasetSchema schema;
  ModelParams params;
  Dataset data;
};

// Ten hidden factors, each strongly driving three of the six variables with
// alternating signs, so every variable is shaped by five factors. Data drawn
// from this model carries real cross-variable structure that a two-unit model
// cannot represent but a ten-unit model can.
const Planted& planted_data() {
  static const Planted fixture = [] {
    Planted f;
    f.schema = parse_schema(
        "a binary\n"
        "b categorical x,y,z\n"
        "c multicat p,q\n"
        "d continuous\n"
        "e ordinal l1,l2,l3\n"
        "f rank r1,r2,r3\n");
    f.params = make_zero_params(f.schema, 10);
    Rng rng(42);
    for (int k = 0; k < 10; ++k) {
      f.params.hidden_bias[k] = -0.3;
      for (std::size_t i = 0; i < 6; ++i) {
        if (i == static_cast<std::size_t>(k) % 6) continue;  // five variables per factor
        auto& w = f.params.vars[i].weights;
        for (Eigen::Index b = 0; b < w.rows(); ++b) {
          const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
          w(b, k) = sign * 1.8 + rng.uniform(-0.3, 0.3);
        }
      }
    }
    for (auto& vp : f.params.vars) {
      for (Eigen::Index b = 0; b < vp.bias.size(); ++b) vp.bias[b] = rng.uniform(-0.3, 0.3);
      vp.log_gamma = 0.2;
    }
    // Joint Gibbs draws from a model this strongly coupled freeze inside one
    // basin, so the hidden patterns are drawn directly: one active factor per
    // instance (ten distinct clusters), visibles from the planted
    // conditionals. A two-unit model cannot index ten clusters.
    f.data.schema = f.schema;
    f.data.standardization.assign(f.schema.size(), Standardization{});
    Rng draw(43);
    for (int u = 0; u < 5000; ++u) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(10);
      h[std::min(static_cast<int>(draw.uniform01() * 10.0), 9)] = 1.0;
      Instance inst = empty_instance(f.schema.size());
      for (std::size_t i = 0; i < f.schema.size(); ++i) {
        inst.values[i] = sample_from_distribution(
            f.schema.variables[i], conditional_data_distribution(f.params, i, h), draw);
      }
      f.data.instances.push_back(std::move(inst));
    }
    return f;
  }();
  return fixture;
}

TrainConfig planted_config(int k, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.hidden_units = k;
  cfg.epochs = 140;
  cfg.batch_size = 100;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.5;
  cfg.weight_decay = 1e-4;
  cfg.cd_steps = 2;
  cfg.threads = 4;
  cfg.seed = seed;
  cfg.track_reconstruction = false;
  return cfg;
}

struct TypedErrors {
  double rate[6];
  static const char* name(int t) {
    static const char* names[] = {"binary", "categorical", "multicat",
                                  "continuous", "ordinal", "rank"};
    return names[t];
  }
};

TypedErrors typed(const EvalReport& rep) {
  return {{rep.binary_error.value_or(0.0), rep.categorical_error.value_or(0.0),
           rep.multicat_error.value_or(0.0), rep.continuous_rmse.value_or(0.0),
           rep.ordinal_mae.value_or(0.0), rep.rank_error.value_or(0.0)}};
}

EvalReport baseline_reconstruction(const Dataset& ds) {
  const BaselineModel bm = fit_baseline(ds);
  std::vector<Instance> preds;
  preds.reserve(ds.instances.size());
  for (const Instance& inst : ds.instances) {
    Instance pred = empty_instance(ds.schema.size());
    for (std::size_t j = 0; j < ds.schema.size(); ++j) {
      if (inst.observed(j)) pred.values[j] = baseline_predict(bm, j);
    }
    preds.push_back(std::move(pred));
  }
  return evaluate(ds.schema, ds.instances, preds);
}

Outcome check_reconstruction_trend() {
  const Planted& fixture = planted_data();
  const int widths[] = {2, 5, 10};
  TypedErrors errs[3];
  for (int run = 0; run < 3; ++run) {
    const TrainResult result = train(fixture.data, planted_config(widths[run], 7));
    std::vector<Instance> preds;
    preds.reserve(fixture.data.instances.size());
    for (const Instance& inst : fixture.data.instances) {
      preds.push_back(reconstruct(result.params, inst));
    }
    errs[run] = typed(evaluate(fixture.schema, fixture.data.instances, preds));
  }
  const TypedErrors base = typed(baseline_reconstruction(fixture.data));

  std::string detail;
  bool ok = true;
  for (int t = 0; t < 6; ++t) {
    int inversions = 0;
    double worst_rise = 0.0;
    for (int run = 1; run < 3; ++run) {
      const double rise = errs[run].rate[t] - errs[run - 1].rate[t];
      if (rise > 0.0) {
        ++inversions;
        worst_rise = std::max(worst_rise, rise);
      }
    }
    const bool type_ok =
        inversions <= 1 && worst_rise <= 0.005 && errs[2].rate[t] < base.rate[t];
    ok = ok && type_ok;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s%s %.3f/%.3f/%.3f vs %.3f%s",
                  detail.empty() ? "" : ", ", TypedErrors::name(t), errs[0].rate[t],
                  errs[1].rate[t], errs[2].rate[t], base.rate[t], type_ok ? "" : " <-");
    detail += buf;
  }
  return {ok, detail};
}

Outcome check_completion_trend() {
  const Planted& fixture = planted_data();
  const std::size_t n = fixture.data.instances.size();
  const std::size_t width = fixture.schema.size();

  Dataset masked = fixture.data;
  std::vector<std::vector<std::uint8_t>> mask(n, std::vector<std::uint8_t>(width, 0));
  Rng mask_rng(99);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t i = 0; i < width; ++i) {
      if (!fixture.data.instances[u].observed(i)) continue;
      if (mask_rng.bernoulli(0.2)) {
        masked.instances[u].values[i] = MissingV{};
        mask[u][i] = 1;
      }
    }
  }

  const TrainResult result = train(masked, planted_config(10, 11));
  std::vector<Instance> completed, base_completed;
  completed.reserve(n);
  base_completed.reserve(n);
  const BaselineModel bm = fit_baseline(masked);
  for (const Instance& inst : masked.instances) {
    completed.push_back(complete(result.params, CompletionRequest{inst, {}}));
    base_completed.push_back(baseline_complete(bm, CompletionRequest{inst, {}}));
  }
  const TypedErrors model =
      typed(evaluate(fixture.schema, fixture.data.instances, completed, &mask));
  const TypedErrors base =
      typed(evaluate(fixture.schema, fixture.data.instances, base_completed, &mask));

  std::string detail;
  bool ok = true;
  for (int t = 0; t < 6; ++t) {
    const bool type_ok = model.rate[t] < base.rate[t];
    ok = ok && type_ok;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%s%s %.3f vs %.3f%s", detail.empty() ? "" : ", ",
                  TypedErrors::name(t), model.rate[t], base.rate[t], type_ok ? "" : " <-");
    detail += buf;
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 7. Discriminative prediction against the input-free baseline, per type.

struct PredictionTask {
  const char* target_decl;
  std::function<Value(const std::vector<int>&, Rng&)> label;
};

Outcome check_prediction_trend() {
  const std::vector<PredictionTask> tasks = {
      {"y binary",
       [](const std::vector<int>& x, Rng& rng) -> Value {
         const int rule = x[0] + x[1] + x[2] + x[3] >= 2 ? 1 : 0;
         return BinaryV{rng.bernoulli(0.1) ? 1 - rule : rule};
       }},
      {"y categorical c0,c1,c2",
       [](const std::vector<int>& x, Rng& rng) -> Value {
         const int s = x[0] + x[1] + x[2] + x[3];
         const int rule = s <= 1 ? 0 : (s == 2 ? 1 : 2);
         if (rng.bernoulli(0.15)) {
           return CategoricalV{std::min(static_cast<int>(rng.uniform01() * 3.0), 2)};
         }
         return CategoricalV{rule};
       }},
      {"y multicat m0,m1",
       [](const std::vector<int>& x, Rng& rng) -> Value {
         MulticatV v;
         v.active = {static_cast<std::uint8_t>(rng.bernoulli(0.1) ? 1 - x[0] : x[0]),
                     static_cast<std::uint8_t>(rng.bernoulli(0.1) ? 1 - x[1] : x[1])};
         return v;
       }},
      {"y continuous",
       [](const std::vector<int>& x, Rng& rng) -> Value {
         const double s = static_cast<double>(x[0] + x[1] + x[2] + x[3]);
         return ContinuousV{0.8 * (s - 2.0) + 0.6 * rng.normal()};
       }},
      {"y ordinal o0,o1,o2",
       [](const std::vector<int>& x, Rng& rng) -> Value {
         const int s = x[0] + x[1] + x[2] + x[3];
         int level = s <= 1 ? 0 : (s == 2 ? 1 : 2);
         if (rng.bernoulli(0.1)) level = std::max(0, std::min(2, level + (rng.bernoulli(0.5) ? 1 : -1)));
         return OrdinalV{level};
       }},
      {"y rank r0,r1,r2",
       [](const std::vector<int>& x, Rng& rng) -> Value {
         const double scores[] = {static_cast<double>(x[0] + x[1]) + 0.2 * rng.uniform01(),
                                  static_cast<double>(x[1] + x[2]) + 0.2 * rng.uniform01(),
                                  2.0 * static_cast<double>(x[3]) + 0.2 * rng.uniform01()};
         return ranks_from_scores(scores, 1e-9);
       }},
  };

  std::string detail;
  bool ok = true;
  for (std::size_t task_id = 0; task_id < tasks.size(); ++task_id) {
    const PredictionTask& task = tasks[task_id];
    const DatasetSchema schema = parse_schema(
        "x0 binary\nx1 binary\nx2 binary\nx3 binary\n" + std::string(task.target_decl) + "\n");
    const std::size_t target = 4;
    const VarKind kind = schema.variables[target].kind;

    Rng rng(1000 + task_id);
    const std::size_t n_train = 1000, n_test = 500;
    Dataset train_ds{schema, {}, std::vector<Standardization>(schema.size())};
    std::vector<Instance> test;
    for (std::size_t u = 0; u < n_train + n_test; ++u) {
      std::vector<int> x(4);
      Instance inst = empty_instance(5);
      for (std::size_t j = 0; j < 4; ++j) {
        x[j] = rng.bernoulli(0.5) ? 1 : 0;
        inst.values[j] = BinaryV{x[j]};
      }
      inst.values[target] = task.label(x, rng);
      if (u < n_train) {
        train_ds.instances.push_back(std::move(inst));
      } else {
        test.push_back(std::move(inst));
      }
    }

    TrainConfig cfg;
    cfg.hidden_units = 8;
    cfg.epochs = 120;
    cfg.batch_size = 50;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.5;
    cfg.weight_decay = 1e-4;
    cfg.objective = Objective::discriminative;
    cfg.target = target;
    cfg.threads = 4;
    cfg.seed = 3;
    cfg.track_reconstruction = false;
    const TrainResult result = train(train_ds, cfg);

    const BaselineModel bm = fit_baseline(train_ds);
    const Value base_value = baseline_predict(bm, target);
    std::vector<Instance> truths, preds, base_preds;
    for (const Instance& inst : test) {
      Instance view = inst;
      view.values[target] = MissingV{};
      Instance truth = empty_instance(5), pred = empty_instance(5), base = empty_instance(5);
      truth.values[target] = inst.values[target];
      pred.values[target] = predict(result.params, target, view);
      base.values[target] = base_value;
      truths.push_back(std::move(truth));
      preds.push_back(std::move(pred));
      base_preds.push_back(std::move(base));
    }
    const TypedErrors model = typed(evaluate(schema, truths, preds));
    const TypedErrors base = typed(evaluate(schema, truths, base_preds));
    const int t = static_cast<int>(kind);
    bool task_ok = model.rate[t] < base.rate[t];
    if (kind == VarKind::continuous) task_ok = task_ok && model.rate[t] < 1.0;
    ok = ok && task_ok;

    char buf[80];
    std::snprintf(buf, sizeof(buf), "%s%s %.3f vs %.3f%s", detail.empty() ? "" : ", ",
                  TypedErrors::name(t), model.rate[t], base.rate[t], task_ok ? "" : " <-");
    detail += buf;
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 8. Ordered-set-partition counts.

Outcome check_rank_counts() {
  struct Case {
    int m;
    std::uint64_t expected;
  };
  const Case cases[] = {{1, 1}, {3, 13}, {5, 541}, {10, 102'247'563}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    const std::uint64_t got = count_rank_assignments(c.m);
    ok = ok && got == c.expected;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%sM=%d: %llu", detail.empty() ? "" : ", ", c.m,
                  static_cast<unsigned long long>(got));
    detail += buf;
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 9. Metric definitions on worked examples plus the F1 identity.

Outcome check_metrics() {
  bool ok = true;

  ok = ok && rank_disagreement(RankedV{{1, 2, 3}}, RankedV{{1, 2, 3}}) == 0.0;
  ok = ok && rank_disagreement(RankedV{{1, 2, 3}}, RankedV{{3, 2, 1}}) == 1.0;
  ok = ok && rank_disagreement(RankedV{{1, 2, 3}}, RankedV{{1, 1, 2}}) == 0.0;
  ok = ok && rank_disagreement(RankedV{{1, 1, 2}}, RankedV{{2, 1, 1}}) == 1.0 / 3.0;

  {
    const DatasetSchema s = parse_schema("a binary\n");
    std::vector<Instance> truth(3, empty_instance(1)), pred(3, empty_instance(1));
    truth[0].values[0] = BinaryV{1};
    truth[1].values[0] = BinaryV{0};
    truth[2].values[0] = BinaryV{1};
    for (auto& inst : pred) inst.values[0] = BinaryV{1};
    ok = ok && *evaluate(s, truth, pred).binary_error == 1.0 / 3.0;
  }
  {
    const DatasetSchema s = parse_schema("g ordinal a,b,c,d,e\n");
    std::vector<Instance> truth(1, empty_instance(1)), pred(1, empty_instance(1));
    truth[0].values[0] = OrdinalV{1};
    pred[0].values[0] = OrdinalV{3};
    ok = ok && *evaluate(s, truth, pred).ordinal_mae == 0.5;
  }
  {
    const DatasetSchema s = parse_schema(
        "a binary\nb categorical x,y,z\nc multicat p,q\nd continuous\ne ordinal l1,l2,l3\n"
        "f rank r1,r2,r3\n");
    std::vector<Instance> truth(1, empty_instance(6));
    truth[0].values = {BinaryV{0}, CategoricalV{1}, MulticatV{{1, 0}}, ContinuousV{0.4},
                       OrdinalV{2}, RankedV{{1, 1, 2}}};
    const EvalReport rep = evaluate(s, truth, truth);
    ok = ok && *rep.binary_error == 0.0 && *rep.categorical_error == 0.0 &&
         *rep.multicat_error == 0.0 && *rep.continuous_rmse == 0.0 && *rep.ordinal_mae == 0.0 &&
         *rep.rank_error == 0.0 && *rep.multicat_recall == 1.0 && *rep.multicat_precision == 1.0;
  }

  // Randomized indicator sets: the reported error must equal 1 - F1.
  const DatasetSchema s = parse_schema("u multicat a,b\nv multicat c,d,e\n");
  Rng rng(66);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Instance> truth(4, empty_instance(2)), pred(4, empty_instance(2));
    for (std::size_t u = 0; u < truth.size(); ++u) {
      for (std::size_t i = 0; i < 2; ++i) {
        MulticatV tv, pv;
        tv.active.resize(i == 0 ? 2 : 3);
        pv.active.resize(tv.active.size());
        for (auto& a : tv.active) a = rng.bernoulli(0.4) ? 1 : 0;
        for (auto& a : pv.active) a = rng.bernoulli(0.4) ? 1 : 0;
        truth[u].values[i] = tv;
        pred[u].values[i] = pv;
      }
    }
    const EvalReport rep = evaluate(s, truth, pred);
    const double R = *rep.multicat_recall, P = *rep.multicat_precision;
    const double expected = R + P > 0.0 ? 1.0 - 2.0 * R * P / (R + P) : 1.0;
    worst = std::max(worst, std::abs(*rep.multicat_error - expected));
  }
  ok = ok && worst <= 1e-12;

  char buf[64];
  std::snprintf(buf, sizeof(buf), "examples exact, F1 identity dev %.2g", worst);
  return {ok, buf};
}

// ---------------------------------------------------------------------------
// 10. Byte-identical CLI reruns.

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Training logs carry a wall-clock column that legitimately differs.
std::string drop_last_column(const std::string& text) {
  std::string out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    const std::size_t tab = line.rfind('\t');
    out += tab == std::string::npos ? line : line.substr(0, tab);
    out += '\n';
    start = end + 1;
  }
  return out;
}

int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = std::string(MVRBM_CLI_PATH) + " " + args + " >" +
                          (dir / "_stdout").string() + " 2>" + (dir / "_stderr").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome check_cli_determinism() {
  const fs::path dir =
      fs::temp_directory_path() / ("mvrbm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{dir};

  {
    std::ofstream schema(dir / "schema.txt");
    schema << "a binary\nb categorical x,y,z\nc multicat p,q\nd continuous\n"
              "e ordinal l1,l2,l3\nf rank r1,r2,r3\n";
    std::ofstream data(dir / "data.csv");
    data << "a,b,c,d,e,f\n";
    Rng rng(12);
    const char* cats[] = {"x", "y", "z"};
    const char* sets[] = {"p", "q", "p|q"};
    const char* ords[] = {"l1", "l2", "l3"};
    const char* ranks[] = {"r1>r2>r3", "r3>r1=r2", "r2>r3>r1", "r1=r2=r3"};
    for (int u = 0; u < 30; ++u) {
      data << (rng.bernoulli(0.6) ? "1" : "0") << ','
           << cats[rng.categorical(std::vector<double>{0.5, 0.3, 0.2})] << ','
           << sets[rng.categorical(std::vector<double>{0.4, 0.3, 0.3})] << ','
           << rng.uniform(-2.0, 2.0) << ','
           << ords[rng.categorical(std::vector<double>{0.2, 0.3, 0.5})] << ','
           << ranks[rng.categorical(std::vector<double>{0.4, 0.2, 0.2, 0.2})] << '\n';
    }
  }
  const std::string schema = (dir / "schema.txt").string();
  const std::string data = (dir / "data.csv").string();

  auto path = [&](const std::string& name) { return (dir / name).string(); };
  std::string detail;
  bool ok = true;
  auto compare = [&](const std::string& label, const std::string& a, const std::string& b,
                     bool strip_wall = false) {
    const std::string ta = strip_wall ? drop_last_column(slurp(a)) : slurp(a);
    const std::string tb = strip_wall ? drop_last_column(slurp(b)) : slurp(b);
    const bool same = !ta.empty() && ta == tb;
    ok = ok && same;
    detail += (detail.empty() ? "" : ", ") + label + (same ? " ok" : " DIFFERS");
  };

  for (int r = 1; r <= 2; ++r) {
    const std::string suffix = std::to_string(r);
    ok = ok && run_cli(dir, "train --schema " + schema + " --data " + data +
                                " -k 3 --epochs 3 --seed 7 --model " + path("m" + suffix) +
                                " --log " + path("log" + suffix)) == 0;
  }
  compare("train model", path("m1"), path("m2"));
  compare("train log", path("log1"), path("log2"), true);

  for (int r = 1; r <= 2; ++r) {
    const std::string suffix = std::to_string(r);
    ok = ok && run_cli(dir, "complete --schema " + schema + " --data " + data +
                                " --mask-rate 0.25 -k 2 --epochs 2 --seed 4 --output " +
                                path("c" + suffix) + " --report " + path("crep" + suffix)) == 0;
    ok = ok && run_cli(dir, "predict --schema " + schema + " --data " + data +
                                " --target a -k 2 --epochs 2 --seed 5 --baseline --output " +
                                path("p" + suffix) + " --report " + path("prep" + suffix)) == 0;
    ok = ok && run_cli(dir, "features --model " + path("m1") + " --data " + data +
                                " --output " + path("f" + suffix)) == 0;
    ok = ok && run_cli(dir, "reconstruct --schema " + schema + " --data " + data +
                                " -k 2 --epochs 2 --seed 6 --report " + path("rrep" + suffix)) == 0;
    ok = ok && run_cli(dir, "synth --model " + path("m1") + " -n 20 --burn-in 50 --thin 2 " +
                                "--seed 8 --output " + path("s" + suffix)) == 0;
  }
  compare("complete output", path("c1"), path("c2"));
  compare("complete report", path("crep1"), path("crep2"));
  compare("predict output", path("p1"), path("p2"));
  compare("predict report", path("prep1"), path("prep2"));
  compare("features", path("f1"), path("f2"));
  compare("reconstruct report", path("rrep1"), path("rrep2"));
  compare("synth output", path("s1"), path("s2"));

  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "posterior and predictive exactness", check_posterior_exactness},
      {2, "exact gradient vs finite differences", check_gradient},
      {3, "gibbs sampler total variation", check_sampler},
      {4, "exact-gradient objective ascent", check_ascent},
      {5, "reconstruction error trend over width", check_reconstruction_trend},
      {6, "completion beats independent baseline", check_completion_trend},
      {7, "discriminative prediction beats baseline", check_prediction_trend},
      {8, "rank assignment counts", check_rank_counts},
      {9, "metric definitions", check_metrics},
      {10, "cli rerun determinism", check_cli_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.ok) ++failures;
    std::printf("%s %2d  %-42s %s (%.1fs)\n", outcome.ok ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all %zu criteria passed\n", std::size(criteria));
  } else {
    std::printf("%d criteria FAILED\n", failures);
  }
  return failures;
}
