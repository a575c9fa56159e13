#include "mvrbm/prediction.hpp"

#include <algorithm>
#include <cmath>

#include "mvrbm/sampling.hpp"

namespace mvrbm {

namespace {

// Unnormalized log-probability of each candidate target value under the
// product form, given the hidden input lambda from the observed entries.
std::vector<double> candidate_log_weights(const ModelParams& params, std::size_t i,
                                          const Eigen::VectorXd& lambda,
                                          const std::vector<Value>& candidates) {
  std::vector<double> logw;
  logw.reserve(candidates.size());
  for (const auto& y : candidates) {
    double lw = g_value(params, i, y);
    const Eigen::VectorXd hy = h_vector(params, i, y);
    for (int k = 0; k < params.hidden_units; ++k) lw += softplus(lambda[k] + hy[k]);
    logw.push_back(lw);
  }
  return logw;
}

std::vector<double> normalize_log_weights(std::vector<double> logw) {
  const double norm = log_sum_exp(logw);
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - norm);
    total += w;
  }
  // second pass keeps exact ties exact (equal weights give exactly 1/n)
  for (double& w : logw) w /= total;
  return logw;
}

Instance masked_view(const Instance& inst, std::size_t i) {
  Instance view = inst;
  view.values[i] = MissingV{};
  return view;
}

PredictiveDistribution reduce_candidates(const VariableSpec& spec,
                                         const std::vector<Value>& candidates,
                                         const std::vector<double>& probs) {
  const int M = spec.arity();
  switch (spec.kind) {
    case VarKind::binary: {
      double p1 = 0.0;
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (std::get<BinaryV>(candidates[j]).value == 1) p1 += probs[j];
      }
      return BernoulliDist{p1};
    }
    case VarKind::categorical: {
      CategoricalDist d;
      d.probs = Eigen::VectorXd::Zero(M);
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        d.probs[std::get<CategoricalV>(candidates[j]).index] += probs[j];
      }
      return d;
    }
    case VarKind::ordinal: {
      OrdinalDist d;
      d.probs = Eigen::VectorXd::Zero(M);
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        d.probs[std::get<OrdinalV>(candidates[j]).level] += probs[j];
      }
      return d;
    }
    case VarKind::multicat: {
      IndicatorDist d;
      d.probs = Eigen::VectorXd::Zero(M);
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto& active = std::get<MulticatV>(candidates[j]).active;
        for (int m = 0; m < M; ++m) {
          if (active[static_cast<std::size_t>(m)]) d.probs[m] += probs[j];
        }
      }
      return d;
    }
    case VarKind::rank: {
      PairwiseDist d;
      d.succ = Eigen::MatrixXd::Zero(M, M);
      d.tie = Eigen::MatrixXd::Zero(M, M);
      d.prec = Eigen::MatrixXd::Zero(M, M);
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto& ranks = std::get<RankedV>(candidates[j]).ranks;
        for (int l = 0; l < M; ++l) {
          for (int m = 0; m < M; ++m) {
            if (l == m) continue;
            const int rl = ranks[static_cast<std::size_t>(l)];
            const int rm = ranks[static_cast<std::size_t>(m)];
            if (rl < rm) {
              d.succ(l, m) += probs[j];
            } else if (rl == rm) {
              d.tie(l, m) += probs[j];
            } else {
              d.prec(l, m) += probs[j];
            }
          }
        }
      }
      for (int m = 0; m < M; ++m) d.tie(m, m) = 1.0;
      return d;
    }
    case VarKind::continuous:
      break;
  }
  throw ModelError(spec.name + ": cannot reduce candidates for this kind");
}

}  // namespace

PredictiveDistribution predictive_distribution(const ModelParams& params, std::size_t i,
                                               const Instance& inst,
                                               std::uint64_t enum_budget) {
  if (i >= params.schema.size()) throw ModelError("variable index out of range");
  const auto& spec = params.schema.variables[i];
  if (inst.observed(i)) throw ModelError(spec.name + ": target is observed");
  if (spec.kind == VarKind::continuous) {
    throw ModelError(spec.name + ": continuous targets have no finite enumeration");
  }
  const Eigen::VectorXd lambda = hidden_input(params, inst);
  if (value_space_size(spec) > enum_budget) {
    // Factorized fallback: conditional at the posterior activations.
    Eigen::VectorXd p(lambda.size());
    for (int k = 0; k < lambda.size(); ++k) p[k] = logistic(lambda[k]);
    return conditional_data_distribution(params, i, p);
  }
  const auto candidates = enumerate_values(spec);
  const auto probs = normalize_log_weights(candidate_log_weights(params, i, lambda, candidates));
  return reduce_candidates(spec, candidates, probs);
}

Value decode_mode(const VariableSpec& spec, const PredictiveDistribution& dist,
                  double threshold) {
  if (const auto* b = std::get_if<BernoulliDist>(&dist)) {
    return BinaryV{b->p > 0.5 ? 1 : 0};
  }
  if (const auto* c = std::get_if<CategoricalDist>(&dist)) {
    int best = 0;
    for (int m = 1; m < c->probs.size(); ++m) {
      if (c->probs[m] > c->probs[best]) best = m;
    }
    return CategoricalV{best};
  }
  if (const auto* o = std::get_if<OrdinalDist>(&dist)) {
    int best = 0;
    for (int m = 1; m < o->probs.size(); ++m) {
      if (o->probs[m] > o->probs[best]) best = m;
    }
    return OrdinalV{best};
  }
  if (const auto* g = std::get_if<GaussianDist>(&dist)) {
    return ContinuousV{g->mean};
  }
  if (const auto* ind = std::get_if<IndicatorDist>(&dist)) {
    MulticatV v;
    const auto M = static_cast<std::size_t>(ind->probs.size());
    v.active.assign(M, 0);
    bool any = false;
    for (std::size_t m = 0; m < M; ++m) {
      if (ind->probs[static_cast<int>(m)] >= threshold) {
        v.active[m] = 1;
        any = true;
      }
    }
    if (!any) {
      std::size_t best = 0;
      for (std::size_t m = 1; m < M; ++m) {
        if (ind->probs[static_cast<int>(m)] > ind->probs[static_cast<int>(best)]) best = m;
      }
      v.active[best] = 1;
    }
    return v;
  }
  if (const auto* pw = std::get_if<PairwiseDist>(&dist)) {
    const int M = static_cast<int>(pw->succ.rows());
    std::vector<double> scores(static_cast<std::size_t>(M), 0.0);
    for (int m = 0; m < M; ++m) {
      for (int l = 0; l < M; ++l) {
        if (l != m) scores[static_cast<std::size_t>(m)] += pw->succ(m, l);
      }
    }
    return ranks_from_scores(scores, 1e-9);
  }
  throw ModelError(spec.name + ": cannot decode this distribution kind");
}

Value predict(const ModelParams& params, std::size_t i, const Instance& inst, double threshold,
              std::uint64_t enum_budget) {
  const auto& spec = params.schema.variables[i];
  if (spec.kind == VarKind::continuous) {
    const Eigen::VectorXd p = hidden_posterior(params, inst.observed(i) ? masked_view(inst, i) : inst);
    const auto& vp = params.vars[i];
    const double act = vp.bias[0] + vp.weights.row(0).dot(p);
    return ContinuousV{vp.sigma * vp.sigma * act};
  }
  return decode_mode(spec, predictive_distribution(params, i, inst, enum_budget), threshold);
}

Instance complete(const ModelParams& params, const CompletionRequest& request, double threshold,
                  std::uint64_t enum_budget) {
  const auto& inst = request.instance;
  if (inst.values.size() != params.schema.size()) throw ModelError("instance arity mismatch");
  std::vector<std::size_t> targets = request.targets;
  if (targets.empty()) {
    for (std::size_t i = 0; i < inst.values.size(); ++i) {
      if (!inst.observed(i)) targets.push_back(i);
    }
  }
  Instance view = inst;
  for (std::size_t t : targets) view.values[t] = MissingV{};
  Instance out = view;
  for (std::size_t t : targets) {
    out.values[t] = predict(params, t, view, threshold, enum_budget);
  }
  return out;
}

Eigen::VectorXd extract_features(const ModelParams& params, const Instance& inst) {
  return hidden_posterior(params, inst);
}

Instance reconstruct(const ModelParams& params, const Instance& inst) {
  const Eigen::VectorXd p = hidden_posterior(params, inst);
  Instance out = empty_instance(inst.values.size());
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (!inst.observed(i)) continue;
    out.values[i] =
        decode_mode(params.schema.variables[i], conditional_data_distribution(params, i, p));
  }
  return out;
}

MeanFieldState mean_field_predict(const ModelParams& params, std::size_t i, const Instance& inst,
                                  int max_iter, double tol, std::uint64_t enum_budget) {
  if (i >= params.schema.size()) throw ModelError("variable index out of range");
  const auto& spec = params.schema.variables[i];
  if (inst.observed(i)) throw ModelError(spec.name + ": target is observed");

  const Eigen::VectorXd lambda = hidden_input(params, inst);
  MeanFieldState state;
  state.hidden.resize(params.hidden_units);
  for (int k = 0; k < params.hidden_units; ++k) state.hidden[k] = logistic(lambda[k]);

  const bool continuous = spec.kind == VarKind::continuous;
  std::vector<Value> candidates;
  if (!continuous) {
    if (value_space_size(spec) > enum_budget) {
      throw BudgetError(spec.name + ": target space exceeds enumeration budget");
    }
    candidates = enumerate_values(spec);
  }
  const auto& vp = params.vars[i];

  // With max_iter = 1 the returned target is the one-shot approximation at
  // q = P(h | v_obs).
  std::vector<double> probs;
  for (int round = 0; round < std::max(1, max_iter); ++round) {
    // Update the target factor at the current hidden activations.
    Eigen::VectorXd expected_f;
    if (continuous) {
      const double mean = vp.sigma * vp.sigma * (vp.bias[0] + vp.weights.row(0).dot(state.hidden));
      expected_f = Eigen::VectorXd::Constant(1, mean);
      state.target = GaussianDist{mean, vp.sigma};
    } else {
      std::vector<double> logw;
      logw.reserve(candidates.size());
      for (const auto& y : candidates) {
        const Eigen::VectorXd hy = h_vector(params, i, y);
        logw.push_back(g_value(params, i, y) + hy.dot(state.hidden));
      }
      probs = normalize_log_weights(std::move(logw));
      expected_f = Eigen::VectorXd::Zero(vp.bias.size());
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        expected_f += probs[j] * feature_vector(spec, candidates[j]);
      }
      state.target = reduce_candidates(spec, candidates, probs);
    }

    // Update the hidden factors given the expected target statistics.
    const Eigen::VectorXd coupling = vp.weights.transpose() * expected_f;
    double delta = 0.0;
    for (int k = 0; k < params.hidden_units; ++k) {
      const double q = logistic(lambda[k] + coupling[k]);
      delta = std::max(delta, std::abs(q - state.hidden[k]));
      state.hidden[k] = q;
    }
    state.iterations = round + 1;
    if (delta < tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace mvrbm
