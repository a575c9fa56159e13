#include "mvrbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvrbm {

int param_block_size(const VariableSpec& spec) {
  switch (spec.kind) {
    case VarKind::binary:
    case VarKind::continuous:
      return 1;
    default:
      return spec.arity();
  }
}

ModelParams make_zero_params(const DatasetSchema& schema, int hidden_units) {
  if (hidden_units < 1) throw ModelError("need at least one hidden unit");
  ModelParams params;
  params.schema = schema;
  params.hidden_units = hidden_units;
  params.hidden_bias = Eigen::VectorXd::Zero(hidden_units);
  params.vars.reserve(schema.size());
  for (const auto& spec : schema.variables) {
    VarParams vp;
    const int B = param_block_size(spec);
    vp.bias = Eigen::VectorXd::Zero(B);
    vp.weights = Eigen::MatrixXd::Zero(B, hidden_units);
    params.vars.push_back(std::move(vp));
  }
  return params;
}

double ordinal_phi(int M, int d, int m) {
  return static_cast<double>(m - d) / static_cast<double>(M - 1);
}

int tie_pair_count(const RankedV& v) {
  int ties = 0;
  for (std::size_t l = 0; l < v.ranks.size(); ++l) {
    for (std::size_t m = l + 1; m < v.ranks.size(); ++m) {
      if (v.ranks[l] == v.ranks[m]) ++ties;
    }
  }
  return ties;
}

Eigen::VectorXd feature_vector(const VariableSpec& spec, const Value& v) {
  if (is_missing(v)) throw ModelError(spec.name + ": feature of missing value");
  const int M = spec.arity();
  switch (spec.kind) {
    case VarKind::binary: {
      const auto* b = std::get_if<BinaryV>(&v);
      if (!b) throw ModelError(spec.name + ": kind mismatch");
      Eigen::VectorXd f(1);
      f[0] = b->value;
      return f;
    }
    case VarKind::continuous: {
      const auto* c = std::get_if<ContinuousV>(&v);
      if (!c) throw ModelError(spec.name + ": kind mismatch");
      Eigen::VectorXd f(1);
      f[0] = c->value;
      return f;
    }
    case VarKind::categorical: {
      const auto* c = std::get_if<CategoricalV>(&v);
      if (!c || c->index < 0 || c->index >= M) throw ModelError(spec.name + ": kind mismatch");
      Eigen::VectorXd f = Eigen::VectorXd::Zero(M);
      f[c->index] = 1.0;
      return f;
    }
    case VarKind::multicat: {
      const auto* mv = std::get_if<MulticatV>(&v);
      if (!mv || static_cast<int>(mv->active.size()) != M) {
        throw ModelError(spec.name + ": kind mismatch");
      }
      Eigen::VectorXd f(M);
      for (int m = 0; m < M; ++m) f[m] = mv->active[static_cast<std::size_t>(m)];
      return f;
    }
    case VarKind::ordinal: {
      const auto* o = std::get_if<OrdinalV>(&v);
      if (!o || o->level < 0 || o->level >= M) throw ModelError(spec.name + ": kind mismatch");
      Eigen::VectorXd f(M);
      for (int d = 0; d < M; ++d) f[d] = ordinal_phi(M, d, o->level);
      return f;
    }
    case VarKind::rank: {
      const auto* r = std::get_if<RankedV>(&v);
      if (!r || static_cast<int>(r->ranks.size()) != M) {
        throw ModelError(spec.name + ": kind mismatch");
      }
      // Each pair contributes 1/M of the winner's parameters, split evenly
      // between the two categories when tied.
      Eigen::VectorXd f = Eigen::VectorXd::Zero(M);
      for (int l = 0; l < M; ++l) {
        for (int m = l + 1; m < M; ++m) {
          const int rl = r->ranks[static_cast<std::size_t>(l)];
          const int rm = r->ranks[static_cast<std::size_t>(m)];
          if (rl < rm) {
            f[l] += 1.0;
          } else if (rm < rl) {
            f[m] += 1.0;
          } else {
            f[l] += 0.5;
            f[m] += 0.5;
          }
        }
      }
      f /= static_cast<double>(M);
      return f;
    }
  }
  throw ModelError("unreachable");
}

namespace {

const VariableSpec& spec_at(const ModelParams& params, std::size_t i) {
  if (i >= params.schema.size()) throw ModelError("variable index out of range");
  return params.schema.variables[i];
}

}  // namespace

double g_value(const ModelParams& params, std::size_t i, const Value& v) {
  const auto& spec = spec_at(params, i);
  const auto& vp = params.vars[i];
  double base = 0.0;
  if (spec.kind == VarKind::continuous) {
    const double x = std::get<ContinuousV>(v).value;
    base = -x * x / (2.0 * vp.sigma * vp.sigma);
  } else if (spec.kind == VarKind::rank) {
    base = vp.log_gamma * tie_pair_count(std::get<RankedV>(v));
  }
  return base + vp.bias.dot(feature_vector(spec, v));
}

Eigen::VectorXd h_vector(const ModelParams& params, std::size_t i, const Value& v) {
  const auto& spec = spec_at(params, i);
  return params.vars[i].weights.transpose() * feature_vector(spec, v);
}

double h_value(const ModelParams& params, std::size_t i, int k, const Value& v) {
  const auto& spec = spec_at(params, i);
  if (k < 0 || k >= params.hidden_units) throw ModelError("hidden index out of range");
  return params.vars[i].weights.col(k).dot(feature_vector(spec, v));
}

Eigen::VectorXd hidden_input(const ModelParams& params, const Instance& inst) {
  if (inst.values.size() != params.schema.size()) throw ModelError("instance arity mismatch");
  Eigen::VectorXd total = params.hidden_bias;
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (inst.observed(i)) total += h_vector(params, i, inst.values[i]);
  }
  return total;
}

Eigen::VectorXd hidden_posterior(const ModelParams& params, const Instance& inst) {
  Eigen::VectorXd p = hidden_input(params, inst);
  for (int k = 0; k < p.size(); ++k) p[k] = logistic(p[k]);
  return p;
}

PredictiveDistribution conditional_data_distribution(const ModelParams& params, std::size_t i,
                                                     const Eigen::VectorXd& h) {
  const auto& spec = spec_at(params, i);
  const auto& vp = params.vars[i];
  if (h.size() != params.hidden_units) throw ModelError("hidden vector size mismatch");
  const Eigen::VectorXd act = vp.bias + vp.weights * h;  // block activations
  const int M = spec.arity();
  switch (spec.kind) {
    case VarKind::binary:
      return BernoulliDist{logistic(act[0])};
    case VarKind::continuous:
      return GaussianDist{vp.sigma * vp.sigma * act[0], vp.sigma};
    case VarKind::categorical: {
      CategoricalDist d;
      d.probs = act;
      const double mx = d.probs.maxCoeff();
      d.probs = (d.probs.array() - mx).exp();
      d.probs /= d.probs.sum();
      return d;
    }
    case VarKind::multicat: {
      IndicatorDist d;
      d.probs.resize(M);
      for (int m = 0; m < M; ++m) d.probs[m] = logistic(act[m]);
      return d;
    }
    case VarKind::ordinal: {
      OrdinalDist d;
      d.probs.resize(M);
      for (int m = 0; m < M; ++m) {
        double logit = 0.0;
        for (int dd = 0; dd < M; ++dd) logit += ordinal_phi(M, dd, m) * act[dd];
        d.probs[m] = logit;
      }
      const double mx = d.probs.maxCoeff();
      d.probs = (d.probs.array() - mx).exp();
      d.probs /= d.probs.sum();
      return d;
    }
    case VarKind::rank: {
      // Pairwise preference with tie potential gamma * sqrt(phi_l phi_m),
      // computed in log space.
      PairwiseDist d;
      d.succ = Eigen::MatrixXd::Zero(M, M);
      d.tie = Eigen::MatrixXd::Identity(M, M);
      d.prec = Eigen::MatrixXd::Zero(M, M);
      const Eigen::VectorXd s = act / static_cast<double>(M);  // log phi
      for (int l = 0; l < M; ++l) {
        for (int m = l + 1; m < M; ++m) {
          const double a = s[l];
          const double b = s[m];
          const double t = vp.log_gamma + 0.5 * (a + b);
          const double mx = std::max({a, b, t});
          const double ea = std::exp(a - mx);
          const double eb = std::exp(b - mx);
          const double et = std::exp(t - mx);
          const double z = ea + eb + et;
          d.succ(l, m) = ea / z;
          d.tie(l, m) = et / z;
          d.prec(l, m) = eb / z;
          d.succ(m, l) = d.prec(l, m);
          d.tie(m, l) = d.tie(l, m);
          d.prec(m, l) = d.succ(l, m);
        }
      }
      return d;
    }
  }
  throw ModelError("unreachable");
}

double energy(const ModelParams& params, const Instance& inst,
              const std::vector<std::uint8_t>& h) {
  if (inst.values.size() != params.schema.size()) throw ModelError("instance arity mismatch");
  if (static_cast<int>(h.size()) != params.hidden_units) {
    throw ModelError("hidden vector size mismatch");
  }
  double e = 0.0;
  Eigen::VectorXd coupling = Eigen::VectorXd::Zero(params.hidden_units);
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (!inst.observed(i)) throw ModelError("energy of a partially observed instance");
    e -= g_value(params, i, inst.values[i]);
    coupling += h_vector(params, i, inst.values[i]);
  }
  for (int k = 0; k < params.hidden_units; ++k) {
    if (h[static_cast<std::size_t>(k)]) e -= params.hidden_bias[k] + coupling[k];
  }
  return e;
}

double free_energy(const ModelParams& params, const Instance& inst) {
  double g_sum = 0.0;
  Eigen::VectorXd total = params.hidden_bias;
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (!inst.observed(i)) continue;
    g_sum += g_value(params, i, inst.values[i]);
    total += h_vector(params, i, inst.values[i]);
  }
  double acc = g_sum;
  for (int k = 0; k < params.hidden_units; ++k) acc += softplus(total[k]);
  return -acc;
}

double log_sum_exp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

double log_partition_brute(const ModelParams& params, const Grid& grid,
                           std::uint64_t max_states) {
  auto lists = enumerate_value_lists(params.schema, grid);
  std::vector<std::size_t> sizes;
  sizes.reserve(lists.size());
  for (const auto& l : lists) sizes.push_back(l.size());
  CartesianCounter counter(sizes);
  const std::uint64_t h_states = 1ull << params.hidden_units;
  if (counter.total() > max_states / h_states) {
    throw BudgetError("joint state count exceeds enumeration budget");
  }

  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(counter.total() * h_states));
  Instance inst = empty_instance(params.schema.size());
  std::vector<std::uint8_t> h(static_cast<std::size_t>(params.hidden_units), 0);
  do {
    for (std::size_t i = 0; i < lists.size(); ++i) inst.values[i] = lists[i][counter.index[i]];
    for (std::uint64_t mask = 0; mask < h_states; ++mask) {
      for (int k = 0; k < params.hidden_units; ++k) {
        h[static_cast<std::size_t>(k)] = (mask >> k) & 1u;
      }
      terms.push_back(-energy(params, inst, h));
    }
  } while (counter.advance());
  return log_sum_exp(terms);
}

}  // namespace mvrbm
