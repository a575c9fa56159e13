#include "mvrbm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace mvrbm {

GradientAccumulator GradientAccumulator::zeros_like(const ModelParams& params) {
  GradientAccumulator acc;
  acc.hidden_bias = Eigen::VectorXd::Zero(params.hidden_units);
  acc.vars.reserve(params.vars.size());
  for (const auto& vp : params.vars) {
    VarGrad g;
    g.bias = Eigen::VectorXd::Zero(vp.bias.size());
    g.weights = Eigen::MatrixXd::Zero(vp.weights.rows(), vp.weights.cols());
    acc.vars.push_back(std::move(g));
  }
  return acc;
}

void GradientAccumulator::add_scaled(const GradientAccumulator& other, double s) {
  hidden_bias += s * other.hidden_bias;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    vars[i].bias += s * other.vars[i].bias;
    vars[i].weights += s * other.vars[i].weights;
    vars[i].log_gamma += s * other.vars[i].log_gamma;
  }
  instance_count += s * other.instance_count;
}

void GradientAccumulator::scale(double s) {
  hidden_bias *= s;
  for (auto& g : vars) {
    g.bias *= s;
    g.weights *= s;
    g.log_gamma *= s;
  }
}

double GradientAccumulator::max_abs() const {
  double mx = hidden_bias.size() ? hidden_bias.cwiseAbs().maxCoeff() : 0.0;
  for (const auto& g : vars) {
    if (g.bias.size()) mx = std::max(mx, g.bias.cwiseAbs().maxCoeff());
    if (g.weights.size()) mx = std::max(mx, g.weights.cwiseAbs().maxCoeff());
    mx = std::max(mx, std::abs(g.log_gamma));
  }
  return mx;
}

void accumulate_statistics(const ModelParams& params, const Instance& inst,
                           const Eigen::VectorXd& hidden_probs, double sign,
                           GradientAccumulator& acc) {
  acc.hidden_bias += sign * hidden_probs;
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (!inst.observed(i)) continue;
    const auto& spec = params.schema.variables[i];
    const Eigen::VectorXd f = feature_vector(spec, inst.values[i]);
    acc.vars[i].bias += sign * f;
    acc.vars[i].weights += sign * f * hidden_probs.transpose();
    if (spec.kind == VarKind::rank) {
      acc.vars[i].log_gamma += sign * tie_pair_count(std::get<RankedV>(inst.values[i]));
    }
  }
}

std::vector<std::uint8_t> sample_hidden(const ModelParams& params, const Instance& inst,
                                        Rng& rng) {
  const Eigen::VectorXd p = hidden_posterior(params, inst);
  std::vector<std::uint8_t> h(static_cast<std::size_t>(params.hidden_units));
  for (int k = 0; k < params.hidden_units; ++k) {
    h[static_cast<std::size_t>(k)] = rng.bernoulli(p[k]) ? 1 : 0;
  }
  return h;
}

RankedV ranks_from_scores(std::span<const double> scores, double tie_tol) {
  const std::size_t M = scores.size();
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RankedV out;
  out.ranks.assign(M, 0);
  int tier = 0;
  double prev = 0.0;
  for (std::size_t pos = 0; pos < M; ++pos) {
    if (pos == 0 || prev - scores[order[pos]] > tie_tol) ++tier;
    out.ranks[order[pos]] = tier;
    prev = scores[order[pos]];
  }
  return out;
}

Value sample_from_distribution(const VariableSpec& spec, const PredictiveDistribution& dist,
                               Rng& rng) {
  if (const auto* b = std::get_if<BernoulliDist>(&dist)) {
    return BinaryV{rng.bernoulli(b->p) ? 1 : 0};
  }
  if (const auto* c = std::get_if<CategoricalDist>(&dist)) {
    return CategoricalV{static_cast<int>(
        rng.categorical(std::span<const double>(c->probs.data(), c->probs.size())))};
  }
  if (const auto* o = std::get_if<OrdinalDist>(&dist)) {
    return OrdinalV{static_cast<int>(
        rng.categorical(std::span<const double>(o->probs.data(), o->probs.size())))};
  }
  if (const auto* g = std::get_if<GaussianDist>(&dist)) {
    return ContinuousV{rng.normal(g->mean, g->sd)};
  }
  if (const auto* ind = std::get_if<IndicatorDist>(&dist)) {
    const auto M = static_cast<std::size_t>(ind->probs.size());
    MulticatV v;
    v.active.assign(M, 0);
    for (int attempt = 0; attempt < 8; ++attempt) {
      bool any = false;
      for (std::size_t m = 0; m < M; ++m) {
        v.active[m] = rng.bernoulli(ind->probs[static_cast<int>(m)]) ? 1 : 0;
        any = any || v.active[m];
      }
      if (any) return v;
    }
    std::size_t best = 0;
    for (std::size_t m = 1; m < M; ++m) {
      if (ind->probs[static_cast<int>(m)] > ind->probs[static_cast<int>(best)]) best = m;
    }
    v.active.assign(M, 0);
    v.active[best] = 1;
    return v;
  }
  if (const auto* pw = std::get_if<PairwiseDist>(&dist)) {
    const auto M = static_cast<std::size_t>(pw->succ.rows());
    std::vector<double> scores(M, 0.0);
    for (std::size_t l = 0; l < M; ++l) {
      for (std::size_t m = l + 1; m < M; ++m) {
        const double ps = pw->succ(static_cast<int>(l), static_cast<int>(m));
        const double pt = pw->tie(static_cast<int>(l), static_cast<int>(m));
        const double u = rng.uniform01();
        if (u < ps) {
          scores[l] += 1.0;
        } else if (u < ps + pt) {
          scores[l] += 0.5;
          scores[m] += 0.5;
        } else {
          scores[m] += 1.0;
        }
      }
    }
    return ranks_from_scores(scores);
  }
  throw ModelError(spec.name + ": cannot sample this distribution kind");
}

void sample_visible_into(const ModelParams& params, const std::vector<std::uint8_t>& h,
                         const std::vector<std::size_t>& positions, Rng& rng, Instance& inst) {
  Eigen::VectorXd hv(params.hidden_units);
  for (int k = 0; k < params.hidden_units; ++k) hv[k] = h[static_cast<std::size_t>(k)];
  for (std::size_t i : positions) {
    const auto dist = conditional_data_distribution(params, i, hv);
    inst.values[i] = sample_from_distribution(params.schema.variables[i], dist, rng);
  }
}

Instance sample_visible(const ModelParams& params, const std::vector<std::uint8_t>& h,
                        const std::vector<std::size_t>& positions, Rng& rng) {
  Instance inst = empty_instance(params.schema.size());
  sample_visible_into(params, h, positions, rng, inst);
  return inst;
}

namespace {

void cd_one_instance(const ModelParams& params, const Instance& inst, int k_steps, Rng rng,
                     GradientAccumulator& acc) {
  const Eigen::VectorXd pos_probs = hidden_posterior(params, inst);
  accumulate_statistics(params, inst, pos_probs, +1.0, acc);

  const auto positions = inst.observed_positions();
  Instance chain = inst;
  for (int step = 0; step < k_steps; ++step) {
    const auto h = sample_hidden(params, chain, rng);
    sample_visible_into(params, h, positions, rng, chain);
  }
  const Eigen::VectorXd neg_probs = hidden_posterior(params, chain);
  accumulate_statistics(params, chain, neg_probs, -1.0, acc);
  acc.instance_count += 1.0;
}

}  // namespace

GradientAccumulator cd_k(const ModelParams& params, std::span<const Instance> batch, int k_steps,
                         Rng& rng, int threads) {
  if (k_steps < 1) throw ModelError("need at least one chain step");
  const std::size_t n = batch.size();
  if (threads <= 1 || n < 2) {
    GradientAccumulator acc = GradientAccumulator::zeros_like(params);
    for (std::size_t u = 0; u < n; ++u) {
      cd_one_instance(params, batch[u], k_steps, rng.split(u), acc);
    }
    return acc;
  }

  const auto n_shards = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<GradientAccumulator> shard_acc(n_shards, GradientAccumulator::zeros_like(params));
  std::vector<std::thread> workers;
  workers.reserve(n_shards);
  for (std::size_t s = 0; s < n_shards; ++s) {
    workers.emplace_back([&, s] {
      const std::size_t lo = n * s / n_shards;
      const std::size_t hi = n * (s + 1) / n_shards;
      for (std::size_t u = lo; u < hi; ++u) {
        cd_one_instance(params, batch[u], k_steps, rng.split(u), shard_acc[s]);
      }
    });
  }
  for (auto& w : workers) w.join();
  GradientAccumulator acc = GradientAccumulator::zeros_like(params);
  for (const auto& sa : shard_acc) acc.add_scaled(sa, 1.0);
  return acc;
}

}  // namespace mvrbm
