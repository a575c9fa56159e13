#pragma once

#include <cstdint>
#include <vector>

#include "mvrbm/model.hpp"

namespace mvrbm {

// One completion job: predict every target position of `instance` from its
// remaining observed entries. An empty target list means every missing
// position. Targets never condition on each other.
struct CompletionRequest {
  Instance instance;
  std::vector<std::size_t> targets;
};

struct MeanFieldState {
  PredictiveDistribution target;
  Eigen::VectorXd hidden;  // variational hidden activation probabilities
  int iterations = 0;
  bool converged = false;
};

// Distribution of variable i given the observed entries of `inst` with every
// hidden configuration summed out analytically:
//   P(v_i | v_obs)  proportional to  exp(G_i(v_i)) * prod_k (1 + exp(lambda_k + H_ik(v_i)))
// with lambda_k the hidden input from the observed entries. All products are
// accumulated as log1p sums, so magnitudes up to |H| ~ 700 stay finite.
//
// Binary, categorical and ordinal targets are enumerated directly. Multicat
// and rank targets are enumerated over their full value space when it fits
// `enum_budget` and the result is reduced to per-indicator activation
// probabilities or pairwise preference probabilities; beyond the budget the
// conditional at the posterior hidden activations is returned instead.
// Continuous targets have no finite enumeration and throw; use
// mean_field_predict or predict.
PredictiveDistribution predictive_distribution(const ModelParams& params, std::size_t i,
                                               const Instance& inst,
                                               std::uint64_t enum_budget = 100'000);

// Decodes a distribution to a point value: argmax with lowest-index ties for
// binary/categorical/ordinal, the mean for continuous, indicator >= threshold
// (an empty result promotes the top indicator) for multicat, and dense ranks
// by descending strict-preference score s_m = sum_l P(m beats l) for rank.
Value decode_mode(const VariableSpec& spec, const PredictiveDistribution& dist,
                  double threshold = 0.5);

// Point prediction of variable i. Continuous targets use the closed-form
// mean sigma^2 (U + V p) at the posterior activations p.
Value predict(const ModelParams& params, std::size_t i, const Instance& inst,
              double threshold = 0.5, std::uint64_t enum_budget = 100'000);

// Fills each requested target independently, conditioning only on the
// positions that are neither missing nor targets.
Instance complete(const ModelParams& params, const CompletionRequest& request,
                  double threshold = 0.5, std::uint64_t enum_budget = 100'000);

// Posterior hidden activations, the model's feature representation.
Eigen::VectorXd extract_features(const ModelParams& params, const Instance& inst);

// Re-decodes every observed entry as the mode of its conditional at the
// posterior activations of the full instance.
Instance reconstruct(const ModelParams& params, const Instance& inst);

// Coordinate-ascent variational approximation of P(v_i | v_obs):
//   Q(v_i) proportional to exp(G_i + sum_k H_ik q_k)
//   q_k = logistic(w_k + sum_obs H_jk + E_Q[H_ik])
// starting from the one-shot q = P(h | v_obs). Stops when no q_k moves more
// than `tol` or after `max_iter` rounds.
MeanFieldState mean_field_predict(const ModelParams& params, std::size_t i, const Instance& inst,
                                  int max_iter = 50, double tol = 1e-6,
                                  std::uint64_t enum_budget = 100'000);

}  // namespace mvrbm
