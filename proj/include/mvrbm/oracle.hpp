#pragma once

#include <cstdint>
#include <vector>

#include "mvrbm/sampling.hpp"

namespace mvrbm {

struct EnumerationBudget {
  std::uint64_t max_states = 10'000'000;  // joint (v, h) configurations
  Grid grid{};                            // discretization of continuous variables
};

// Exhaustive joint distribution over every admissible value combination and
// hidden configuration, built directly from the energy. Intended as a slow
// reference for small models; continuous variables live on the budget's grid.
struct JointTable {
  DatasetSchema schema;
  int hidden_units = 0;
  std::vector<std::vector<Value>> value_lists;  // per-variable candidates
  std::vector<std::size_t> sizes;
  std::vector<double> prob;  // index = v_state * 2^K + h_mask
  double log_z = 0.0;

  std::size_t v_state_count() const;
  std::size_t h_state_count() const { return std::size_t{1} << hidden_units; }

  std::vector<Value> decode(std::size_t v_state) const;

  // Sum of probability over hidden configurations for one value combination.
  double v_marginal_at(std::size_t v_state) const;

  // P(h_k = 1 | v) for a fully observed instance whose values appear in the
  // table (continuous entries must sit on grid points).
  Eigen::VectorXd hidden_conditional(const Instance& inst, double tol = 1e-9) const;

  // Marginal distribution of one variable over its candidate list.
  std::vector<double> variable_marginal(std::size_t i) const;

  // Conditional distribution of variable i given the observed entries of
  // `inst` (position i itself is ignored); any other missing positions are
  // marginalized out.
  std::vector<double> target_conditional(std::size_t i, const Instance& inst,
                                         double tol = 1e-9) const;
};

JointTable exact_joint(const ModelParams& params, const EnumerationBudget& budget = {});

// Exact log-likelihood of a dataset and its gradient. Missing entries of an
// instance are marginalized over their admissible values (grid points for
// continuous); the partition function is the grid-discretized one, consistent
// with the gradient.
double exact_loglik(const ModelParams& params, const Dataset& data,
                    const EnumerationBudget& budget = {});
GradientAccumulator exact_loglik_gradient(const ModelParams& params, const Dataset& data,
                                          const EnumerationBudget& budget = {});

// Draws n instances from a long-run alternating Gibbs chain over the full
// schema, then hides each entry independently with probability `mask_rate`.
// Standardization records on the result are identity.
Dataset generate_synthetic(const ModelParams& params, std::size_t n, std::uint64_t seed,
                           int burn_in = 1000, int thin = 10, double mask_rate = 0.0);

}  // namespace mvrbm
