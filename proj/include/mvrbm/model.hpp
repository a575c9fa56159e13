#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mvrbm/schema.hpp"

namespace mvrbm {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters of one visible variable. `bias` has one entry per parameter
// block (1 for binary/continuous, M otherwise) and `weights` couples each
// block entry to every hidden unit.
struct VarParams {
  Eigen::VectorXd bias;      // U
  Eigen::MatrixXd weights;   // V, block x K
  double log_gamma = 0.0;    // rank tie strength, log scale
  double sigma = 1.0;        // continuous noise scale, fixed
};

struct ModelParams {
  DatasetSchema schema;
  int hidden_units = 0;      // K
  Eigen::VectorXd hidden_bias;
  std::vector<VarParams> vars;
};

// Number of bias/weight rows a variable contributes.
int param_block_size(const VariableSpec& spec);

ModelParams make_zero_params(const DatasetSchema& schema, int hidden_units);

// Sufficient statistics of a value: the vector f with G = base + U.f and
// H_k = (V^T f)_k. Binary/continuous use [v]; categorical a one-hot vector;
// multicat the indicator vector; ordinal entry d is (m - d)/(M - 1); rank
// entry m is (wins_m + ties_m/2)/M over the value's pairwise comparisons.
Eigen::VectorXd feature_vector(const VariableSpec& spec, const Value& v);

// Number of unordered tied pairs in a rank value.
int tie_pair_count(const RankedV& v);

// Order-dependent bias weight of level m under anchor d (both zero-based).
double ordinal_phi(int M, int d, int m);

// Singleton energy term G_i(v). For continuous adds -v^2/(2 sigma^2); for
// rank adds log(gamma) once per tied pair so the energy matches the pairwise
// tie potentials.
double g_value(const ModelParams& params, std::size_t i, const Value& v);

// Interaction term H_ik(v) for one hidden unit, and the K-vector of all of
// them.
double h_value(const ModelParams& params, std::size_t i, int k, const Value& v);
Eigen::VectorXd h_vector(const ModelParams& params, std::size_t i, const Value& v);

// Total hidden input w_k + sum_i H_ik(v_i) over observed positions, and the
// exact posterior P(h_k = 1 | v) = logistic of it. Missing entries contribute
// nothing.
Eigen::VectorXd hidden_input(const ModelParams& params, const Instance& inst);
Eigen::VectorXd hidden_posterior(const ModelParams& params, const Instance& inst);

struct BernoulliDist {
  double p = 0.0;  // P(v = 1)
};
struct CategoricalDist {
  Eigen::VectorXd probs;
};
struct IndicatorDist {
  Eigen::VectorXd probs;  // per-category activation probabilities
};
struct GaussianDist {
  double mean = 0.0;
  double sd = 1.0;
};
struct OrdinalDist {
  Eigen::VectorXd probs;
};
// Entry (l, m) describes the comparison of categories l and m: probability
// that l is preferred, that they tie, and that m is preferred. Triples sum to
// one; the diagonal is a self-tie.
struct PairwiseDist {
  Eigen::MatrixXd succ;
  Eigen::MatrixXd tie;
  Eigen::MatrixXd prec;
};

using PredictiveDistribution = std::variant<BernoulliDist, CategoricalDist, IndicatorDist,
                                            GaussianDist, OrdinalDist, PairwiseDist>;

// Distribution of variable i given hidden activations h (entries may be
// probabilities, not just bits). Rank variables yield the pairwise
// preference model with tie strength gamma.
PredictiveDistribution conditional_data_distribution(const ModelParams& params, std::size_t i,
                                                     const Eigen::VectorXd& h);

// Joint energy of a fully observed instance and a hidden configuration.
double energy(const ModelParams& params, const Instance& inst,
              const std::vector<std::uint8_t>& h);

// -log sum_h exp(-E(v, h)) over the observed positions of `inst`.
double free_energy(const ModelParams& params, const Instance& inst);

// Exhaustive log partition function; continuous variables are summed over the
// grid points (a Riemann-style approximation). Enumerates hidden
// configurations explicitly. Throws BudgetError when the joint state count
// exceeds `max_states`.
double log_partition_brute(const ModelParams& params, const Grid& grid,
                           std::uint64_t max_states = 10'000'000);

// Fitted model together with the column standardization it was trained under.
struct SavedModel {
  ModelParams params;
  std::vector<Standardization> standardization;
};

// Versioned little-endian binary dump; round-trips bit-exactly.
void save_model(const std::string& path, const SavedModel& model);
SavedModel load_model(const std::string& path);

inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 37.0) return x;
  if (x < -37.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double log_sum_exp(std::span<const double> xs);

}  // namespace mvrbm
