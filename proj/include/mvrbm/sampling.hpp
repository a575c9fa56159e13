#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvrbm/model.hpp"
#include "mvrbm/rng.hpp"

namespace mvrbm {

// Gradient of the log-likelihood (or a stochastic estimate of it) in the same
// shape as ModelParams. `instance_count` tracks how many instances
// contributed so callers can average.
struct GradientAccumulator {
  struct VarGrad {
    Eigen::VectorXd bias;
    Eigen::MatrixXd weights;
    double log_gamma = 0.0;
  };

  Eigen::VectorXd hidden_bias;
  std::vector<VarGrad> vars;
  double instance_count = 0.0;

  static GradientAccumulator zeros_like(const ModelParams& params);
  void add_scaled(const GradientAccumulator& other, double s);
  void scale(double s);
  double max_abs() const;
};

// Adds sign * (per-variable sufficient statistics x hidden probabilities) for
// the observed positions of `inst`, plus sign * hidden_probs to the hidden
// bias slot. Rao-Blackwellized: expects probabilities, not sampled bits.
void accumulate_statistics(const ModelParams& params, const Instance& inst,
                           const Eigen::VectorXd& hidden_probs, double sign,
                           GradientAccumulator& acc);

// One exact draw from P(h | v); missing positions contribute nothing.
std::vector<std::uint8_t> sample_hidden(const ModelParams& params, const Instance& inst,
                                        Rng& rng);

// Draws a value from a conditional distribution. Indicator draws that come up
// all-zero are redrawn up to eight times, then the most probable indicator is
// forced on. Pairwise draws pick an outcome per pair independently and the
// per-category scores (win 1, tie 1/2) are grouped into dense ranks.
Value sample_from_distribution(const VariableSpec& spec, const PredictiveDistribution& dist,
                               Rng& rng);

// Draws every listed position from its conditional given h; all other
// positions of the result stay missing.
Instance sample_visible(const ModelParams& params, const std::vector<std::uint8_t>& h,
                        const std::vector<std::size_t>& positions, Rng& rng);
void sample_visible_into(const ModelParams& params, const std::vector<std::uint8_t>& h,
                         const std::vector<std::size_t>& positions, Rng& rng, Instance& inst);

// Dense ranks from descending scores; scores closer than `tie_tol` share a
// rank.
RankedV ranks_from_scores(std::span<const double> scores, double tie_tol = 1e-9);

// Contrastive-divergence gradient estimate for one batch. The positive phase
// uses posterior probabilities; the chain restarts from each instance,
// alternates k hidden/visible updates over the observed positions only, and
// the negative phase uses the posterior at the reconstructed state. Each
// instance consumes its own substream of `rng`, so results do not depend on
// sharding; `threads` > 1 fans instances out over worker threads.
GradientAccumulator cd_k(const ModelParams& params, std::span<const Instance> batch, int k_steps,
                         Rng& rng, int threads = 1);

}  // namespace mvrbm
