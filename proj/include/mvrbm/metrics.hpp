#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvrbm/schema.hpp"

namespace mvrbm {

// Per-type error rates over an evaluation slice. A rate is absent when the
// slice holds no observed truths of that type. Each (instance, variable)
// pair counts as one unit.
struct EvalReport {
  std::optional<double> binary_error;       // mean 0-1 loss
  std::optional<double> categorical_error;  // mean 0-1 loss
  std::optional<double> multicat_error;     // 1 - F1 over indicators
  std::optional<double> continuous_rmse;    // standardized units
  std::optional<double> ordinal_mae;        // |m - m_hat| / (M - 1), averaged
  std::optional<double> rank_error;         // pairwise disagreement, averaged
  std::optional<double> multicat_recall;
  std::optional<double> multicat_precision;
  std::size_t n_binary = 0;
  std::size_t n_categorical = 0;
  std::size_t n_multicat = 0;
  std::size_t n_continuous = 0;
  std::size_t n_ordinal = 0;
  std::size_t n_rank = 0;
};

// Fraction of category pairs ranked in strictly opposite order, weighted
// 2 / (M (M-1)); pairs tied in either argument contribute nothing.
double rank_disagreement(const RankedV& truth, const RankedV& pred);

// Compares predictions against truths position by position. Positions whose
// truth is missing are skipped; `mask`, when given, restricts scoring to
// entries flagged nonzero. A missing prediction at a scored position is an
// error in the caller's pipeline and throws.
EvalReport evaluate(const DatasetSchema& schema, std::span<const Instance> truth,
                    std::span<const Instance> pred,
                    const std::vector<std::vector<std::uint8_t>>* mask = nullptr);

// Tab-delimited rows, one metric per row, with an optional baseline column.
std::string format_report(const EvalReport& model, const EvalReport* baseline = nullptr);

}  // namespace mvrbm
