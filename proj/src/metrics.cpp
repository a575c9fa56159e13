#include "mvrbm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mvrbm {

double rank_disagreement(const RankedV& truth, const RankedV& pred) {
  const std::size_t M = truth.ranks.size();
  if (pred.ranks.size() != M) throw std::invalid_argument("rank arity mismatch");
  if (M < 2) return 0.0;
  int bad = 0;
  for (std::size_t l = 0; l < M; ++l) {
    for (std::size_t m = l + 1; m < M; ++m) {
      const int dt = truth.ranks[l] - truth.ranks[m];
      const int dp = pred.ranks[l] - pred.ranks[m];
      if ((dt < 0 && dp > 0) || (dt > 0 && dp < 0)) ++bad;
    }
  }
  return 2.0 * static_cast<double>(bad) / (static_cast<double>(M) * static_cast<double>(M - 1));
}

EvalReport evaluate(const DatasetSchema& schema, std::span<const Instance> truth,
                    std::span<const Instance> pred,
                    const std::vector<std::vector<std::uint8_t>>* mask) {
  if (truth.size() != pred.size()) throw std::invalid_argument("instance count mismatch");
  EvalReport rep;
  double bin_err = 0.0, cat_err = 0.0, sq_err = 0.0, ord_err = 0.0, rank_err = 0.0;
  double tp = 0.0, actual_pos = 0.0, pred_pos = 0.0;

  for (std::size_t u = 0; u < truth.size(); ++u) {
    if (truth[u].values.size() != schema.size() || pred[u].values.size() != schema.size()) {
      throw std::invalid_argument("instance arity mismatch");
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (!truth[u].observed(i)) continue;
      if (mask && !(*mask)[u][i]) continue;
      if (!pred[u].observed(i)) throw std::invalid_argument("prediction missing at scored entry");
      const auto& t = truth[u].values[i];
      const auto& p = pred[u].values[i];
      const auto& spec = schema.variables[i];
      switch (spec.kind) {
        case VarKind::binary:
          bin_err += std::get<BinaryV>(t).value != std::get<BinaryV>(p).value ? 1.0 : 0.0;
          ++rep.n_binary;
          break;
        case VarKind::categorical:
          cat_err += std::get<CategoricalV>(t).index != std::get<CategoricalV>(p).index ? 1.0 : 0.0;
          ++rep.n_categorical;
          break;
        case VarKind::multicat: {
          const auto& ta = std::get<MulticatV>(t).active;
          const auto& pa = std::get<MulticatV>(p).active;
          const double w = 1.0 / static_cast<double>(spec.arity());
          for (std::size_t m = 0; m < ta.size(); ++m) {
            if (ta[m] && pa[m]) tp += w;
            if (ta[m]) actual_pos += w;
            if (pa[m]) pred_pos += w;
          }
          ++rep.n_multicat;
          break;
        }
        case VarKind::continuous: {
          const double d = std::get<ContinuousV>(t).value - std::get<ContinuousV>(p).value;
          sq_err += d * d;
          ++rep.n_continuous;
          break;
        }
        case VarKind::ordinal:
          ord_err += std::abs(std::get<OrdinalV>(t).level - std::get<OrdinalV>(p).level) /
                     static_cast<double>(spec.arity() - 1);
          ++rep.n_ordinal;
          break;
        case VarKind::rank:
          rank_err += rank_disagreement(std::get<RankedV>(t), std::get<RankedV>(p));
          ++rep.n_rank;
          break;
      }
    }
  }

  if (rep.n_binary) rep.binary_error = bin_err / static_cast<double>(rep.n_binary);
  if (rep.n_categorical) rep.categorical_error = cat_err / static_cast<double>(rep.n_categorical);
  if (rep.n_continuous) {
    rep.continuous_rmse = std::sqrt(sq_err / static_cast<double>(rep.n_continuous));
  }
  if (rep.n_ordinal) rep.ordinal_mae = ord_err / static_cast<double>(rep.n_ordinal);
  if (rep.n_rank) rep.rank_error = rank_err / static_cast<double>(rep.n_rank);
  if (rep.n_multicat) {
    if (actual_pos == 0.0 && pred_pos == 0.0) {
      // No activations anywhere: vacuously perfect.
      rep.multicat_recall = 1.0;
      rep.multicat_precision = 1.0;
      rep.multicat_error = 0.0;
    } else {
      const double recall = actual_pos > 0.0 ? tp / actual_pos : 0.0;
      const double precision = pred_pos > 0.0 ? tp / pred_pos : 0.0;
      rep.multicat_recall = recall;
      rep.multicat_precision = precision;
      const double rp = recall + precision;
      rep.multicat_error = rp > 0.0 ? 1.0 - 2.0 * recall * precision / rp : 1.0;
    }
  }
  return rep;
}

namespace {

std::string fmt_rate(const std::optional<double>& x) {
  if (!x) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *x);
  return buf;
}

void row(std::string& out, const char* name, std::size_t count,
         const std::optional<double>& model, const EvalReport* baseline,
         const std::optional<double>& base_value) {
  out += name;
  out += '\t';
  out += std::to_string(count);
  out += '\t';
  out += fmt_rate(model);
  if (baseline) {
    out += '\t';
    out += fmt_rate(base_value);
  }
  out += '\n';
}

}  // namespace

std::string format_report(const EvalReport& model, const EvalReport* baseline) {
  std::string out = "metric\tcount\tmodel";
  if (baseline) out += "\tbaseline";
  out += '\n';
  row(out, "binary_error", model.n_binary, model.binary_error, baseline,
      baseline ? baseline->binary_error : std::nullopt);
  row(out, "categorical_error", model.n_categorical, model.categorical_error, baseline,
      baseline ? baseline->categorical_error : std::nullopt);
  row(out, "multicat_error", model.n_multicat, model.multicat_error, baseline,
      baseline ? baseline->multicat_error : std::nullopt);
  row(out, "multicat_recall", model.n_multicat, model.multicat_recall, baseline,
      baseline ? baseline->multicat_recall : std::nullopt);
  row(out, "multicat_precision", model.n_multicat, model.multicat_precision, baseline,
      baseline ? baseline->multicat_precision : std::nullopt);
  row(out, "continuous_rmse", model.n_continuous, model.continuous_rmse, baseline,
      baseline ? baseline->continuous_rmse : std::nullopt);
  row(out, "ordinal_mae", model.n_ordinal, model.ordinal_mae, baseline,
      baseline ? baseline->ordinal_mae : std::nullopt);
  row(out, "rank_disagreement", model.n_rank, model.rank_error, baseline,
      baseline ? baseline->rank_error : std::nullopt);
  return out;
}

}  // namespace mvrbm
