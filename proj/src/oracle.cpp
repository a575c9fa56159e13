#include "mvrbm/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace mvrbm {

std::size_t JointTable::v_state_count() const {
  std::size_t t = 1;
  for (auto s : sizes) t *= s;
  return t;
}

std::vector<Value> JointTable::decode(std::size_t v_state) const {
  std::vector<Value> values(sizes.size());
  for (std::size_t i = sizes.size(); i-- > 0;) {
    values[i] = value_lists[i][v_state % sizes[i]];
    v_state /= sizes[i];
  }
  return values;
}

double JointTable::v_marginal_at(std::size_t v_state) const {
  const std::size_t H = h_state_count();
  double p = 0.0;
  for (std::size_t h = 0; h < H; ++h) p += prob[v_state * H + h];
  return p;
}

namespace {

// Index of the instance's value in each per-variable candidate list, or -1
// for missing positions. Throws when an observed value is absent from the
// list.
std::vector<long> locate(const JointTable& table, const Instance& inst, double tol) {
  std::vector<long> where(table.sizes.size(), -1);
  for (std::size_t i = 0; i < table.sizes.size(); ++i) {
    if (!inst.observed(i)) continue;
    long found = -1;
    for (std::size_t j = 0; j < table.value_lists[i].size(); ++j) {
      if (values_equal(table.value_lists[i][j], inst.values[i], tol)) {
        found = static_cast<long>(j);
        break;
      }
    }
    if (found < 0) throw ModelError("observed value not present in enumeration");
    where[i] = found;
  }
  return where;
}

bool state_matches(const JointTable& table, std::size_t v_state, const std::vector<long>& where) {
  for (std::size_t i = table.sizes.size(); i-- > 0;) {
    const auto idx = v_state % table.sizes[i];
    v_state /= table.sizes[i];
    if (where[i] >= 0 && static_cast<long>(idx) != where[i]) return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd JointTable::hidden_conditional(const Instance& inst, double tol) const {
  const auto where = locate(*this, inst, tol);
  for (long w : where) {
    if (w < 0) throw ModelError("hidden conditional needs a fully observed instance");
  }
  std::size_t v_state = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    v_state = v_state * sizes[i] + static_cast<std::size_t>(where[i]);
  }
  const std::size_t H = h_state_count();
  Eigen::VectorXd on = Eigen::VectorXd::Zero(hidden_units);
  double total = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    const double p = prob[v_state * H + h];
    total += p;
    for (int k = 0; k < hidden_units; ++k) {
      if ((h >> k) & 1u) on[k] += p;
    }
  }
  if (total <= 0.0) throw ModelError("conditioning event has zero probability");
  return on / total;
}

std::vector<double> JointTable::variable_marginal(std::size_t i) const {
  std::vector<double> marg(sizes[i], 0.0);
  const std::size_t V = v_state_count();
  std::size_t inner = 1;  // product of sizes after i
  for (std::size_t j = i + 1; j < sizes.size(); ++j) inner *= sizes[j];
  for (std::size_t v = 0; v < V; ++v) {
    marg[(v / inner) % sizes[i]] += v_marginal_at(v);
  }
  return marg;
}

std::vector<double> JointTable::target_conditional(std::size_t i, const Instance& inst,
                                                   double tol) const {
  auto where = locate(*this, inst, tol);
  where[i] = -1;
  std::vector<double> weights(sizes[i], 0.0);
  const std::size_t V = v_state_count();
  std::size_t inner = 1;
  for (std::size_t j = i + 1; j < sizes.size(); ++j) inner *= sizes[j];
  for (std::size_t v = 0; v < V; ++v) {
    if (!state_matches(*this, v, where)) continue;
    weights[(v / inner) % sizes[i]] += v_marginal_at(v);
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) throw ModelError("conditioning event has zero probability");
  for (double& w : weights) w /= total;
  return weights;
}

JointTable exact_joint(const ModelParams& params, const EnumerationBudget& budget) {
  JointTable table;
  table.schema = params.schema;
  table.hidden_units = params.hidden_units;
  table.value_lists = enumerate_value_lists(params.schema, budget.grid);
  for (const auto& l : table.value_lists) table.sizes.push_back(l.size());

  CartesianCounter counter(table.sizes);
  const std::uint64_t H = std::uint64_t{1} << params.hidden_units;
  const std::uint64_t total = counter.total() * H;
  if (total > budget.max_states) throw BudgetError("joint state count exceeds enumeration budget");

  table.prob.resize(static_cast<std::size_t>(total));
  Instance inst = empty_instance(params.schema.size());
  std::vector<std::uint8_t> h(static_cast<std::size_t>(params.hidden_units), 0);
  std::size_t flat = 0;
  do {
    for (std::size_t i = 0; i < table.value_lists.size(); ++i) {
      inst.values[i] = table.value_lists[i][counter.index[i]];
    }
    for (std::uint64_t mask = 0; mask < H; ++mask) {
      for (int k = 0; k < params.hidden_units; ++k) {
        h[static_cast<std::size_t>(k)] = (mask >> k) & 1u;
      }
      table.prob[flat++] = -energy(params, inst, h);
    }
  } while (counter.advance());

  table.log_z = log_sum_exp(table.prob);
  for (double& p : table.prob) p = std::exp(p - table.log_z);
  return table;
}

namespace {

// Positions of an instance that are missing, together with candidate lists.
struct FillPlan {
  std::vector<std::size_t> positions;
  std::vector<std::vector<Value>> lists;
  std::vector<std::size_t> sizes;
};

FillPlan plan_fills(const ModelParams& params, const Instance& inst, const Grid& grid) {
  FillPlan plan;
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (inst.observed(i)) continue;
    plan.positions.push_back(i);
    plan.lists.push_back(enumerate_values(params.schema.variables[i], &grid));
    plan.sizes.push_back(plan.lists.back().size());
  }
  return plan;
}

}  // namespace

double exact_loglik(const ModelParams& params, const Dataset& data,
                    const EnumerationBudget& budget) {
  const double log_z = log_partition_brute(params, budget.grid, budget.max_states);
  double total = 0.0;
  for (const auto& inst : data.instances) {
    const auto plan = plan_fills(params, inst, budget.grid);
    if (plan.positions.empty()) {
      total += -free_energy(params, inst) - log_z;
      continue;
    }
    CartesianCounter counter(plan.sizes);
    if (counter.total() > budget.max_states) {
      throw BudgetError("missing-value enumeration exceeds budget");
    }
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(counter.total()));
    Instance filled = inst;
    do {
      for (std::size_t j = 0; j < plan.positions.size(); ++j) {
        filled.values[plan.positions[j]] = plan.lists[j][counter.index[j]];
      }
      terms.push_back(-free_energy(params, filled));
    } while (counter.advance());
    total += log_sum_exp(terms) - log_z;
  }
  return total;
}

GradientAccumulator exact_loglik_gradient(const ModelParams& params, const Dataset& data,
                                          const EnumerationBudget& budget) {
  GradientAccumulator acc = GradientAccumulator::zeros_like(params);

  // Positive phase: expected sufficient statistics given each instance's
  // observed entries.
  for (const auto& inst : data.instances) {
    const auto plan = plan_fills(params, inst, budget.grid);
    if (plan.positions.empty()) {
      accumulate_statistics(params, inst, hidden_posterior(params, inst), +1.0, acc);
      acc.instance_count += 1.0;
      continue;
    }
    CartesianCounter counter(plan.sizes);
    if (counter.total() > budget.max_states) {
      throw BudgetError("missing-value enumeration exceeds budget");
    }
    std::vector<double> logw;
    logw.reserve(static_cast<std::size_t>(counter.total()));
    Instance filled = inst;
    do {
      for (std::size_t j = 0; j < plan.positions.size(); ++j) {
        filled.values[plan.positions[j]] = plan.lists[j][counter.index[j]];
      }
      logw.push_back(-free_energy(params, filled));
    } while (counter.advance());
    const double norm = log_sum_exp(logw);

    CartesianCounter counter2(plan.sizes);
    std::size_t t = 0;
    do {
      for (std::size_t j = 0; j < plan.positions.size(); ++j) {
        filled.values[plan.positions[j]] = plan.lists[j][counter2.index[j]];
      }
      const double w = std::exp(logw[t++] - norm);
      accumulate_statistics(params, filled, hidden_posterior(params, filled), w, acc);
    } while (counter2.advance());
    acc.instance_count += 1.0;
  }

  // Negative phase: model expectations from the exhaustive joint.
  const JointTable table = exact_joint(params, budget);
  const double n = static_cast<double>(data.instances.size());
  const std::size_t V = table.v_state_count();
  const std::size_t H = table.h_state_count();
  Eigen::VectorXd hv(params.hidden_units);
  Instance inst;
  for (std::size_t v = 0; v < V; ++v) {
    inst.values = table.decode(v);
    for (std::size_t hm = 0; hm < H; ++hm) {
      const double p = table.prob[v * H + hm];
      if (p == 0.0) continue;
      for (int k = 0; k < params.hidden_units; ++k) hv[k] = (hm >> k) & 1u;
      accumulate_statistics(params, inst, hv, -n * p, acc);
    }
  }
  acc.instance_count = n;
  return acc;
}

Dataset generate_synthetic(const ModelParams& params, std::size_t n, std::uint64_t seed,
                           int burn_in, int thin, double mask_rate) {
  Dataset ds;
  ds.schema = params.schema;
  ds.standardization.assign(params.schema.size(), Standardization{});
  if (n == 0) return ds;

  Rng root(seed);
  Rng chain_rng = root.split(1);
  Rng mask_rng = root.split(2);

  std::vector<std::size_t> all(params.schema.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  std::vector<std::uint8_t> h(static_cast<std::size_t>(params.hidden_units));
  for (auto& bit : h) bit = chain_rng.bernoulli(0.5) ? 1 : 0;
  Instance state = sample_visible(params, h, all, chain_rng);

  auto sweep = [&]() {
    h = sample_hidden(params, state, chain_rng);
    sample_visible_into(params, h, all, chain_rng, state);
  };

  for (int s = 0; s < burn_in; ++s) sweep();
  ds.instances.reserve(n);
  while (ds.instances.size() < n) {
    for (int s = 0; s < thin; ++s) sweep();
    ds.instances.push_back(state);
  }

  if (mask_rate > 0.0) {
    for (auto& inst : ds.instances) {
      for (auto& v : inst.values) {
        if (mask_rng.bernoulli(mask_rate)) v = MissingV{};
      }
    }
  }
  return ds;
}

}  // namespace mvrbm
