#include "mvrbm/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace mvrbm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      lines.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

const char* kind_name(VarKind kind) {
  switch (kind) {
    case VarKind::binary: return "binary";
    case VarKind::categorical: return "categorical";
    case VarKind::multicat: return "multicat";
    case VarKind::continuous: return "continuous";
    case VarKind::ordinal: return "ordinal";
    case VarKind::rank: return "rank";
  }
  return "?";
}

std::optional<VarKind> kind_from_name(std::string_view name) {
  for (VarKind k : {VarKind::binary, VarKind::categorical, VarKind::multicat,
                    VarKind::continuous, VarKind::ordinal, VarKind::rank}) {
    if (name == kind_name(k)) return k;
  }
  return std::nullopt;
}

bool kind_has_categories(VarKind kind) {
  return kind == VarKind::categorical || kind == VarKind::multicat ||
         kind == VarKind::ordinal || kind == VarKind::rank;
}

int kind_index(VarKind kind) { return static_cast<int>(kind); }

int VariableSpec::category_index(std::string_view label) const {
  for (std::size_t m = 0; m < categories.size(); ++m) {
    if (categories[m] == label) return static_cast<int>(m);
  }
  return -1;
}

void validate_value(const VariableSpec& spec, const Value& v) {
  if (is_missing(v)) return;
  const int M = spec.arity();
  switch (spec.kind) {
    case VarKind::binary: {
      const auto* b = std::get_if<BinaryV>(&v);
      if (!b) throw ParseError(spec.name + ": expected binary value");
      if (b->value != 0 && b->value != 1) throw ParseError(spec.name + ": binary value not 0/1");
      return;
    }
    case VarKind::categorical: {
      const auto* c = std::get_if<CategoricalV>(&v);
      if (!c) throw ParseError(spec.name + ": expected categorical value");
      if (c->index < 0 || c->index >= M) throw ParseError(spec.name + ": category out of range");
      return;
    }
    case VarKind::multicat: {
      const auto* m = std::get_if<MulticatV>(&v);
      if (!m) throw ParseError(spec.name + ": expected multicat value");
      if (static_cast<int>(m->active.size()) != M) {
        throw ParseError(spec.name + ": indicator count mismatch");
      }
      bool any = false;
      for (auto a : m->active) {
        if (a != 0 && a != 1) throw ParseError(spec.name + ": indicator not 0/1");
        any = any || a == 1;
      }
      if (!any) throw ParseError(spec.name + ": multicat value has no active category");
      return;
    }
    case VarKind::continuous: {
      const auto* c = std::get_if<ContinuousV>(&v);
      if (!c) throw ParseError(spec.name + ": expected continuous value");
      if (!std::isfinite(c->value)) throw ParseError(spec.name + ": non-finite value");
      return;
    }
    case VarKind::ordinal: {
      const auto* o = std::get_if<OrdinalV>(&v);
      if (!o) throw ParseError(spec.name + ": expected ordinal value");
      if (o->level < 0 || o->level >= M) throw ParseError(spec.name + ": level out of range");
      return;
    }
    case VarKind::rank: {
      const auto* r = std::get_if<RankedV>(&v);
      if (!r) throw ParseError(spec.name + ": expected rank value");
      if (static_cast<int>(r->ranks.size()) != M) {
        throw ParseError(spec.name + ": rank count mismatch");
      }
      int top = 0;
      for (int rk : r->ranks) {
        if (rk < 1 || rk > M) throw ParseError(spec.name + ": rank out of range");
        top = std::max(top, rk);
      }
      std::vector<bool> used(static_cast<std::size_t>(top), false);
      for (int rk : r->ranks) used[static_cast<std::size_t>(rk - 1)] = true;
      for (bool u : used) {
        if (!u) throw ParseError(spec.name + ": ranks are not dense");
      }
      return;
    }
  }
}

bool values_equal(const Value& a, const Value& b, double tol) {
  if (a.index() != b.index()) return false;
  if (const auto* ca = std::get_if<ContinuousV>(&a)) {
    return std::abs(ca->value - std::get<ContinuousV>(b).value) <= tol;
  }
  return a == b;
}

std::vector<std::size_t> Instance::observed_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (observed(i)) out.push_back(i);
  }
  return out;
}

Instance empty_instance(std::size_t n) {
  Instance inst;
  inst.values.assign(n, MissingV{});
  return inst;
}

int DatasetSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

DatasetSchema parse_schema(std::string_view text) {
  DatasetSchema schema;
  auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = trim(lines[li]);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t line_no = li + 1;

    std::size_t sp1 = line.find(' ');
    if (sp1 == std::string_view::npos) fail(line_no, "expected `<name> <kind>`");
    VariableSpec spec;
    spec.name = std::string(trim(line.substr(0, sp1)));
    std::string_view rest = trim(line.substr(sp1 + 1));

    std::size_t sp2 = rest.find(' ');
    std::string_view kind_tok = sp2 == std::string_view::npos ? rest : rest.substr(0, sp2);
    auto kind = kind_from_name(trim(kind_tok));
    if (!kind) fail(line_no, "unknown kind `" + std::string(kind_tok) + "`");
    spec.kind = *kind;

    std::string_view cats =
        sp2 == std::string_view::npos ? std::string_view{} : trim(rest.substr(sp2 + 1));
    if (kind_has_categories(spec.kind)) {
      if (cats.empty()) fail(line_no, "kind requires a category list");
      for (auto tok : split(cats, ',')) {
        auto label = trim(tok);
        if (label.empty()) fail(line_no, "empty category label");
        if (spec.category_index(label) >= 0) {
          fail(line_no, "duplicate category `" + std::string(label) + "`");
        }
        spec.categories.emplace_back(label);
      }
      if (spec.arity() < 2) fail(line_no, "need at least two categories");
    } else if (!cats.empty()) {
      fail(line_no, std::string(kind_name(spec.kind)) + " takes no categories");
    }

    if (schema.index_of(spec.name) >= 0) {
      fail(line_no, "duplicate variable name `" + spec.name + "`");
    }
    schema.variables.push_back(std::move(spec));
  }
  if (schema.variables.empty()) throw ParseError("schema has no variables");
  return schema;
}

std::string serialize_schema(const DatasetSchema& schema) {
  std::string out;
  for (const auto& spec : schema.variables) {
    out += spec.name;
    out += ' ';
    out += kind_name(spec.kind);
    for (std::size_t m = 0; m < spec.categories.size(); ++m) {
      out += m == 0 ? " " : ",";
      out += spec.categories[m];
    }
    out += '\n';
  }
  return out;
}

namespace {

Value parse_raw_cell(const VariableSpec& spec, std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  if (cell.empty()) return MissingV{};
  switch (spec.kind) {
    case VarKind::binary: {
      if (cell == "0") return BinaryV{0};
      if (cell == "1") return BinaryV{1};
      fail(line_no, spec.name + ": invalid binary cell `" + std::string(cell) + "`");
    }
    case VarKind::categorical:
    case VarKind::ordinal: {
      int idx = spec.category_index(cell);
      if (idx < 0) fail(line_no, spec.name + ": unknown category `" + std::string(cell) + "`");
      if (spec.kind == VarKind::categorical) return CategoricalV{idx};
      return OrdinalV{idx};
    }
    case VarKind::multicat: {
      MulticatV v;
      v.active.assign(static_cast<std::size_t>(spec.arity()), 0);
      for (auto tok : split(cell, '|')) {
        auto label = trim(tok);
        if (label.empty()) fail(line_no, spec.name + ": malformed multicat cell");
        int idx = spec.category_index(label);
        if (idx < 0) fail(line_no, spec.name + ": unknown category `" + std::string(label) + "`");
        if (v.active[static_cast<std::size_t>(idx)]) {
          fail(line_no, spec.name + ": repeated category `" + std::string(label) + "`");
        }
        v.active[static_cast<std::size_t>(idx)] = 1;
      }
      return v;
    }
    case VarKind::continuous: {
      double x = 0.0;
      auto* first = cell.data();
      auto* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, x);
      if (ec != std::errc{} || ptr != last) {
        fail(line_no, spec.name + ": invalid numeric cell `" + std::string(cell) + "`");
      }
      return ContinuousV{x};
    }
    case VarKind::rank: {
      RankedV v;
      v.ranks.assign(static_cast<std::size_t>(spec.arity()), 0);
      int seen = 0;
      auto tiers = split(cell, '>');
      for (std::size_t t = 0; t < tiers.size(); ++t) {
        auto tier = trim(tiers[t]);
        if (tier.empty()) fail(line_no, spec.name + ": malformed rank cell");
        for (auto tok : split(tier, '=')) {
          auto label = trim(tok);
          if (label.empty()) fail(line_no, spec.name + ": malformed rank cell");
          int idx = spec.category_index(label);
          if (idx < 0) {
            fail(line_no, spec.name + ": unknown category `" + std::string(label) + "`");
          }
          if (v.ranks[static_cast<std::size_t>(idx)] != 0) {
            fail(line_no, spec.name + ": repeated category `" + std::string(label) + "`");
          }
          v.ranks[static_cast<std::size_t>(idx)] = static_cast<int>(t) + 1;
          ++seen;
        }
      }
      if (seen != spec.arity()) fail(line_no, spec.name + ": rank cell must order every category");
      return v;
    }
  }
  fail(line_no, "unreachable");
}

Dataset parse_rows(std::string_view text, const DatasetSchema& schema,
                   const std::vector<Standardization>* fixed) {
  Dataset ds;
  ds.schema = schema;
  const std::size_t n_vars = schema.size();

  auto lines = split_lines(text);
  std::size_t li = 0;
  while (li < lines.size() && trim(lines[li]).empty()) ++li;
  if (li >= lines.size()) throw ParseError("data file has no header row");

  auto header = split(trim(lines[li]), ',');
  if (header.size() != n_vars) {
    fail(li + 1, "header has " + std::to_string(header.size()) + " columns, schema has " +
                     std::to_string(n_vars));
  }
  for (std::size_t i = 0; i < n_vars; ++i) {
    if (trim(header[i]) != schema.variables[i].name) {
      fail(li + 1, "header column `" + std::string(trim(header[i])) + "` does not match schema `" +
                       schema.variables[i].name + "`");
    }
  }
  ++li;

  for (; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != n_vars) {
      fail(li + 1, "row has " + std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(n_vars));
    }
    Instance inst;
    inst.values.reserve(n_vars);
    for (std::size_t i = 0; i < n_vars; ++i) {
      inst.values.push_back(parse_raw_cell(schema.variables[i], cells[i], li + 1));
    }
    ds.instances.push_back(std::move(inst));
  }

  if (fixed) {
    if (fixed->size() != n_vars) throw ParseError("standardization record count mismatch");
    ds.standardization = *fixed;
    for (auto& inst : ds.instances) {
      for (std::size_t i = 0; i < n_vars; ++i) {
        if (auto* c = std::get_if<ContinuousV>(&inst.values[i])) {
          c->value = (c->value - ds.standardization[i].mean) / ds.standardization[i].sd;
        }
      }
    }
  } else {
    ds.standardization.assign(n_vars, Standardization{});
    restandardize(ds);
  }
  return ds;
}

}  // namespace

Dataset parse_dataset(std::string_view text, const DatasetSchema& schema) {
  return parse_rows(text, schema, nullptr);
}

Dataset parse_dataset_with(std::string_view text, const DatasetSchema& schema,
                           const std::vector<Standardization>& fixed) {
  return parse_rows(text, schema, &fixed);
}

void restandardize(Dataset& ds) {
  const std::size_t n_vars = ds.schema.size();
  if (ds.standardization.size() != n_vars) ds.standardization.assign(n_vars, Standardization{});
  for (std::size_t i = 0; i < n_vars; ++i) {
    if (ds.schema.variables[i].kind != VarKind::continuous) {
      ds.standardization[i] = Standardization{};
      continue;
    }
    const Standardization prev = ds.standardization[i];
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& inst : ds.instances) {
      if (const auto* c = std::get_if<ContinuousV>(&inst.values[i])) {
        sum += prev.mean + prev.sd * c->value;
        ++n;
      }
    }
    if (n == 0) {
      ds.standardization[i] = Standardization{};
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& inst : ds.instances) {
      if (const auto* c = std::get_if<ContinuousV>(&inst.values[i])) {
        const double raw = prev.mean + prev.sd * c->value;
        ss += (raw - mean) * (raw - mean);
      }
    }
    double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0)) sd = 1.0;
    for (auto& inst : ds.instances) {
      if (auto* c = std::get_if<ContinuousV>(&inst.values[i])) {
        const double raw = prev.mean + prev.sd * c->value;
        c->value = (raw - mean) / sd;
      }
    }
    ds.standardization[i] = Standardization{mean, sd};
  }
}

std::string format_cell(const VariableSpec& spec, const Standardization& rec, const Value& v) {
  if (is_missing(v)) return "";
  switch (spec.kind) {
    case VarKind::binary:
      return std::get<BinaryV>(v).value ? "1" : "0";
    case VarKind::categorical:
      return spec.categories[static_cast<std::size_t>(std::get<CategoricalV>(v).index)];
    case VarKind::ordinal:
      return spec.categories[static_cast<std::size_t>(std::get<OrdinalV>(v).level)];
    case VarKind::continuous:
      return format_double(rec.mean + rec.sd * std::get<ContinuousV>(v).value);
    case VarKind::multicat: {
      const auto& active = std::get<MulticatV>(v).active;
      std::string out;
      for (std::size_t m = 0; m < active.size(); ++m) {
        if (!active[m]) continue;
        if (!out.empty()) out += '|';
        out += spec.categories[m];
      }
      return out;
    }
    case VarKind::rank: {
      const auto& ranks = std::get<RankedV>(v).ranks;
      int top = 0;
      for (int r : ranks) top = std::max(top, r);
      std::string out;
      for (int tier = 1; tier <= top; ++tier) {
        if (tier > 1) out += '>';
        bool first = true;
        for (std::size_t m = 0; m < ranks.size(); ++m) {
          if (ranks[m] != tier) continue;
          if (!first) out += '=';
          out += spec.categories[m];
          first = false;
        }
      }
      return out;
    }
  }
  return "";
}

std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  const std::size_t n_vars = ds.schema.size();
  for (std::size_t i = 0; i < n_vars; ++i) {
    if (i) out += ',';
    out += ds.schema.variables[i].name;
  }
  out += '\n';
  for (const auto& inst : ds.instances) {
    for (std::size_t i = 0; i < n_vars; ++i) {
      if (i) out += ',';
      out += format_cell(ds.schema.variables[i], ds.standardization[i], inst.values[i]);
    }
    out += '\n';
  }
  return out;
}

std::uint64_t count_rank_assignments(int M) {
  if (M < 0) throw BudgetError("negative category count");
  if (M > 18) throw BudgetError("rank assignment count overflows 64 bits beyond M = 18");
  // a(n) = sum_k C(n,k) a(n-k), a(0) = 1
  std::vector<std::uint64_t> a(static_cast<std::size_t>(M) + 1, 0);
  a[0] = 1;
  std::vector<std::vector<std::uint64_t>> choose(a.size(), std::vector<std::uint64_t>(a.size(), 0));
  for (std::size_t n = 0; n < choose.size(); ++n) {
    choose[n][0] = 1;
    for (std::size_t k = 1; k <= n; ++k) {
      choose[n][k] = choose[n - 1][k - 1] + (k <= n - 1 ? choose[n - 1][k] : 0);
    }
  }
  for (std::size_t n = 1; n < a.size(); ++n) {
    for (std::size_t k = 1; k <= n; ++k) a[n] += choose[n][k] * a[n - k];
  }
  return a[static_cast<std::size_t>(M)];
}

std::vector<double> Grid::points() const {
  if (n < 1) throw BudgetError("grid needs at least one point");
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    pts.push_back((lo + hi) / 2.0);
    return pts;
  }
  for (int i = 0; i < n; ++i) {
    pts.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return pts;
}

namespace {

void enumerate_rank_vectors(int M, std::vector<Value>& out) {
  // Surjections onto {1..P} for each block count P, in lexicographic order of
  // the rank vector within each P.
  std::vector<int> ranks(static_cast<std::size_t>(M), 0);
  for (int P = 1; P <= M; ++P) {
    std::vector<int> uses(static_cast<std::size_t>(P) + 1, 0);
    int covered = 0;
    auto rec = [&](auto&& self, int pos) -> void {
      const int remaining = M - pos;
      if (P - covered > remaining) return;  // cannot still cover every rank
      if (pos == M) {
        out.push_back(RankedV{ranks});
        return;
      }
      for (int r = 1; r <= P; ++r) {
        ranks[static_cast<std::size_t>(pos)] = r;
        if (uses[static_cast<std::size_t>(r)]++ == 0) ++covered;
        self(self, pos + 1);
        if (--uses[static_cast<std::size_t>(r)] == 0) --covered;
      }
    };
    rec(rec, 0);
  }
}

}  // namespace

std::vector<Value> enumerate_values(const VariableSpec& spec, const Grid* grid) {
  std::vector<Value> out;
  const int M = spec.arity();
  switch (spec.kind) {
    case VarKind::binary:
      out = {BinaryV{0}, BinaryV{1}};
      break;
    case VarKind::categorical:
      for (int m = 0; m < M; ++m) out.push_back(CategoricalV{m});
      break;
    case VarKind::ordinal:
      for (int m = 0; m < M; ++m) out.push_back(OrdinalV{m});
      break;
    case VarKind::continuous: {
      if (!grid) throw BudgetError(spec.name + ": continuous enumeration requires a grid");
      for (double x : grid->points()) out.push_back(ContinuousV{x});
      break;
    }
    case VarKind::multicat: {
      if (M >= 31) throw BudgetError(spec.name + ": indicator enumeration too large");
      for (std::uint32_t mask = 1; mask < (1u << M); ++mask) {
        MulticatV v;
        v.active.assign(static_cast<std::size_t>(M), 0);
        for (int m = 0; m < M; ++m) {
          if (mask & (1u << m)) v.active[static_cast<std::size_t>(m)] = 1;
        }
        out.push_back(std::move(v));
      }
      break;
    }
    case VarKind::rank:
      enumerate_rank_vectors(M, out);
      break;
  }
  return out;
}

std::uint64_t value_space_size(const VariableSpec& spec) {
  switch (spec.kind) {
    case VarKind::binary:
      return 2;
    case VarKind::categorical:
    case VarKind::ordinal:
      return static_cast<std::uint64_t>(spec.arity());
    case VarKind::multicat:
      if (spec.arity() >= 63) return UINT64_MAX;
      return (std::uint64_t{1} << spec.arity()) - 1;
    case VarKind::rank:
      if (spec.arity() > 18) return UINT64_MAX;
      return count_rank_assignments(spec.arity());
    case VarKind::continuous:
      return UINT64_MAX;
  }
  return UINT64_MAX;
}

std::vector<std::vector<Value>> enumerate_value_lists(const DatasetSchema& schema,
                                                      const Grid& grid) {
  std::vector<std::vector<Value>> lists;
  lists.reserve(schema.size());
  for (const auto& spec : schema.variables) lists.push_back(enumerate_values(spec, &grid));
  return lists;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace mvrbm
