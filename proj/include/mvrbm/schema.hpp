#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mvrbm {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VarKind { binary, categorical, multicat, continuous, ordinal, rank };

const char* kind_name(VarKind kind);
std::optional<VarKind> kind_from_name(std::string_view name);
bool kind_has_categories(VarKind kind);

// Position of a kind in fixed reporting order (binary, categorical, multicat,
// continuous, ordinal, rank).
int kind_index(VarKind kind);

struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::binary;
  std::vector<std::string> categories;  // empty for binary/continuous

  int arity() const { return static_cast<int>(categories.size()); }
  int category_index(std::string_view label) const;  // -1 when unknown
};

struct MissingV {
  bool operator==(const MissingV&) const = default;
};
struct BinaryV {
  int value = 0;  // 0 or 1
  bool operator==(const BinaryV&) const = default;
};
struct CategoricalV {
  int index = 0;  // zero-based category index
  bool operator==(const CategoricalV&) const = default;
};
struct MulticatV {
  std::vector<std::uint8_t> active;  // one flag per category, at least one set
  bool operator==(const MulticatV&) const = default;
};
struct ContinuousV {
  double value = 0.0;  // standardized units
  bool operator==(const ContinuousV&) const = default;
};
struct OrdinalV {
  int level = 0;  // zero-based level
  bool operator==(const OrdinalV&) const = default;
};
struct RankedV {
  // Dense ranks over all categories: rank 1 is most preferred and the set of
  // ranks used is exactly {1..P} for some P.
  std::vector<int> ranks;
  bool operator==(const RankedV&) const = default;
};

using Value =
    std::variant<MissingV, BinaryV, CategoricalV, MulticatV, ContinuousV, OrdinalV, RankedV>;

inline bool is_missing(const Value& v) { return std::holds_alternative<MissingV>(v); }

// Throws ParseError when the value cannot belong to the variable
// (kind mismatch, out-of-range index, empty indicator set, non-dense ranks).
// Missing is always allowed.
void validate_value(const VariableSpec& spec, const Value& v);

// Equality with tolerance on continuous payloads; Missing equals Missing.
bool values_equal(const Value& a, const Value& b, double tol = 0.0);

struct Instance {
  std::vector<Value> values;

  bool observed(std::size_t i) const { return !is_missing(values[i]); }
  std::vector<std::size_t> observed_positions() const;
};

Instance empty_instance(std::size_t n);

struct DatasetSchema {
  std::vector<VariableSpec> variables;

  std::size_t size() const { return variables.size(); }
  int index_of(std::string_view name) const;  // -1 when unknown
};

// Per-variable affine record used for continuous columns; identity elsewhere.
struct Standardization {
  double mean = 0.0;
  double sd = 1.0;
};

struct Dataset {
  DatasetSchema schema;
  std::vector<Instance> instances;
  std::vector<Standardization> standardization;  // one record per variable
};

// Schema file: one line per variable, `<name> <kind>[ <cat>,<cat>,...]`.
DatasetSchema parse_schema(std::string_view text);
std::string serialize_schema(const DatasetSchema& schema);

// Data file: comma-delimited with a header row of variable names. Empty cell
// means missing; multicat cells join labels with `|`; rank cells order all
// labels with `>` and group ties with `=`. Continuous columns are shifted and
// scaled to mean 0 and unit (population) sd over their observed entries; the
// applied record is retained on the dataset.
Dataset parse_dataset(std::string_view text, const DatasetSchema& schema);

// Same row grammar, but continuous cells are transformed with the supplied
// records instead of statistics computed from the file.
Dataset parse_dataset_with(std::string_view text, const DatasetSchema& schema,
                           const std::vector<Standardization>& fixed);

// Inverse-transforms continuous cells back to raw units on output.
std::string serialize_dataset(const Dataset& ds);

// Recomputes continuous-column statistics over observed entries and rescales
// the stored values; the records are updated to map back to raw units.
void restandardize(Dataset& ds);

std::string format_cell(const VariableSpec& spec, const Standardization& rec, const Value& v);

// Number of distinct dense-rank assignments over M categories (ordered set
// partitions). Exact in 64 bits up to M = 18.
std::uint64_t count_rank_assignments(int M);

// Evenly spaced evaluation points used to discretize continuous variables in
// exhaustive computations.
struct Grid {
  double lo = -2.0;
  double hi = 2.0;
  int n = 5;

  std::vector<double> points() const;
};

// Deterministic, duplicate-free list of admissible values. Continuous
// variables require a grid and yield its points.
std::vector<Value> enumerate_values(const VariableSpec& spec, const Grid* grid = nullptr);

// Size of the admissible value space without enumerating it; UINT64_MAX for
// continuous variables and for counts that overflow.
std::uint64_t value_space_size(const VariableSpec& spec);

// Per-variable value lists for walking a full joint assignment space.
std::vector<std::vector<Value>> enumerate_value_lists(const DatasetSchema& schema,
                                                      const Grid& grid);

// Odometer over a product of index ranges.
struct CartesianCounter {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> index;

  explicit CartesianCounter(std::vector<std::size_t> s)
      : sizes(std::move(s)), index(sizes.size(), 0) {}

  std::uint64_t total() const {
    std::uint64_t t = 1;
    for (auto s : sizes) t *= s;
    return t;
  }

  bool advance() {
    for (std::size_t i = sizes.size(); i-- > 0;) {
      if (++index[i] < sizes[i]) return true;
      index[i] = 0;
    }
    return false;
  }
};

std::string format_double(double x);  // shortest round-trip representation

}  // namespace mvrbm
