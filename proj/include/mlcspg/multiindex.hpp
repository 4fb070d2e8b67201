#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mlcspg {

/// Finitely supported tuple of polynomial degrees.
///
/// Only nonzero degrees are stored, as (dimension, degree) pairs with
/// 1-based, strictly ascending dimensions. Two indices are equal iff their
/// stored entries are equal.
class MultiIndex {
 public:
  using Entry = std::pair<std::uint32_t, std::uint32_t>;

  MultiIndex() = default;

  /// Builds from (dimension, degree) pairs in any order; zero degrees are dropped.
  /// Throws std::invalid_argument on dimension 0 or duplicates.
  explicit MultiIndex(std::vector<Entry> entries);

  /// Dense constructor: degrees[k] is the degree of dimension k + 1.
  static MultiIndex from_dense(std::span<const std::uint32_t> degrees);
  static MultiIndex from_dense(std::initializer_list<std::uint32_t> degrees);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::uint32_t degree(std::uint32_t dim) const noexcept;

  /// ||nu||_0, number of active dimensions.
  std::size_t support_size() const noexcept { return entries_.size(); }
  std::uint64_t total_degree() const noexcept;
  std::uint32_t max_degree() const noexcept;
  /// Largest active dimension, 0 for the zero index.
  std::uint32_t max_dim() const noexcept { return entries_.empty() ? 0 : entries_.back().first; }
  bool is_zero() const noexcept { return entries_.empty(); }

  /// Componentwise nu <= mu.
  bool dominated_by(const MultiIndex& other) const noexcept;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<Entry> entries_;
};

/// Canonical column order: total degree ascending, then dense lexicographic
/// descending, i.e. (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
bool canonical_less(const MultiIndex& a, const MultiIndex& b) noexcept;
void sort_canonical(std::vector<MultiIndex>& set);

/// Text form `j1:d1;j2:d2;...` with ascending j; empty string for the zero index.
std::string to_string(const MultiIndex& nu);
/// Inverse of to_string. Throws std::invalid_argument on malformed input.
MultiIndex parse_multiindex(std::string_view text);

/// Weight sequence v = (v_j) and theta, defining omega_nu = theta^{||nu||_0} v^nu.
struct WeightConfig {
  enum class Kind { constant, polynomial, explicit_list };

  Kind kind = Kind::constant;
  double beta = 1.08;       // constant: v_j = beta for j <= active_dims
  std::size_t active_dims = 1;
  double c = 2.0;           // polynomial: v_j = c * j^alpha
  double alpha = 1.0;
  std::vector<double> values;  // explicit: v_j = values[j - 1], +inf beyond
  double theta = 1.4142135623730951;

  static WeightConfig constant(double beta, std::size_t d, double theta = 1.4142135623730951);
  static WeightConfig polynomial(double c, double alpha, double theta = 1.4142135623730951);
  static WeightConfig explicit_list(std::vector<double> v, double theta = 1.4142135623730951);

  /// v_j for 1-based j; +inf for inactive dimensions.
  double v(std::size_t j) const;
  /// Number of dimensions with finite weight, nullopt if unbounded (polynomial kind).
  std::optional<std::size_t> finite_dims() const;

  /// Checks the invariants (finite v_j >= 1, theta >= 1, kind parameters).
  /// Throws std::invalid_argument naming the violated condition.
  void validate() const;
  /// Throws InfiniteSet unless beta > 1 / c > 1 / all v_j > 1 as appropriate.
  void require_finite_candidate_sets() const;

  friend bool operator==(const WeightConfig&, const WeightConfig&) = default;
};

std::string to_string(const WeightConfig& w);
/// Inverse of to_string(WeightConfig). Throws std::invalid_argument.
WeightConfig parse_weight_config(std::string_view text);

/// omega_nu; +inf if any active dimension carries an infinite weight.
double weight_of(const MultiIndex& nu, const WeightConfig& w);

/// All nu with omega_nu^2 <= s/2, sorted canonically.
///
/// Depth-first search over ascending dimensions in the log domain. When
/// `max_dim` is given, dimensions beyond it are never activated (truncation
/// to the problem's parameter count).
std::vector<MultiIndex> enumerate_candidate_set(const WeightConfig& w, double s,
                                                std::optional<std::size_t> max_dim = std::nullopt);

/// Coefficient vector over an explicit support.
struct WeightedVector {
  std::vector<MultiIndex> support;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// ||x||_{omega,0} = sum of omega_nu^2 over nonzero entries.
double weighted_sparsity(const WeightedVector& x, const WeightConfig& w);

/// (sum omega^{2-p} |x|^p)^{1/p} for p in (0, 2].
double weighted_lp_norm(const WeightedVector& x, const WeightConfig& w, double p);

struct SelectionResult {
  std::vector<std::size_t> support;  // positions into the input, ascending
  double residual = 0.0;             // ||x - x|_S||_{omega,1}
};

/// Greedy weighted s-term selection by density |x|/omega.
///
/// Entries are visited by decreasing density and added whenever omega^2 still
/// fits the remaining budget. This is an upper bound on the best weighted
/// s-term error, used for diagnostics only.
SelectionResult best_weighted_s_term(const WeightedVector& x, const WeightConfig& w, double s);

/// Greedy knapsack on raw arrays: positions of `values` kept under budget
/// sum(weights^2) <= s, ordered by |value|/weight with lowest index winning ties.
/// Zero entries are never selected.
std::vector<std::size_t> greedy_weighted_selection(std::span<const double> values,
                                                   std::span<const double> weights, double s);

}  // namespace mlcspg
