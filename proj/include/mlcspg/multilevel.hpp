#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mlcspg/chebyshev.hpp"
#include "mlcspg/multiindex.hpp"
#include "mlcspg/pde.hpp"
#include "mlcspg/recovery.hpp"

namespace mlcspg {

/// practical: m = ceil(2 s ln N); theoretical: m = ceil(c0 s max(ln^3(s) ln N, ln(1/gamma)));
/// interpolation: m = N (square systems, for least squares).
enum class SampleRule { practical, theoretical, interpolation };

std::string_view to_string(SampleRule r);
SampleRule parse_sample_rule(std::string_view name);

struct ScheduleParams {
  std::size_t levels = 3;  // L
  double h0 = 0.2;
  double sparsity_constant = 8.0;  // C_s, sparsity of the finest level
  double sigma = 1.0;
  SampleRule rule = SampleRule::practical;
  double c0 = 1.0;
  double gamma = 0.01;  // per-level failure probability, theoretical rule

  /// Throws std::invalid_argument unless L >= 1, h0 > 0, C_s >= 1, sigma > 0.
  void validate() const;
  friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

/// Levels are indexed 0..L-1 internally; `label` is the 1-based index used
/// in the theory (label = index + 1).
struct Level {
  std::size_t index = 0;
  std::size_t label = 1;
  double h = 0.0;
  double sparsity = 0.0;
  std::size_t samples = 0;
  std::vector<MultiIndex> candidates;
  /// m >= N: compressed sensing has nothing to gain, least squares is advised.
  bool least_squares_advised = false;

  std::size_t candidate_count() const noexcept { return candidates.size(); }
};

struct LevelSchedule {
  ScheduleParams params;
  WeightConfig weights;
  std::size_t parameter_dim = 0;
  std::vector<Level> levels;
};

/// ceil(2 s ln N); 1 when N = 1, 0 when N = 0.
std::size_t practical_sample_count(double s, std::size_t n);
std::size_t sample_count(const ScheduleParams& p, double s, std::size_t n);

/// s_l = ceil(C_s 2^{(L-1-l) sigma}); Gamma_l enumerated for dimension
/// `parameter_dim`. Throws InfiniteSet for weights that give infinite sets.
LevelSchedule make_schedule(const ScheduleParams& params, const WeightConfig& weights, std::size_t parameter_dim);

struct LevelBlock {
  std::size_t level = 0;
  std::vector<MultiIndex> indices;
  std::vector<double> coefficients;
};

struct Surrogate {
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::size_t parameter_dim = 0;
  Algorithm algorithm = Algorithm::womp;
  ScheduleParams params;
  WeightConfig weights;
  std::vector<LevelBlock> blocks;
};

/// Sum over levels and indices of coefficient * T_nu(y). Throws DomainError
/// if a coordinate leaves [-1, 1] and DimensionError if y is too short.
double evaluate(const Surrogate& s, std::span<const double> y);

/// Fresh: level l draws its own batch (stream l). Nested: every level takes
/// the leading m_l points of one shared stream.
enum class SampleReuse { fresh, nested };

struct RunOptions {
  unsigned threads = 1;
  SampleReuse reuse = SampleReuse::fresh;
  std::optional<double> noise_level;  // WBP; cross-validated when absent
  SolverOptions solver;
};

struct LevelDiagnostics {
  std::size_t level = 0;
  std::size_t samples = 0;
  std::size_t candidates = 0;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  double achieved_weighted_sparsity = 0.0;
  bool converged = true;
  std::vector<std::string> warnings;
  double solve_seconds = 0.0;
  double recovery_seconds = 0.0;
  std::size_t pde_solves = 0;
};

struct RunDiagnostics {
  std::vector<LevelDiagnostics> levels;
  double solve_seconds() const;
  double recovery_seconds() const;
  std::size_t pde_solves() const;
};

/// The sample points used by level l of a run.
SampleBatch level_samples(const LevelSchedule& sched, std::size_t level, std::uint64_t seed, SampleReuse reuse);

/// Stream reserved for test points, disjoint from all level streams.
inline constexpr std::uint64_t kTestStream = 0xFFFF'FFFFull;

/// Samples details per level, recovers their Chebyshev coefficients over
/// Gamma_l with budget s_l, and collects the blocks.
Surrogate run(const ParametricProblem& p, const LevelSchedule& sched, std::uint64_t seed, Algorithm algorithm,
              const RunOptions& opts = {}, RunDiagnostics* diagnostics = nullptr);

struct Truncation {
  std::size_t dims = 0;   // B
  double tail_bound = 0.0;
};

/// B = ceil(h_L^{-(t+t') p / (1-p)}) and the reported tail bound
/// min(1/(1/p - 1), 1) ||b||_p B^{-(1/p - 1)}.
Truncation truncate_dimension(std::span<const double> decay, double p, double t_sum, double h_finest);

/// `#key=value` header followed by `level,multiindex,coefficient` rows.
void write_surrogate(std::ostream& os, const Surrogate& s);
/// Throws std::runtime_error on malformed input.
Surrogate read_surrogate(std::istream& is);

}  // namespace mlcspg
