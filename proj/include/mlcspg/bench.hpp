#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlcspg/chebyshev.hpp"
#include "mlcspg/multilevel.hpp"

namespace mlcspg {

struct ErrorReport {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  std::size_t n_test = 0;
  std::size_t reference_cells = 0;
  std::uint64_t seed = 0;
};

/// Mean absolute, root-mean-square and maximum deviation.
ErrorReport error_norms(std::span<const double> prediction, std::span<const double> reference);

/// Test points from the reserved test stream and their reference QoI values.
struct ReferenceSet {
  SampleBatch points;
  std::vector<double> values;
  std::size_t cells = 0;
};

ReferenceSet make_reference(const ParametricProblem& p, std::size_t cells, std::size_t n_test, std::uint64_t seed,
                            unsigned threads = 1);

ErrorReport empirical_errors(const Surrogate& s, const ReferenceSet& ref, unsigned threads = 1);

/// Reference on `refinement` times the finest cell count of the surrogate.
/// Throws std::invalid_argument if refinement < 4 or n_test == 0.
ErrorReport empirical_errors(const Surrogate& s, const ParametricProblem& p, std::size_t refinement,
                             std::size_t n_test, std::uint64_t seed, unsigned threads = 1);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// false when errors sit at round-off level or are not positive
  bool reliable = true;
};

/// Ordinary least squares of log y against log x.
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct ConvergenceOptions {
  std::size_t n_test = 1000;
  std::size_t refinement = 4;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  RunOptions run;
};

struct ConvergenceRow {
  double h0 = 0.0;
  ErrorReport errors;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  LogLogFit l2_fit;
  LogLogFit linf_fit;
};

/// One pipeline run per h0 (schedule `base` with h0 replaced). All runs share
/// a reference at `refinement` times the finest mesh of the sweep. Needs at
/// least 3 values of h0.
ConvergenceStudy convergence_study(const ParametricProblem& p, const ScheduleParams& base, const WeightConfig& w,
                                   std::span<const double> h0_values, Algorithm algorithm,
                                   const ConvergenceOptions& opts = {});

/// sum_l m_l (h_ref / h_l)^n (1 + 2^{-n}); h_ref defaults to the schedule's h0,
/// so level l costs 2^{n l} units.
double work_total(const LevelSchedule& sched, int n, std::optional<double> h_ref = std::nullopt);
double level_work(const LevelSchedule& sched, std::size_t level, int n, std::optional<double> h_ref = std::nullopt);

/// Per-index sum over all levels of a surrogate.
std::map<MultiIndex, double> aggregate_coefficients(const Surrogate& s);

struct CompareOptions {
  std::size_t cells = 64;            // mesh of the single-level methods
  std::vector<std::size_t> mc_samples{1000};
  std::optional<Surrogate> multilevel;  // coefficients reported as "mlcspg"
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct CoefficientTable {
  std::vector<MultiIndex> indices;     // decreasing |LSQ coefficient|
  std::vector<std::string> methods;    // "lsq", "mc<m>", "mlcspg"
  std::vector<std::vector<double>> values;  // values[method][rank]
};

/// Coefficients of F over `gamma` from least squares with 2|Gamma| samples,
/// Monte-Carlo projection for each requested sample count and, if given, a
/// multi-level surrogate.
CoefficientTable compare_coefficients(const ParametricProblem& p, const std::vector<MultiIndex>& gamma,
                                      const CompareOptions& opts);

void write_convergence_csv(std::ostream& os, const ConvergenceStudy& study);
void write_work_csv(std::ostream& os, const LevelSchedule& sched, int n);
void write_coeffs_csv(std::ostream& os, const CoefficientTable& table);

}  // namespace mlcspg
