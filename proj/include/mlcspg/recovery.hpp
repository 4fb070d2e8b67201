#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlcspg/multiindex.hpp"

namespace mlcspg {

enum class Algorithm { womp, whtp, wbp, lsq, mc };

std::string_view to_string(Algorithm a);
/// Accepts womp, whtp, wbp, lsq, mc (case-sensitive). Throws std::invalid_argument.
Algorithm parse_algorithm(std::string_view name);

/// A weighted sparse recovery problem Phi z ~ b. Columns of `matrix` are
/// tensorized Chebyshev evaluations; `weights` holds omega_nu per column.
struct RecoveryRequest {
  const Eigen::MatrixXd& matrix;
  const Eigen::VectorXd& rhs;
  Eigen::VectorXd weights;
  double budget = 0.0;                  // weighted sparsity s (WOMP, WHTP)
  std::optional<double> noise_level;    // residual bound eta (WBP)
};

struct RecoveryResult {
  Eigen::VectorXd coefficients;
  double residual_norm = 0.0;           // ||Phi z - b||_2 of the returned z
  std::size_t iterations = 0;
  double achieved_weighted_sparsity = 0.0;
  double objective = 0.0;               // ||z||_{omega,1}
  bool converged = true;
  Eigen::VectorXd standard_errors;      // MC projection only
  std::vector<std::string> warnings;
};

/// Weighted orthogonal matching pursuit.
///
/// Each step picks the column maximizing |<r, phi_nu>| / omega_nu (lowest
/// index on ties) and refits on the support by least squares. Stops when the
/// next pick would exceed the budget sum omega^2 <= s, or once
/// ||r|| <= 1e-12 ||b||. Columns that make the support numerically singular
/// are skipped with a warning.
RecoveryResult womp(const RecoveryRequest& req);

struct WhtpOptions {
  std::size_t max_iterations = 100;
  std::size_t power_iterations = 50;
};

/// Weighted hard thresholding pursuit:
///   x <- LS refit on threshold_w(x + (mu/m) Phi^T (b - Phi x), s),
/// with mu = m / ||Phi||^2 (the unit-norm step for Phi / sqrt(m)), ||Phi||
/// estimated by power iteration. Stops when the support repeats.
RecoveryResult whtp(const RecoveryRequest& req, const WhtpOptions& opts = {});

struct WbpOptions {
  double gap_tolerance = 1e-8;     // relative duality gap
  std::size_t max_iterations = 50000;
  std::size_t polish_every = 25;
};

/// Weighted basis pursuit: min ||z||_{omega,1} s.t. ||Phi z - b||_2 <= eta.
///
/// ADMM splitting between soft thresholding and the exact projection onto the
/// constraint set (via a thin SVD of Phi). Periodically the current support
/// is polished to the exact optimum for that support and sign pattern; the
/// run ends once a dual-feasible certificate closes the relative duality gap.
/// Throws Infeasible if eta is below the distance from b to range(Phi).
RecoveryResult wbp(const RecoveryRequest& req, const WbpOptions& opts = {});

/// Minimizer of ||Phi z - b||_2 (minimum-norm when underdetermined).
RecoveryResult least_squares(const RecoveryRequest& req);

/// Monte-Carlo projection F_nu = (1/m) sum_i b_i T_nu(y_i), with standard errors.
RecoveryResult mc_project(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& values);

/// Dispatches on the algorithm. MC ignores weights and budget.
RecoveryResult recover(Algorithm algorithm, const RecoveryRequest& req);

struct CrossValidation {
  std::size_t grid_points = 12;
  double holdout_fraction = 0.2;
  std::size_t patience = 2;  // grid points tried past the best before stopping
};

/// Picks eta for WBP by holdout validation over a decreasing geometric grid,
/// stopping once `patience` further points fail to improve on the best. The last
/// fraction of the rows is held out; the winning eta is rescaled by
/// sqrt(m / m_train) for the full fit and kept above the least-squares
/// residual of the full system.
double select_noise_level_cv(const RecoveryRequest& req, const CrossValidation& cv = {},
                             const WbpOptions& opts = {});

/// `# algorithm=..,budget=..,residual=..,iterations=..` then `multiindex,coefficient`
/// rows for the nonzero coefficients.
void write_recovery_csv(std::ostream& os, const RecoveryResult& r, const std::vector<MultiIndex>& columns,
                        Algorithm algorithm, double budget);

}  // namespace mlcspg
