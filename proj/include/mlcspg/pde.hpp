#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mlcspg {

/// Scalar field on the physical domain: a constant, or a callable of (x1, x2)
/// (x2 is 0 in one dimension).
struct ScalarField {
  double value = 0.0;
  std::function<double(double, double)> fn;

  static ScalarField constant(double v) { return {v, {}}; }
  bool is_constant() const noexcept { return !fn; }
  double operator()(double x1, double x2) const { return fn ? fn(x1, x2) : value; }
};

/// Affine fluctuation family psi_1..psi_d.
struct Fluctuations {
  enum class Kind { none, cosine, patchwise };

  Kind kind = Kind::none;
  double mu = 2.0;                 // cosine: psi_j(x) = cos(pi j |x|) / j^mu
  std::size_t terms = 0;           // cosine term count
  std::vector<double> amplitudes;  // patchwise: psi_j = amplitudes[j-1] on patch D_j

  static Fluctuations none() { return {}; }
  static Fluctuations cosine(double mu, std::size_t d) { return {Kind::cosine, mu, d, {}}; }
  static Fluctuations patchwise(std::vector<double> amp) { return {Kind::patchwise, 0.0, 0, std::move(amp)}; }

  std::size_t count() const noexcept;
};

/// -div(a(x, y) grad u) = f on (0,1)^n, u = 0 on the boundary, with
/// a(x, y) = mean(x) + sum_j y_j psi_j(x) and QoI G(u) = integral of g * u.
///
/// Patchwise fluctuations in 2D use d = k^2 square patches; patch j (1-based)
/// covers column (j-1) % k and row (j-1) / k. In 1D patch j is ((j-1)/d, j/d).
struct ParametricProblem {
  int spatial_dim = 1;
  ScalarField mean_field = ScalarField::constant(1.0);
  Fluctuations fluctuations;
  ScalarField forcing = ScalarField::constant(1.0);
  ScalarField qoi_weight = ScalarField::constant(1.0);

  std::size_t parameter_dim() const noexcept { return fluctuations.count(); }
  /// psi_j(x) for 1-based j.
  double fluctuation(std::size_t j, double x1, double x2) const;
  /// a(x, y); y must hold at least parameter_dim() entries.
  double coefficient(double x1, double x2, std::span<const double> y) const;
  /// Patch side count k for patchwise problems (d patches in 1D, k^2 = d in 2D).
  std::size_t patch_divisions() const;
  /// Stable textual hash of the problem definition (callables only contribute
  /// their presence).
  std::string fingerprint() const;

  /// Throws std::invalid_argument on inconsistent definitions.
  void validate() const;
};

struct EllipticityBounds {
  double r = 0.0;  // inf of mean - sum |psi_j|
  double R = 0.0;  // sup of mean + sum |psi_j|
};

/// Evaluates mean -/+ sum |psi_j| on a uniform grid of `grid` points per axis
/// (default 4097 in 1D, 513 in 2D). Throws EllipticityViolation if r <= 0.
EllipticityBounds check_uea(const ParametricProblem& p, std::size_t grid = 0);

/// Dyadic mesh hierarchy on (0,1)^n: h_l = 2^{-l} h0, l = 0..levels-1.
class MeshHierarchy {
 public:
  /// 1/h0 must be an integer (to 1e-9 relative). Throws std::invalid_argument otherwise.
  MeshHierarchy(int spatial_dim, double h0, std::size_t levels);

  int spatial_dim() const noexcept { return dim_; }
  std::size_t levels() const noexcept { return levels_; }
  std::size_t coarse_cells() const noexcept { return coarse_cells_; }
  /// Cells per axis at level l.
  std::size_t cells(std::size_t l) const noexcept { return coarse_cells_ << l; }
  double h(std::size_t l) const noexcept { return 1.0 / static_cast<double>(cells(l)); }
  std::size_t interior_dofs(std::size_t l) const noexcept;

 private:
  int dim_;
  std::size_t coarse_cells_;
  std::size_t levels_;
};

/// Cells per axis for meshwidth h, requiring 1/h to be an integer.
std::size_t cells_for_meshwidth(double h);

/// P1 nodal values at interior nodes (lexicographic, x1 fastest in 2D).
struct DiscreteSolution {
  int spatial_dim = 1;
  std::size_t cells = 0;
  std::vector<double> nodal;
  std::size_t cg_iterations = 0;
  /// 1D only: sum over elements of g * integral of the local quadratic bubble
  /// f h^2 / (2a) * t (1 - t), which is exact for element-constant a and f.
  double bubble_qoi = 0.0;
};

struct SolverOptions {
  double relative_tolerance = 1e-10;
  std::size_t max_iterations = 0;  // 0: 20 * (cells + 1)^n / cells + 1000
};

/// P1 Galerkin solve on a uniform mesh with `cells` cells per axis. The
/// coefficient is sampled at element midpoints / centroids; the load uses
/// exact integration for constant forcing. 1D uses the Thomas algorithm, 2D
/// Jacobi-preconditioned CG.
DiscreteSolution solve_on_cells(const ParametricProblem& p, std::span<const double> y, std::size_t cells,
                                const SolverOptions& opts = {});

DiscreteSolution solve(const ParametricProblem& p, std::span<const double> y, std::size_t level,
                       const MeshHierarchy& mesh, const SolverOptions& opts = {});

/// G(u_h): integral of g times the P1 function (nodal quadrature for
/// non-constant g) plus, in 1D, the element bubble term. For element-constant
/// data in 1D the result is the exact QoI.
double qoi(const DiscreteSolution& u, const ParametricProblem& p);

/// qoi(solve at l) - qoi(solve at l-1), with qoi at level -1 taken as 0.
double detail(const ParametricProblem& p, std::span<const double> y, std::size_t level,
              const MeshHierarchy& mesh, const SolverOptions& opts = {});

/// Convenience: qoi(solve_on_cells(...)).
double qoi_on_cells(const ParametricProblem& p, std::span<const double> y, std::size_t cells,
                    const SolverOptions& opts = {});

}  // namespace mlcspg
