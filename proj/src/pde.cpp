#include "mlcspg/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mlcspg/errors.hpp"

namespace mlcspg {

std::size_t Fluctuations::count() const noexcept {
  switch (kind) {
    case Kind::none:
      return 0;
    case Kind::cosine:
      return terms;
    case Kind::patchwise:
      return amplitudes.size();
  }
  return 0;
}

std::size_t ParametricProblem::patch_divisions() const {
  const std::size_t d = fluctuations.amplitudes.size();
  if (spatial_dim == 1) return d;
  const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
  if (k * k != d) throw std::invalid_argument("2D patchwise fluctuations need a square patch count");
  return k;
}

void ParametricProblem::validate() const {
  if (spatial_dim != 1 && spatial_dim != 2) throw std::invalid_argument("spatial_dim must be 1 or 2");
  if (fluctuations.kind == Fluctuations::Kind::patchwise) {
    if (fluctuations.amplitudes.empty()) throw std::invalid_argument("patchwise fluctuations need amplitudes");
    (void)patch_divisions();
  }
}

namespace {

std::size_t patch_index(double x, std::size_t k) {
  const auto i = static_cast<std::size_t>(std::floor(x * static_cast<double>(k)));
  return std::min(i, k - 1);
}

}  // namespace

double ParametricProblem::fluctuation(std::size_t j, double x1, double x2) const {
  switch (fluctuations.kind) {
    case Fluctuations::Kind::none:
      return 0.0;
    case Fluctuations::Kind::cosine: {
      const double r = spatial_dim == 1 ? std::abs(x1) : std::hypot(x1, x2);
      const double jd = static_cast<double>(j);
      return std::cos(std::numbers::pi * jd * r) / std::pow(jd, fluctuations.mu);
    }
    case Fluctuations::Kind::patchwise: {
      const std::size_t k = patch_divisions();
      std::size_t patch = patch_index(x1, k);
      if (spatial_dim == 2) patch += k * patch_index(x2, k);
      return patch + 1 == j ? fluctuations.amplitudes[j - 1] : 0.0;
    }
  }
  return 0.0;
}

double ParametricProblem::coefficient(double x1, double x2, std::span<const double> y) const {
  const std::size_t d = parameter_dim();
  if (y.size() < d)
    throw DimensionError("parameter vector has " + std::to_string(y.size()) + " entries, problem needs " +
                         std::to_string(d));
  double a = mean_field(x1, x2);
  if (fluctuations.kind == Fluctuations::Kind::patchwise) {
    const std::size_t k = patch_divisions();
    std::size_t patch = patch_index(x1, k);
    if (spatial_dim == 2) patch += k * patch_index(x2, k);
    return a + y[patch] * fluctuations.amplitudes[patch];
  }
  for (std::size_t j = 1; j <= d; ++j) a += y[j - 1] * fluctuation(j, x1, x2);
  return a;
}

std::string ParametricProblem::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << spatial_dim << ";mean=";
  if (mean_field.is_constant()) os << mean_field.value; else os << "fn";
  os << ";fluct=" << static_cast<int>(fluctuations.kind) << ',' << fluctuations.mu << ',' << fluctuations.terms;
  for (double a : fluctuations.amplitudes) os << ',' << a;
  os << ";f=";
  if (forcing.is_constant()) os << forcing.value; else os << "fn";
  os << ";g=";
  if (qoi_weight.is_constant()) os << qoi_weight.value; else os << "fn";

  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EllipticityBounds check_uea(const ParametricProblem& p, std::size_t grid) {
  p.validate();
  if (grid == 0) grid = p.spatial_dim == 1 ? 4097 : 513;
  const std::size_t d = p.parameter_dim();
  EllipticityBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const std::size_t ny = p.spatial_dim == 1 ? 1 : grid;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double x2 = p.spatial_dim == 1 ? 0.0 : static_cast<double>(iy) / static_cast<double>(grid - 1);
    for (std::size_t ix = 0; ix < grid; ++ix) {
      const double x1 = static_cast<double>(ix) / static_cast<double>(grid - 1);
      double spread = 0.0;
      for (std::size_t j = 1; j <= d; ++j) spread += std::abs(p.fluctuation(j, x1, x2));
      const double m = p.mean_field(x1, x2);
      b.r = std::min(b.r, m - spread);
      b.R = std::max(b.R, m + spread);
    }
  }
  if (!(b.r > 0.0))
    throw EllipticityViolation("uniform ellipticity fails: inf(mean - sum|psi_j|) = " + std::to_string(b.r));
  return b;
}

std::size_t cells_for_meshwidth(double h) {
  if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("meshwidth must lie in (0, 1]");
  const double inv = 1.0 / h;
  const auto n = static_cast<std::size_t>(std::llround(inv));
  if (n == 0 || std::abs(inv - static_cast<double>(n)) > 1e-9 * inv)
    throw std::invalid_argument("1/h must be an integer, got h = " + std::to_string(h));
  return n;
}

MeshHierarchy::MeshHierarchy(int spatial_dim, double h0, std::size_t levels)
    : dim_(spatial_dim), coarse_cells_(cells_for_meshwidth(h0)), levels_(levels) {
  if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("spatial_dim must be 1 or 2");
  if (levels_ == 0) throw std::invalid_argument("mesh hierarchy needs at least one level");
}

std::size_t MeshHierarchy::interior_dofs(std::size_t l) const noexcept {
  const std::size_t m = cells(l) - 1;
  return dim_ == 1 ? m : m * m;
}

namespace {

void require_alignment(const ParametricProblem& p, std::size_t cells) {
  if (p.fluctuations.kind != Fluctuations::Kind::patchwise) return;
  const std::size_t k = p.patch_divisions();
  if (cells % k != 0)
    throw std::invalid_argument("mesh with " + std::to_string(cells) + " cells per axis does not resolve " +
                                std::to_string(k) + " patches per axis");
}

void require_positive(double a) {
  if (!(a > 0.0)) throw EllipticityViolation("diffusion coefficient " + std::to_string(a) + " is not positive");
}

DiscreteSolution solve_1d(const ParametricProblem& p, std::span<const double> y, std::size_t n) {
  const double h = 1.0 / static_cast<double>(n);
  std::vector<double> a(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = p.coefficient((static_cast<double>(k) + 0.5) * h, 0.0, y);
    require_positive(a[k]);
  }

  DiscreteSolution u{1, n, std::vector<double>(n - 1, 0.0), 0, 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    const double xm = (static_cast<double>(k) + 0.5) * h;
    u.bubble_qoi += p.qoi_weight(xm, 0.0) * p.forcing(xm, 0.0) * h * h * h / (12.0 * a[k]);
  }
  if (n < 2) return u;
  const std::size_t m = n - 1;
  std::vector<double> rhs(m);
  if (p.forcing.is_constant()) {
    std::fill(rhs.begin(), rhs.end(), p.forcing.value * h);
  } else {
    // two-point Gauss per element against the hat functions
    const double g = 0.5 / std::numbers::sqrt3;
    for (std::size_t k = 0; k < n; ++k) {
      const double xl = static_cast<double>(k) * h;
      for (double t : {0.5 - g, 0.5 + g}) {
        const double f = p.forcing(xl + t * h, 0.0) * 0.5 * h;
        if (k >= 1) rhs[k - 1] += f * (1.0 - t);
        if (k + 1 <= m) rhs[k] += f * t;
      }
    }
  }

  // Thomas algorithm on the SPD tridiagonal system.
  std::vector<double> c(m), dvec(m);
  double prev_c = 0.0, prev_d = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double diag = (a[i] + a[i + 1]) / h;
    const double sub = i > 0 ? -a[i] / h : 0.0;
    const double sup = -a[i + 1] / h;
    const double denom = diag - sub * prev_c;
    c[i] = sup / denom;
    dvec[i] = (rhs[i] - sub * prev_d) / denom;
    prev_c = c[i];
    prev_d = dvec[i];
  }
  u.nodal[m - 1] = dvec[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) u.nodal[i] = dvec[i] - c[i] * u.nodal[i + 1];
  return u;
}

DiscreteSolution solve_2d(const ParametricProblem& p, std::span<const double> y, std::size_t n,
                          const SolverOptions& opts) {
  const double h = 1.0 / static_cast<double>(n);
  const std::size_t np = n + 1;
  // Triangle coefficients at centroids: lower (i,j),(i+1,j),(i+1,j+1); upper (i,j),(i+1,j+1),(i,j+1).
  std::vector<double> lower(n * n), upper(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = static_cast<double>(i) * h, yj = static_cast<double>(j) * h;
      lower[i + j * n] = p.coefficient(xi + 2.0 * h / 3.0, yj + h / 3.0, y);
      upper[i + j * n] = p.coefficient(xi + h / 3.0, yj + 2.0 * h / 3.0, y);
      require_positive(lower[i + j * n]);
      require_positive(upper[i + j * n]);
    }

  // The right-triangle P1 stiffness is a 5-point stencil: the edge (i,j)-(i+1,j)
  // carries (lower(i,j) + upper(i,j-1)) / 2, the edge (i,j)-(i,j+1) carries
  // (upper(i,j) + lower(i-1,j)) / 2.
  auto cell = [&](const std::vector<double>& t, std::ptrdiff_t i, std::ptrdiff_t j) {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(n) || j >= static_cast<std::ptrdiff_t>(n)) return 0.0;
    return t[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * n];
  };
  std::vector<double> wx(np * np, 0.0), wy(np * np, 0.0);
  for (std::size_t j = 0; j < np; ++j)
    for (std::size_t i = 0; i < np; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
      if (i < n) wx[i + j * np] = 0.5 * (cell(lower, ii, jj) + cell(upper, ii, jj - 1));
      if (j < n) wy[i + j * np] = 0.5 * (cell(upper, ii, jj) + cell(lower, ii - 1, jj));
    }

  const std::size_t m = n - 1;
  DiscreteSolution u{2, n, std::vector<double>(m * m, 0.0), 0, 0.0};
  if (m == 0) return u;
  const std::size_t dofs = m * m;

  std::vector<double> diag(dofs);
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 1; i < n; ++i)
      diag[(i - 1) + (j - 1) * m] =
          wx[i + j * np] + wx[(i - 1) + j * np] + wy[i + j * np] + wy[i + (j - 1) * np];

  auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
    for (std::size_t j = 1; j < n; ++j)
      for (std::size_t i = 1; i < n; ++i) {
        const std::size_t k = (i - 1) + (j - 1) * m;
        double v = diag[k] * x[k];
        if (i > 1) v -= wx[(i - 1) + j * np] * x[k - 1];
        if (i < m) v -= wx[i + j * np] * x[k + 1];
        if (j > 1) v -= wy[i + (j - 1) * np] * x[k - m];
        if (j < m) v -= wy[i + j * np] * x[k + m];
        out[k] = v;
      }
  };

  std::vector<double> b(dofs, 0.0);
  if (p.forcing.is_constant()) {
    std::fill(b.begin(), b.end(), p.forcing.value * h * h);
  } else {
    const double w = h * h / 6.0;  // centroid rule: f(c) * area / 3 per vertex
    auto add = [&](std::size_t i, std::size_t j, double v) {
      if (i >= 1 && i < n && j >= 1 && j < n) b[(i - 1) + (j - 1) * m] += v;
    };
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const double xi = static_cast<double>(i) * h, yj = static_cast<double>(j) * h;
        const double fl = p.forcing(xi + 2.0 * h / 3.0, yj + h / 3.0) * w;
        const double fu = p.forcing(xi + h / 3.0, yj + 2.0 * h / 3.0) * w;
        add(i, j, fl + fu);
        add(i + 1, j, fl);
        add(i + 1, j + 1, fl + fu);
        add(i, j + 1, fu);
      }
  }

  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  if (bnorm == 0.0) return u;

  const std::size_t cap = opts.max_iterations ? opts.max_iterations : 50 * n + 1000;
  std::vector<double>& x = u.nodal;
  std::vector<double> r = b, z(dofs), q(dofs), ap(dofs);
  for (std::size_t k = 0; k < dofs; ++k) z[k] = r[k] / diag[k];
  q = z;
  double rz = 0.0;
  for (std::size_t k = 0; k < dofs; ++k) rz += r[k] * z[k];
  const double target = opts.relative_tolerance * bnorm;
  for (std::size_t it = 1; it <= cap; ++it) {
    apply(q, ap);
    double qap = 0.0;
    for (std::size_t k = 0; k < dofs; ++k) qap += q[k] * ap[k];
    const double alpha = rz / qap;
    double rr = 0.0;
    for (std::size_t k = 0; k < dofs; ++k) {
      x[k] += alpha * q[k];
      r[k] -= alpha * ap[k];
      rr += r[k] * r[k];
    }
    u.cg_iterations = it;
    if (std::sqrt(rr) <= target) return u;
    double rz_new = 0.0;
    for (std::size_t k = 0; k < dofs; ++k) {
      z[k] = r[k] / diag[k];
      rz_new += r[k] * z[k];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < dofs; ++k) q[k] = z[k] + beta * q[k];
  }
  throw SolverDivergence("CG did not reach relative residual " + std::to_string(opts.relative_tolerance) +
                         " within " + std::to_string(cap) + " iterations");
}

}  // namespace

DiscreteSolution solve_on_cells(const ParametricProblem& p, std::span<const double> y, std::size_t cells,
                                const SolverOptions& opts) {
  if (cells == 0) throw std::invalid_argument("mesh needs at least one cell");
  if (y.size() < p.parameter_dim())
    throw DimensionError("parameter vector has " + std::to_string(y.size()) + " entries, problem needs " +
                         std::to_string(p.parameter_dim()));
  require_alignment(p, cells);
  return p.spatial_dim == 1 ? solve_1d(p, y, cells) : solve_2d(p, y, cells, opts);
}

DiscreteSolution solve(const ParametricProblem& p, std::span<const double> y, std::size_t level,
                       const MeshHierarchy& mesh, const SolverOptions& opts) {
  if (level >= mesh.levels()) throw std::out_of_range("level beyond the mesh hierarchy");
  if (mesh.spatial_dim() != p.spatial_dim) throw std::invalid_argument("mesh and problem dimensions differ");
  return solve_on_cells(p, y, mesh.cells(level), opts);
}

double qoi(const DiscreteSolution& u, const ParametricProblem& p) {
  const double h = 1.0 / static_cast<double>(u.cells);
  const double cell_measure = u.spatial_dim == 1 ? h : h * h;
  double sum = 0.0;
  if (p.qoi_weight.is_constant()) {
    for (double v : u.nodal) sum += v;
    return p.qoi_weight.value * cell_measure * sum + u.bubble_qoi;
  }
  const std::size_t m = u.cells - 1;
  for (std::size_t k = 0; k < u.nodal.size(); ++k) {
    const double x1 = static_cast<double>(k % m + 1) * h;
    const double x2 = u.spatial_dim == 1 ? 0.0 : static_cast<double>(k / m + 1) * h;
    sum += p.qoi_weight(x1, x2) * u.nodal[k];
  }
  return cell_measure * sum + u.bubble_qoi;
}

double qoi_on_cells(const ParametricProblem& p, std::span<const double> y, std::size_t cells,
                    const SolverOptions& opts) {
  return qoi(solve_on_cells(p, y, cells, opts), p);
}

double detail(const ParametricProblem& p, std::span<const double> y, std::size_t level,
              const MeshHierarchy& mesh, const SolverOptions& opts) {
  const double fine = qoi(solve(p, y, level, mesh, opts), p);
  if (level == 0) return fine;
  return fine - qoi(solve(p, y, level - 1, mesh, opts), p);
}

}  // namespace mlcspg
