#include "mlcspg/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mlcspg/errors.hpp"
#include "mlcspg/multiindex.hpp"

namespace mlcspg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::womp:
      return "womp";
    case Algorithm::whtp:
      return "whtp";
    case Algorithm::wbp:
      return "wbp";
    case Algorithm::lsq:
      return "lsq";
    case Algorithm::mc:
      return "mc";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::womp, Algorithm::whtp, Algorithm::wbp, Algorithm::lsq, Algorithm::mc})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown recovery algorithm '" + std::string(name) + "'");
}

namespace {

void check_request(const RecoveryRequest& req) {
  if (req.rhs.size() != req.matrix.rows()) throw std::invalid_argument("rhs length differs from matrix rows");
  if (req.weights.size() != req.matrix.cols()) throw std::invalid_argument("one weight per column required");
  for (Index k = 0; k < req.weights.size(); ++k)
    if (!(req.weights[k] >= 1.0)) throw std::invalid_argument("weights must be >= 1");
}

MatrixXd columns_of(const MatrixXd& a, const std::vector<Index>& support) {
  MatrixXd s(a.rows(), static_cast<Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) s.col(static_cast<Index>(k)) = a.col(support[k]);
  return s;
}

struct SupportFit {
  VectorXd coef;
  bool full_rank = true;
};

// Least squares restricted to `support`; rank is judged relative to the
// largest pivot.
SupportFit fit_on_support(const MatrixXd& a, const VectorXd& b, const std::vector<Index>& support) {
  SupportFit f;
  if (support.empty()) return f;
  const MatrixXd sub = columns_of(a, support);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(sub);
  qr.setThreshold(1e-10);
  f.full_rank = qr.rank() == sub.cols();
  if (f.full_rank) {
    f.coef = qr.solve(b);
  } else {
    f.coef = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(sub).solve(b);
  }
  return f;
}

VectorXd scatter(Index n, const std::vector<Index>& support, const VectorXd& coef) {
  VectorXd x = VectorXd::Zero(n);
  for (std::size_t k = 0; k < support.size(); ++k) x[support[k]] = coef[static_cast<Index>(k)];
  return x;
}

void finalize(RecoveryResult& r, const RecoveryRequest& req) {
  r.residual_norm = (req.matrix * r.coefficients - req.rhs).norm();
  r.objective = 0.0;
  r.achieved_weighted_sparsity = 0.0;
  for (Index k = 0; k < r.coefficients.size(); ++k) {
    if (r.coefficients[k] == 0.0) continue;
    r.objective += req.weights[k] * std::abs(r.coefficients[k]);
    r.achieved_weighted_sparsity += req.weights[k] * req.weights[k];
  }
}

}  // namespace

RecoveryResult womp(const RecoveryRequest& req) {
  check_request(req);
  const MatrixXd& a = req.matrix;
  const Index n = a.cols();
  const double bnorm = req.rhs.norm();
  const double cap = req.budget * (1.0 + 1e-12);

  RecoveryResult res;
  res.coefficients = VectorXd::Zero(n);
  std::vector<Index> support;
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);
  VectorXd r = req.rhs;
  double used = 0.0;

  while (static_cast<Index>(support.size()) < n) {
    if (r.norm() <= 1e-12 * bnorm) break;
    const VectorXd corr = a.transpose() * r;
    Index best = -1;
    double best_score = 0.0;
    for (Index k = 0; k < n; ++k) {
      if (blocked[static_cast<std::size_t>(k)]) continue;
      const double score = std::abs(corr[k]) / req.weights[k];
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    if (best < 0) break;
    const double cost = req.weights[best] * req.weights[best];
    if (used + cost > cap) break;

    auto trial = support;
    trial.push_back(best);
    blocked[static_cast<std::size_t>(best)] = 1;
    auto fit = fit_on_support(a, req.rhs, trial);
    if (!fit.full_rank) {
      res.warnings.push_back("womp: column " + std::to_string(best) + " is numerically dependent, skipped");
      continue;
    }
    support = std::move(trial);
    used += cost;
    res.coefficients = scatter(n, support, fit.coef);
    r = req.rhs - a * res.coefficients;
    ++res.iterations;
  }
  finalize(res, req);
  return res;
}

namespace {

double spectral_norm_squared(const MatrixXd& a, std::size_t iterations) {
  if (a.size() == 0) return 0.0;
  VectorXd v = VectorXd::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
  double est = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    VectorXd w = a.transpose() * (a * v);
    est = w.norm();
    if (est == 0.0) return 0.0;
    v = w / est;
  }
  return est;
}

}  // namespace

RecoveryResult whtp(const RecoveryRequest& req, const WhtpOptions& opts) {
  check_request(req);
  const MatrixXd& a = req.matrix;
  const Index n = a.cols();
  const double norm2 = spectral_norm_squared(a, opts.power_iterations);
  const double step = norm2 > 0.0 ? 1.0 / norm2 : 0.0;
  const double bnorm = req.rhs.norm();
  std::vector<double> weights(req.weights.data(), req.weights.data() + n);

  RecoveryResult res;
  res.coefficients = VectorXd::Zero(n);
  res.converged = false;
  std::vector<Index> previous;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    res.iterations = it;
    const VectorXd probe = res.coefficients + step * (a.transpose() * (req.rhs - a * res.coefficients));
    const auto picked =
        greedy_weighted_selection(std::span<const double>(probe.data(), static_cast<std::size_t>(n)), weights,
                                  req.budget);
    std::vector<Index> support(picked.begin(), picked.end());
    auto fit = fit_on_support(a, req.rhs, support);
    res.coefficients = support.empty() ? VectorXd::Zero(n) : scatter(n, support, fit.coef);
    if (support == previous || (req.matrix * res.coefficients - req.rhs).norm() <= 1e-14 * bnorm) {
      res.converged = true;
      break;
    }
    previous = std::move(support);
  }
  if (!res.converged) res.warnings.push_back("whtp: support did not stabilize");
  finalize(res, req);
  return res;
}

// ---------------------------------------------------------------------------
// Weighted basis pursuit

namespace {

struct ConstraintSet {
  MatrixXd u, v;        // thin SVD factors restricted to the numerical rank
  VectorXd sigma;
  VectorXd b_range;     // U^T b
  double eta = 0.0;
  double eta_range = 0.0;  // bound left for the in-range part of the residual

  // Euclidean projection of x onto {z : ||Phi z - b|| <= eta}.
  VectorXd project(const VectorXd& x) const {
    const VectorXd a0 = v.transpose() * x;
    const VectorXd rho = sigma.cwiseProduct(a0) - b_range;
    if (rho.squaredNorm() <= eta_range * eta_range) return x;
    VectorXd a(a0.size());
    if (eta_range <= 0.0) {
      a = b_range.cwiseQuotient(sigma);
    } else {
      auto resid = [&](double lam) {
        double s = 0.0;
        for (Index i = 0; i < rho.size(); ++i) {
          const double t = rho[i] / (1.0 + lam * sigma[i] * sigma[i]);
          s += t * t;
        }
        return std::sqrt(s);
      };
      double lo = 0.0, hi = 1.0;
      while (resid(hi) > eta_range) hi *= 4.0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (resid(mid) > eta_range ? lo : hi) = mid;
      }
      for (Index i = 0; i < a.size(); ++i) {
        const double s2 = sigma[i] * sigma[i];
        a[i] = (a0[i] + hi * sigma[i] * b_range[i]) / (1.0 + hi * s2);
      }
    }
    return x + v * (a - a0);
  }

  // Least-squares solution lambda of Phi^T lambda = s.
  VectorXd dual_from_subgradient(const VectorXd& s) const {
    return u * (v.transpose() * s).cwiseQuotient(sigma);
  }
};

double soft_objective(const VectorXd& z, const VectorXd& w) { return w.cwiseProduct(z).cwiseAbs().sum(); }

// Dual value of lambda after scaling it into {|Phi^T lambda| <= omega}.
double dual_value(const MatrixXd& a, const VectorXd& b, const VectorXd& w, double eta, VectorXd lambda) {
  const VectorXd c = a.transpose() * lambda;
  double t = 0.0;
  for (Index k = 0; k < c.size(); ++k) t = std::max(t, std::abs(c[k]) / w[k]);
  if (t > 1.0) lambda /= t;
  return b.dot(lambda) - eta * lambda.norm();
}

struct Polished {
  bool ok = false;
  VectorXd z;
  VectorXd lambda;
};

// Exact minimizer of the weighted l1 objective over the given support and sign
// pattern, together with the matching multiplier.
Polished polish(const MatrixXd& a, const VectorXd& b, const VectorXd& w, double eta, double feas_tol,
                const VectorXd& x) {
  Polished p;
  const double xmax = x.cwiseAbs().maxCoeff();
  if (xmax == 0.0) return p;
  std::vector<Index> support;
  for (Index k = 0; k < x.size(); ++k)
    if (std::abs(x[k]) > 1e-9 * xmax) support.push_back(k);
  if (static_cast<Index>(support.size()) > a.rows()) return p;

  const MatrixXd sub = columns_of(a, support);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(sub);
  qr.setThreshold(1e-12);
  if (qr.rank() < sub.cols()) return p;
  const VectorXd z_ls = qr.solve(b);
  const VectorXd r_ls = sub * z_ls - b;
  const double r2 = r_ls.squaredNorm();
  if (std::sqrt(r2) > eta + feas_tol) return p;

  VectorXd c(static_cast<Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    const Index j = support[k];
    c[static_cast<Index>(k)] = w[j] * (x[j] > 0 ? 1.0 : -1.0);
  }
  // G c with G = (S^T S)^{-1}, via the normal equations of the QR factor.
  const MatrixXd gram = sub.transpose() * sub;
  const VectorXd gc = gram.ldlt().solve(c);
  const double cgc = c.dot(gc);
  if (!(cgc > 0.0)) return p;

  VectorXd zs;
  if (eta * eta - r2 <= 0.0) {
    zs = z_ls;
    p.lambda = sub * gc;
  } else {
    const double t = std::sqrt((eta * eta - r2) / cgc);
    zs = z_ls - t * gc;
    p.lambda = -(sub * zs - b) / t;
  }
  p.z = scatter(a.cols(), support, zs);
  p.ok = true;
  return p;
}

}  // namespace

RecoveryResult wbp(const RecoveryRequest& req, const WbpOptions& opts) {
  check_request(req);
  const MatrixXd& a = req.matrix;
  const VectorXd& b = req.rhs;
  const VectorXd& w = req.weights;
  const Index n = a.cols();
  const double eta = req.noise_level.value_or(0.0);
  if (eta < 0.0) throw std::invalid_argument("noise level must be >= 0");
  const double bnorm = b.norm();

  RecoveryResult res;
  res.coefficients = VectorXd::Zero(n);
  if (eta >= bnorm) {
    finalize(res, req);
    return res;
  }

  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  Index rank = 0;
  const double sv_tol = sv.size() ? sv[0] * 1e-12 * static_cast<double>(std::max(a.rows(), a.cols())) : 0.0;
  while (rank < sv.size() && sv[rank] > sv_tol) ++rank;

  ConstraintSet cs;
  cs.u = svd.matrixU().leftCols(rank);
  cs.v = svd.matrixV().leftCols(rank);
  cs.sigma = sv.head(rank);
  cs.b_range = cs.u.transpose() * b;
  cs.eta = eta;
  const double outside2 = std::max(0.0, b.squaredNorm() - cs.b_range.squaredNorm());
  const double feas_tol = 1e-10 * std::max(bnorm, 1e-300);
  if (eta + feas_tol < std::sqrt(outside2))
    throw Infeasible("residual bound " + std::to_string(eta) + " is below the distance " +
                     std::to_string(std::sqrt(outside2)) + " from b to range(Phi)");
  cs.eta_range = std::sqrt(std::max(0.0, eta * eta - outside2));

  // Scaled ADMM on f(x) = ||W x||_1, g(z) = indicator of the constraint set.
  const VectorXd x_ls = cs.v * cs.b_range.cwiseQuotient(cs.sigma);
  double tau = 1.0 / (0.1 * std::max(x_ls.cwiseAbs().maxCoeff(), 1e-300));
  VectorXd x = x_ls, z = x_ls, u = VectorXd::Zero(n);

  VectorXd best_z = cs.project(x_ls);
  double best_primal = soft_objective(best_z, w);
  double best_dual = -std::numeric_limits<double>::infinity();
  res.converged = false;

  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    res.iterations = it;
    const VectorXd t = z - u;
    for (Index k = 0; k < n; ++k) {
      const double thr = w[k] / tau;
      x[k] = t[k] > thr ? t[k] - thr : (t[k] < -thr ? t[k] + thr : 0.0);
    }
    const VectorXd z_prev = z;
    z = cs.project(x + u);
    u += x - z;

    if (it % 10 == 0) {
      const double primal_res = (x - z).norm();
      const double dual_res = tau * (z - z_prev).norm();
      if (primal_res > 10.0 * dual_res) {
        tau *= 2.0;
        u /= 2.0;
      } else if (dual_res > 10.0 * primal_res) {
        tau /= 2.0;
        u *= 2.0;
      }
    }

    if (it % opts.polish_every == 0 || it == opts.max_iterations) {
      const double pz = soft_objective(z, w);
      if (pz < best_primal) {
        best_primal = pz;
        best_z = z;
      }
      best_dual = std::max(best_dual, dual_value(a, b, w, eta, cs.dual_from_subgradient(-tau * u)));
      const auto pol = polish(a, b, w, eta, feas_tol, x);
      if (pol.ok) {
        const double pp = soft_objective(pol.z, w);
        if (pp < best_primal) {
          best_primal = pp;
          best_z = pol.z;
        }
        best_dual = std::max(best_dual, dual_value(a, b, w, eta, pol.lambda));
      }
      if (best_primal - best_dual <= opts.gap_tolerance * std::max(best_primal, 1e-300)) {
        res.converged = true;
        break;
      }
    }
  }
  if (!res.converged) res.warnings.push_back("wbp: duality gap above tolerance at iteration cap");
  res.coefficients = best_z;
  finalize(res, req);
  return res;
}

RecoveryResult least_squares(const RecoveryRequest& req) {
  if (req.rhs.size() != req.matrix.rows()) throw std::invalid_argument("rhs length differs from matrix rows");
  const MatrixXd& a = req.matrix;
  RecoveryResult res;
  bool solved = false;
  if (a.rows() >= a.cols() && a.cols() > 0) {
    Eigen::HouseholderQR<MatrixXd> qr(a);
    const auto diag = qr.matrixQR().diagonal().cwiseAbs();
    if (diag.minCoeff() > 1e-12 * diag.maxCoeff()) {
      res.coefficients = qr.solve(req.rhs);
      solved = true;
    }
  }
  if (!solved) res.coefficients = a.cols() ? Eigen::CompleteOrthogonalDecomposition<MatrixXd>(a).solve(req.rhs)
                                           : VectorXd();
  res.iterations = 1;
  res.residual_norm = (a * res.coefficients - req.rhs).norm();
  for (Index k = 0; k < res.coefficients.size(); ++k) {
    if (res.coefficients[k] == 0.0) continue;
    const double om = req.weights.size() == a.cols() ? req.weights[k] : 1.0;
    res.objective += om * std::abs(res.coefficients[k]);
    res.achieved_weighted_sparsity += om * om;
  }
  return res;
}

RecoveryResult mc_project(const MatrixXd& matrix, const VectorXd& values) {
  if (values.size() != matrix.rows()) throw std::invalid_argument("one value per sample row required");
  const Index m = matrix.rows();
  RecoveryResult res;
  res.iterations = 1;
  if (m == 0) {
    res.coefficients = VectorXd::Zero(matrix.cols());
    res.standard_errors = VectorXd::Zero(matrix.cols());
    return res;
  }
  const MatrixXd terms = matrix.array().colwise() * values.array();
  res.coefficients = terms.colwise().mean().transpose();
  res.standard_errors = VectorXd::Zero(matrix.cols());
  if (m > 1) {
    for (Index k = 0; k < matrix.cols(); ++k) {
      const double var = (terms.col(k).array() - res.coefficients[k]).square().sum() / static_cast<double>(m - 1);
      res.standard_errors[k] = std::sqrt(var / static_cast<double>(m));
    }
  }
  res.residual_norm = (matrix * res.coefficients - values).norm();
  return res;
}

double select_noise_level_cv(const RecoveryRequest& req, const CrossValidation& cv, const WbpOptions& opts) {
  check_request(req);
  const Index m = req.matrix.rows();
  const auto held = std::max<Index>(1, static_cast<Index>(std::floor(cv.holdout_fraction * static_cast<double>(m))));
  const Index train = m - held;
  if (train < 1) return 0.0;
  const MatrixXd a_train = req.matrix.topRows(train);
  const VectorXd b_train = req.rhs.head(train);
  const MatrixXd a_test = req.matrix.bottomRows(held);
  const VectorXd b_test = req.rhs.tail(held);
  const double scale = b_train.norm();
  if (scale == 0.0) return 0.0;

  double best_eta = 0.0, best_err = std::numeric_limits<double>::infinity();
  std::size_t best_g = 0;
  for (std::size_t g = 0; g < cv.grid_points; ++g) {
    if (g >= best_g + 1 + cv.patience && std::isfinite(best_err)) break;
    const double eta = scale * std::pow(10.0, -0.5 * static_cast<double>(g + 1));
    RecoveryRequest sub{a_train, b_train, req.weights, req.budget, eta};
    try {
      const auto r = wbp(sub, opts);
      const double err = (a_test * r.coefficients - b_test).norm();
      if (err < best_err) {
        best_err = err;
        best_eta = eta;
        best_g = g;
      }
    } catch (const Infeasible&) {
      break;  // smaller bounds are infeasible too
    }
  }
  // never below the distance from b to range(Phi) of the full system
  const double floor = least_squares(req).residual_norm * (1.0 + 1e-6);
  return std::max(best_eta * std::sqrt(static_cast<double>(m) / static_cast<double>(train)), floor);
}

RecoveryResult recover(Algorithm algorithm, const RecoveryRequest& req) {
  switch (algorithm) {
    case Algorithm::womp:
      return womp(req);
    case Algorithm::whtp:
      return whtp(req);
    case Algorithm::wbp: {
      if (req.noise_level) return wbp(req);
      RecoveryRequest r{req.matrix, req.rhs, req.weights, req.budget, select_noise_level_cv(req)};
      return wbp(r);
    }
    case Algorithm::lsq:
      return least_squares(req);
    case Algorithm::mc:
      return mc_project(req.matrix, req.rhs);
  }
  throw std::invalid_argument("unknown algorithm");
}

void write_recovery_csv(std::ostream& os, const RecoveryResult& r, const std::vector<MultiIndex>& columns,
                        Algorithm algorithm, double budget) {
  if (static_cast<Index>(columns.size()) != r.coefficients.size())
    throw std::invalid_argument("one multi-index per coefficient required");
  char buf[96];
  os << "# algorithm=" << to_string(algorithm);
  std::snprintf(buf, sizeof buf, ",budget=%.17g,residual=%.17g", budget, r.residual_norm);
  os << buf << ",iterations=" << r.iterations << "\nmultiindex,coefficient\n";
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const double c = r.coefficients[static_cast<Index>(k)];
    if (c == 0.0) continue;
    std::snprintf(buf, sizeof buf, "%.17g", c);
    os << to_string(columns[k]) << ',' << buf << '\n';
  }
}

}  // namespace mlcspg
