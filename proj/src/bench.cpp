#include "mlcspg/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mlcspg/parallel.hpp"

namespace mlcspg {

namespace {

constexpr std::uint64_t kLsqStream = 0x1000;
constexpr std::uint64_t kMcStream = 0x2000;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t finest_cells(const Surrogate& s) {
  const MeshHierarchy mesh(1, s.params.h0, s.params.levels);
  return mesh.cells(s.params.levels - 1);
}

std::vector<double> sample_qoi(const ParametricProblem& p, const SampleBatch& batch, std::size_t cells,
                               unsigned threads) {
  std::vector<double> v(batch.count());
  parallel_for(batch.count(), threads, [&](std::size_t i) { v[i] = qoi_on_cells(p, batch.point(i), cells); });
  return v;
}

}  // namespace

ErrorReport error_norms(std::span<const double> prediction, std::span<const double> reference) {
  if (prediction.size() != reference.size()) throw std::invalid_argument("error_norms: length mismatch");
  ErrorReport e;
  e.n_test = prediction.size();
  if (e.n_test == 0) return e;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = std::abs(prediction[i] - reference[i]);
    s1 += d;
    s2 += d * d;
    e.linf = std::max(e.linf, d);
  }
  const double n = static_cast<double>(e.n_test);
  e.l1 = s1 / n;
  e.l2 = std::sqrt(s2 / n);
  return e;
}

ReferenceSet make_reference(const ParametricProblem& p, std::size_t cells, std::size_t n_test, std::uint64_t seed,
                            unsigned threads) {
  if (n_test == 0) throw std::invalid_argument("reference: N_test must be >= 1");
  ReferenceSet r;
  r.cells = cells;
  r.points = sample_measure(seed, p.parameter_dim(), n_test, kTestStream);
  r.values = sample_qoi(p, r.points, cells, threads);
  return r;
}

ErrorReport empirical_errors(const Surrogate& s, const ReferenceSet& ref, unsigned threads) {
  std::vector<double> pred(ref.points.count());
  parallel_for(pred.size(), threads, [&](std::size_t i) { pred[i] = evaluate(s, ref.points.point(i)); });
  auto e = error_norms(pred, ref.values);
  e.reference_cells = ref.cells;
  e.seed = ref.points.seed;
  return e;
}

ErrorReport empirical_errors(const Surrogate& s, const ParametricProblem& p, std::size_t refinement,
                             std::size_t n_test, std::uint64_t seed, unsigned threads) {
  if (refinement < 4) throw std::invalid_argument("reference refinement must be >= 4");
  const auto ref = make_reference(p, refinement * finest_cells(s), n_test, seed, threads);
  return empirical_errors(s, ref, threads);
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog: need >= 2 paired points");
  LogLogFit f;
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, ymax = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) {
      f.reliable = false;
      f.slope = f.intercept = std::numeric_limits<double>::quiet_NaN();
      return f;
    }
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ymax = std::max(ymax, y[i]);
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_loglog: x values must differ");
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  // errors at round-off level carry no rate information
  f.reliable = ymax > 1e-10;
  return f;
}

ConvergenceStudy convergence_study(const ParametricProblem& p, const ScheduleParams& base, const WeightConfig& w,
                                   std::span<const double> h0_values, Algorithm algorithm,
                                   const ConvergenceOptions& opts) {
  if (h0_values.size() < 3) throw std::invalid_argument("convergence study needs at least 3 values of h0");
  if (opts.refinement < 4) throw std::invalid_argument("reference refinement must be >= 4");
  std::size_t finest = 0;
  for (double h0 : h0_values) finest = std::max(finest, MeshHierarchy(p.spatial_dim, h0, base.levels).cells(base.levels - 1));
  const auto ref = make_reference(p, opts.refinement * finest, opts.n_test, opts.seed, opts.threads);

  ConvergenceStudy study;
  std::vector<double> hs, l2, linf;
  for (double h0 : h0_values) {
    ScheduleParams sp = base;
    sp.h0 = h0;
    const auto sched = make_schedule(sp, w, p.parameter_dim());
    RunOptions ro = opts.run;
    ro.threads = opts.threads;
    const auto sur = run(p, sched, opts.seed, algorithm, ro);
    ConvergenceRow row;
    row.h0 = h0;
    row.errors = empirical_errors(sur, ref, opts.threads);
    hs.push_back(h0);
    l2.push_back(row.errors.l2);
    linf.push_back(row.errors.linf);
    study.rows.push_back(row);
  }
  study.l2_fit = fit_loglog(hs, l2);
  study.linf_fit = fit_loglog(hs, linf);
  return study;
}

double level_work(const LevelSchedule& sched, std::size_t level, int n, std::optional<double> h_ref) {
  const auto& lv = sched.levels.at(level);
  const double ratio = h_ref.value_or(sched.params.h0) / lv.h;
  return static_cast<double>(lv.samples) * std::pow(ratio, n) * (1.0 + std::ldexp(1.0, -n));
}

double work_total(const LevelSchedule& sched, int n, std::optional<double> h_ref) {
  double w = 0.0;
  for (std::size_t l = 0; l < sched.levels.size(); ++l) w += level_work(sched, l, n, h_ref);
  return w;
}

std::map<MultiIndex, double> aggregate_coefficients(const Surrogate& s) {
  std::map<MultiIndex, double> out;
  for (const auto& b : s.blocks)
    for (std::size_t k = 0; k < b.indices.size(); ++k) out[b.indices[k]] += b.coefficients[k];
  return out;
}

CoefficientTable compare_coefficients(const ParametricProblem& p, const std::vector<MultiIndex>& gamma,
                                      const CompareOptions& opts) {
  if (gamma.empty()) throw std::invalid_argument("compare: empty index set");
  const std::size_t d = p.parameter_dim();
  CoefficientTable t;

  const auto lsq_batch = sample_measure(opts.seed, d, 2 * gamma.size(), kLsqStream);
  const auto lsq_phi = build_sensing_matrix(lsq_batch, gamma, opts.threads);
  const auto lsq_vals = sample_qoi(p, lsq_batch, opts.cells, opts.threads);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(lsq_vals.data(), static_cast<Eigen::Index>(lsq_vals.size()));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(gamma.size()));
  const auto lsq = least_squares({lsq_phi.values, b, ones, 0.0, std::nullopt});

  std::vector<std::vector<double>> raw;
  t.methods.push_back("lsq");
  raw.emplace_back(lsq.coefficients.data(), lsq.coefficients.data() + lsq.coefficients.size());

  for (std::size_t k = 0; k < opts.mc_samples.size(); ++k) {
    const auto batch = sample_measure(opts.seed, d, opts.mc_samples[k], kMcStream + k);
    const auto phi = build_sensing_matrix(batch, gamma, opts.threads);
    const auto vals = sample_qoi(p, batch, opts.cells, opts.threads);
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    const auto mc = mc_project(phi.values, v);
    t.methods.push_back("mc" + std::to_string(opts.mc_samples[k]));
    raw.emplace_back(mc.coefficients.data(), mc.coefficients.data() + mc.coefficients.size());
  }

  if (opts.multilevel) {
    const auto agg = aggregate_coefficients(*opts.multilevel);
    std::vector<double> v(gamma.size(), 0.0);
    for (std::size_t k = 0; k < gamma.size(); ++k)
      if (auto it = agg.find(gamma[k]); it != agg.end()) v[k] = it->second;
    t.methods.push_back("mlcspg");
    raw.push_back(std::move(v));
  }

  std::vector<std::size_t> order(gamma.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return std::abs(raw[0][a]) > std::abs(raw[0][c]); });
  for (auto k : order) t.indices.push_back(gamma[k]);
  for (const auto& col : raw) {
    std::vector<double> v;
    for (auto k : order) v.push_back(col[k]);
    t.values.push_back(std::move(v));
  }
  return t;
}

void write_convergence_csv(std::ostream& os, const ConvergenceStudy& study) {
  os << "h0,L1,L2,Linf,slope\n";
  for (const auto& r : study.rows)
    os << fmt17(r.h0) << ',' << fmt17(r.errors.l1) << ',' << fmt17(r.errors.l2) << ',' << fmt17(r.errors.linf)
       << ',' << fmt17(study.l2_fit.slope) << '\n';
}

void write_work_csv(std::ostream& os, const LevelSchedule& sched, int n) {
  os << "level,m,N,s,units\n";
  for (std::size_t l = 0; l < sched.levels.size(); ++l) {
    const auto& lv = sched.levels[l];
    os << lv.index << ',' << lv.samples << ',' << lv.candidates.size() << ',' << fmt17(lv.sparsity) << ','
       << fmt17(level_work(sched, l, n)) << '\n';
  }
}

void write_coeffs_csv(std::ostream& os, const CoefficientTable& table) {
  os << "rank,multiindex";
  for (const auto& m : table.methods) os << ',' << m;
  os << '\n';
  for (std::size_t r = 0; r < table.indices.size(); ++r) {
    os << (r + 1) << ',' << to_string(table.indices[r]);
    for (const auto& col : table.values) os << ',' << fmt17(col[r]);
    os << '\n';
  }
}

}  // namespace mlcspg
