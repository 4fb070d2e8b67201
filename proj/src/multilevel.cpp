#include "mlcspg/multilevel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mlcspg/chebyshev.hpp"
#include "mlcspg/errors.hpp"
#include "mlcspg/parallel.hpp"

namespace mlcspg {

std::string_view to_string(SampleRule r) {
  switch (r) {
    case SampleRule::practical:
      return "practical";
    case SampleRule::theoretical:
      return "theoretical";
    case SampleRule::interpolation:
      return "interpolation";
  }
  return "?";
}

SampleRule parse_sample_rule(std::string_view name) {
  for (auto r : {SampleRule::practical, SampleRule::theoretical, SampleRule::interpolation})
    if (to_string(r) == name) return r;
  throw std::invalid_argument("unknown sample rule '" + std::string(name) + "'");
}

void ScheduleParams::validate() const {
  if (levels < 1) throw std::invalid_argument("schedule: L must be >= 1");
  if (!(h0 > 0.0)) throw std::invalid_argument("schedule: h0 must be > 0");
  if (!(sparsity_constant >= 1.0)) throw std::invalid_argument("schedule: C_s must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("schedule: sigma must be > 0");
  if (rule == SampleRule::theoretical) {
    if (!(c0 > 0.0)) throw std::invalid_argument("schedule: c0 must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("schedule: gamma must lie in (0, 1)");
  }
}

namespace {

// ceil that ignores floating-point noise just above an integer.
std::size_t robust_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace

std::size_t practical_sample_count(double s, std::size_t n) {
  if (n == 0) return 0;
  if (n == 1) return 1;
  return static_cast<std::size_t>(std::ceil(2.0 * s * std::log(static_cast<double>(n))));
}

std::size_t sample_count(const ScheduleParams& p, double s, std::size_t n) {
  if (n == 0) return 0;
  switch (p.rule) {
    case SampleRule::practical:
      return practical_sample_count(s, n);
    case SampleRule::interpolation:
      return n;
    case SampleRule::theoretical: {
      const double ls = std::log(s);
      const double v = p.c0 * s * std::max(ls * ls * ls * std::log(static_cast<double>(n)), std::log(1.0 / p.gamma));
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(v)));
    }
  }
  return 0;
}

LevelSchedule make_schedule(const ScheduleParams& params, const WeightConfig& weights, std::size_t parameter_dim) {
  params.validate();
  weights.validate();
  weights.require_finite_candidate_sets();
  LevelSchedule sched;
  sched.params = params;
  sched.weights = weights;
  sched.parameter_dim = parameter_dim;
  const std::size_t L = params.levels;
  for (std::size_t l = 0; l < L; ++l) {
    Level lv;
    lv.index = l;
    lv.label = l + 1;
    lv.h = params.h0 * std::ldexp(1.0, -static_cast<int>(l));
    lv.sparsity = static_cast<double>(
        robust_ceil(params.sparsity_constant * std::exp2(static_cast<double>(L - 1 - l) * params.sigma)));
    lv.candidates = enumerate_candidate_set(weights, lv.sparsity, parameter_dim);
    lv.samples = sample_count(params, lv.sparsity, lv.candidates.size());
    lv.least_squares_advised = !lv.candidates.empty() && lv.samples >= lv.candidates.size();
    sched.levels.push_back(std::move(lv));
  }
  return sched;
}

double evaluate(const Surrogate& s, std::span<const double> y) {
  if (y.size() < s.parameter_dim)
    throw DimensionError("point has " + std::to_string(y.size()) + " coordinates, surrogate needs " +
                         std::to_string(s.parameter_dim));
  for (double t : y)
    if (!(std::abs(t) <= 1.0 + kDomainTolerance)) throw DomainError("point outside [-1, 1]^d");
  double total = 0.0;
  for (const auto& b : s.blocks) total += evaluate_expansion(b.indices, b.coefficients, y);
  return total;
}

double RunDiagnostics::solve_seconds() const {
  double t = 0.0;
  for (const auto& l : levels) t += l.solve_seconds;
  return t;
}

double RunDiagnostics::recovery_seconds() const {
  double t = 0.0;
  for (const auto& l : levels) t += l.recovery_seconds;
  return t;
}

std::size_t RunDiagnostics::pde_solves() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.pde_solves;
  return n;
}

SampleBatch level_samples(const LevelSchedule& sched, std::size_t level, std::uint64_t seed, SampleReuse reuse) {
  const auto& lv = sched.levels.at(level);
  const std::uint64_t stream = reuse == SampleReuse::fresh ? level : 0;
  return sample_measure(seed, sched.parameter_dim, lv.samples, stream);
}

Surrogate run(const ParametricProblem& p, const LevelSchedule& sched, std::uint64_t seed, Algorithm algorithm,
              const RunOptions& opts, RunDiagnostics* diagnostics) {
  using clock = std::chrono::steady_clock;
  p.validate();
  if (p.parameter_dim() != sched.parameter_dim)
    throw DimensionError("problem has " + std::to_string(p.parameter_dim()) + " parameters, schedule " +
                         std::to_string(sched.parameter_dim));
  check_uea(p);
  const MeshHierarchy mesh(p.spatial_dim, sched.params.h0, sched.levels.size());

  Surrogate out;
  out.seed = seed;
  out.fingerprint = p.fingerprint();
  out.parameter_dim = sched.parameter_dim;
  out.algorithm = algorithm;
  out.params = sched.params;
  out.weights = sched.weights;

  RunDiagnostics diag;
  for (const auto& lv : sched.levels) {
    LevelBlock block;
    block.level = lv.index;
    block.indices = lv.candidates;
    LevelDiagnostics ld;
    ld.level = lv.index;
    ld.samples = lv.samples;
    ld.candidates = lv.candidates.size();

    if (!lv.candidates.empty()) {
      const auto batch = level_samples(sched, lv.index, seed, opts.reuse);
      const auto t0 = clock::now();
      Eigen::VectorXd values(static_cast<Eigen::Index>(batch.count()));
      parallel_for(batch.count(), opts.threads, [&](std::size_t i) {
        values[static_cast<Eigen::Index>(i)] = detail(p, batch.point(i), lv.index, mesh, opts.solver);
      });
      const auto t1 = clock::now();
      ld.pde_solves = batch.count() * (lv.index == 0 ? 1 : 2);

      const auto phi = build_sensing_matrix(batch, lv.candidates, opts.threads);
      Eigen::VectorXd w(static_cast<Eigen::Index>(lv.candidates.size()));
      for (std::size_t k = 0; k < lv.candidates.size(); ++k)
        w[static_cast<Eigen::Index>(k)] = weight_of(lv.candidates[k], sched.weights);
      RecoveryRequest req{phi.values, values, w, lv.sparsity, opts.noise_level};
      const auto res = recover(algorithm, req);
      const auto t2 = clock::now();

      block.coefficients.assign(res.coefficients.data(), res.coefficients.data() + res.coefficients.size());
      ld.residual_norm = res.residual_norm;
      ld.iterations = res.iterations;
      ld.achieved_weighted_sparsity = res.achieved_weighted_sparsity;
      ld.converged = res.converged;
      ld.warnings = res.warnings;
      ld.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
      ld.recovery_seconds = std::chrono::duration<double>(t2 - t1).count();
    }
    out.blocks.push_back(std::move(block));
    diag.levels.push_back(std::move(ld));
  }
  if (diagnostics) *diagnostics = std::move(diag);
  return out;
}

Truncation truncate_dimension(std::span<const double> decay, double p, double t_sum, double h_finest) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("truncation: p must lie in (0, 1)");
  if (!(h_finest > 0.0)) throw std::invalid_argument("truncation: h_L must be > 0");
  for (std::size_t j = 1; j < decay.size(); ++j)
    if (decay[j] > decay[j - 1]) throw std::invalid_argument("truncation: decay must be nonincreasing");
  Truncation t;
  t.dims = robust_ceil(std::pow(h_finest, -t_sum * p / (1.0 - p)));
  double sum = 0.0;
  for (double b : decay) sum += std::pow(std::abs(b), p);
  const double norm = std::pow(sum, 1.0 / p);
  const double q = 1.0 / p - 1.0;
  t.tail_bound = std::min(1.0 / q, 1.0) * norm * std::pow(static_cast<double>(t.dims), -q);
  return t;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

}  // namespace

void write_surrogate(std::ostream& os, const Surrogate& s) {
  os << "#format=mlcspg-surrogate\n";
  os << "#seed=" << s.seed << '\n';
  os << "#fingerprint=" << s.fingerprint << '\n';
  os << "#d=" << s.parameter_dim << '\n';
  os << "#algorithm=" << to_string(s.algorithm) << '\n';
  os << "#L=" << s.params.levels << '\n';
  os << "#h0=" << fmt17(s.params.h0) << '\n';
  os << "#C_s=" << fmt17(s.params.sparsity_constant) << '\n';
  os << "#sigma=" << fmt17(s.params.sigma) << '\n';
  os << "#sample_rule=" << to_string(s.params.rule) << '\n';
  os << "#c0=" << fmt17(s.params.c0) << '\n';
  os << "#gamma=" << fmt17(s.params.gamma) << '\n';
  os << "#weights=" << to_string(s.weights) << '\n';
  os << "level,multiindex,coefficient\n";
  for (const auto& b : s.blocks)
    for (std::size_t k = 0; k < b.indices.size(); ++k)
      os << b.level << ',' << to_string(b.indices[k]) << ',' << fmt17(b.coefficients[k]) << '\n';
}

Surrogate read_surrogate(std::istream& is) {
  std::map<std::string, std::string> header;
  std::string line;
  std::size_t lineno = 0;
  bool saw_columns = false;
  Surrogate s;
  std::map<std::size_t, LevelBlock> blocks;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto where = [&] { return "surrogate line " + std::to_string(lineno) + ": "; };
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error(where() + "header without '='");
      header[line.substr(1, eq - 1)] = line.substr(eq + 1);
      continue;
    }
    if (!saw_columns) {
      if (line != "level,multiindex,coefficient") throw std::runtime_error(where() + "missing column header");
      saw_columns = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw std::runtime_error(where() + "expected 3 fields");
    try {
      const auto level = static_cast<std::size_t>(std::stoull(line.substr(0, c1)));
      auto& b = blocks[level];
      b.level = level;
      b.indices.push_back(parse_multiindex(line.substr(c1 + 1, c2 - c1 - 1)));
      b.coefficients.push_back(to_double(line.substr(c2 + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(where() + e.what());
    }
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = header.find(k);
    if (it == header.end()) throw std::runtime_error("surrogate header lacks '" + k + "'");
    return it->second;
  };
  try {
    s.seed = std::stoull(get("seed"));
    s.fingerprint = get("fingerprint");
    s.parameter_dim = std::stoull(get("d"));
    s.algorithm = parse_algorithm(get("algorithm"));
    s.params.levels = std::stoull(get("L"));
    s.params.h0 = to_double(get("h0"));
    s.params.sparsity_constant = to_double(get("C_s"));
    s.params.sigma = to_double(get("sigma"));
    s.params.rule = parse_sample_rule(get("sample_rule"));
    s.params.c0 = to_double(get("c0"));
    s.params.gamma = to_double(get("gamma"));
    s.weights = parse_weight_config(get("weights"));
  } catch (const std::runtime_error&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("surrogate header: ") + e.what());
  }
  for (std::size_t l = 0; l < s.params.levels; ++l) {
    auto it = blocks.find(l);
    LevelBlock b;
    b.level = l;
    if (it != blocks.end()) b = std::move(it->second);
    s.blocks.push_back(std::move(b));
  }
  if (blocks.size() && blocks.rbegin()->first >= s.params.levels)
    throw std::runtime_error("surrogate has rows for a level beyond L");
  return s;
}

}  // namespace mlcspg
