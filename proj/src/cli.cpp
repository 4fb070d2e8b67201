#include "mlcspg/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mlcspg/bench.hpp"
#include "mlcspg/config.hpp"
#include "mlcspg/errors.hpp"
#include "mlcspg/parallel.hpp"

namespace mlcspg {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> sets;
};

void add_common(CLI::App* c, Common& o, bool needs_out) {
  c->add_option("--config", o.config, "experiment config (TOML)")->required();
  auto out = c->add_option("--out", o.out, "output path");
  if (needs_out) out->required();
  c->add_option("--seed", o.seed, "overrides schedule.seed");
  c->add_option("--threads", o.threads, "worker threads (default: MLCSPG_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  c->add_option("--set", o.sets, "override block.key=value")->take_all();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Loaded {
  ExperimentConfig config;
  ParametricProblem problem;
  LevelSchedule schedule;
  unsigned threads = 1;
};

// Everything that can be checked before the first solve.
Loaded prepare(const Common& o) {
  Loaded l;
  l.config = load_config(o.config, o.sets);
  if (o.seed) l.config.seed = *o.seed;
  l.threads = o.threads.value_or(default_threads());
  try {
    l.problem = l.config.problem.build();
    check_uea(l.problem);
    l.schedule = make_schedule(l.config.schedule, l.config.weights, l.problem.parameter_dim());
    MeshHierarchy(l.problem.spatial_dim, l.config.schedule.h0, l.config.schedule.levels);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return l;
}

RunOptions run_options(const Loaded& l) {
  RunOptions ro;
  ro.threads = l.threads;
  ro.reuse = l.config.sample_reuse;
  ro.noise_level = l.config.recovery.noise_level;
  ro.solver.relative_tolerance = l.config.recovery.solver_tolerance;
  return ro;
}

// Writes the whole text or nothing.
void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  f.close();
  if (!f) {
    std::error_code ec;
    fs::remove(path, ec);
    throw std::runtime_error("failed writing '" + path.string() + "'");
  }
}

void print_schedule(std::ostream& os, const LevelSchedule& s, int n) {
  os << "l,label,h,s,N,m,units,lsq_advised\n";
  for (std::size_t l = 0; l < s.levels.size(); ++l) {
    const auto& lv = s.levels[l];
    os << lv.index << ',' << lv.label << ',' << fmt17(lv.h) << ',' << fmt17(lv.sparsity) << ','
       << lv.candidates.size() << ',' << lv.samples << ',' << fmt17(level_work(s, l, n)) << ','
       << (lv.least_squares_advised ? 1 : 0) << '\n';
  }
}

void log_run(std::ostream& err, const RunDiagnostics& d) {
  for (const auto& l : d.levels) {
    err << "level=" << l.level << " m=" << l.samples << " N=" << l.candidates << " residual=" << l.residual_norm
        << " iterations=" << l.iterations << " converged=" << (l.converged ? 1 : 0) << " solve_s=" << l.solve_seconds
        << " recovery_s=" << l.recovery_seconds << '\n';
    for (const auto& w : l.warnings) err << "level=" << l.level << " warning=\"" << w << "\"\n";
  }
  const double solve = d.solve_seconds(), rec = d.recovery_seconds();
  err << "solve_s=" << solve << " recovery_s=" << rec << " recovery_to_solve=" << (solve > 0 ? rec / solve : 0.0)
      << " pde_solves=" << d.pde_solves() << '\n';
}

int cmd_schedule(const Common& o, std::ostream& out) {
  const auto l = prepare(o);
  std::ostringstream ss;
  print_schedule(ss, l.schedule, l.problem.spatial_dim);
  out << ss.str();
  if (!o.out.empty()) write_file(o.out, ss.str());
  return kExitOk;
}

int cmd_run(const Common& o, std::ostream& err) {
  const auto l = prepare(o);
  RunDiagnostics diag;
  const auto s = run(l.problem, l.schedule, l.config.seed, l.config.recovery.algorithm, run_options(l), &diag);
  log_run(err, diag);
  std::ostringstream ss;
  write_surrogate(ss, s);
  write_file(o.out, ss.str());
  err << "surrogate=" << o.out << '\n';
  return kExitOk;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> y;
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw UsageError("malformed coordinate '" + tok + "'");
    y.push_back(v);
    tok.clear();
  };
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r')
      flush();
    else
      tok += ch;
  }
  flush();
  return y;
}

int cmd_eval(const std::string& surrogate, const std::vector<std::string>& ys, const std::string& yfile,
             std::ostream& out) {
  std::ifstream in(surrogate);
  if (!in) throw UsageError("cannot read surrogate '" + surrogate + "'");
  Surrogate s;
  try {
    s = read_surrogate(in);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::vector<std::vector<double>> points;
  for (const auto& y : ys) points.push_back(parse_point(y));
  if (!yfile.empty()) {
    std::ifstream f(yfile);
    if (!f) throw UsageError("cannot read point file '" + yfile + "'");
    std::string line;
    while (std::getline(f, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#' || std::isalpha(static_cast<unsigned char>(line[first])))
        continue;
      points.push_back(parse_point(line));
    }
  }
  if (points.empty()) throw UsageError("no evaluation points given (use --y or --y-file)");
  std::ostringstream ss;
  for (const auto& y : points) {
    if (y.size() != s.parameter_dim)
      throw UsageError("point has " + std::to_string(y.size()) + " coordinates, surrogate needs " +
                       std::to_string(s.parameter_dim));
    ss << fmt17(evaluate(s, y)) << '\n';
  }
  out << ss.str();
  return kExitOk;
}

CoefficientTable comparison(const Loaded& l, const Surrogate& sur) {
  CompareOptions co;
  const auto& b = *l.config.bench;
  co.cells = b.compare_cells ? b.compare_cells
                             : MeshHierarchy(l.problem.spatial_dim, l.config.schedule.h0, l.config.schedule.levels)
                                   .cells(l.config.schedule.levels - 1);
  co.mc_samples = b.mc_samples;
  co.multilevel = sur;
  co.seed = l.config.seed;
  co.threads = l.threads;
  return compare_coefficients(l.problem, l.schedule.levels.front().candidates, co);
}

int cmd_bench(const Common& o, std::ostream& out, std::ostream& err) {
  const auto l = prepare(o);
  if (!l.config.bench) throw ConfigError("bench requires a [bench] block");
  const auto& b = *l.config.bench;
  if (b.h0_sweep.size() < 3) throw ConfigError("bench.h0_sweep needs at least 3 values");
  for (double h0 : b.h0_sweep) MeshHierarchy(l.problem.spatial_dim, h0, l.config.schedule.levels);
  if (l.schedule.levels.front().candidates.empty()) throw ConfigError("schedule gives an empty candidate set");
  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(dir);

  ConvergenceOptions co;
  co.n_test = b.n_test;
  co.refinement = b.refinement;
  co.seed = l.config.seed;
  co.threads = l.threads;
  co.run = run_options(l);
  const auto study = convergence_study(l.problem, l.config.schedule, l.config.weights, b.h0_sweep,
                                       l.config.recovery.algorithm, co);
  RunDiagnostics diag;
  const auto sur = run(l.problem, l.schedule, l.config.seed, l.config.recovery.algorithm, run_options(l), &diag);
  log_run(err, diag);
  const auto table = comparison(l, sur);

  std::ostringstream conv, work, coeffs;
  write_convergence_csv(conv, study);
  write_work_csv(work, l.schedule, l.problem.spatial_dim);
  write_coeffs_csv(coeffs, table);
  std::vector<fs::path> written;
  try {
    for (auto [name, text] : {std::pair{"convergence.csv", conv.str()}, std::pair{"work.csv", work.str()},
                              std::pair{"coeffs.csv", coeffs.str()}}) {
      write_file(dir / name, text);
      written.push_back(dir / name);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  for (const auto& r : study.rows)
    err << "h0=" << r.h0 << " L1=" << r.errors.l1 << " L2=" << r.errors.l2 << " Linf=" << r.errors.linf << '\n';
  out << "slope=" << fmt17(study.l2_fit.slope) << " slope_linf=" << fmt17(study.linf_fit.slope)
      << " reliable=" << (study.l2_fit.reliable ? 1 : 0) << " work_units=" << fmt17(work_total(l.schedule, l.problem.spatial_dim))
      << '\n';
  return kExitOk;
}

int cmd_compare(const Common& o, std::ostream& out, std::ostream& err) {
  auto l = prepare(o);
  if (!l.config.bench) l.config.bench = BenchConfig{};
  RunDiagnostics diag;
  const auto sur = run(l.problem, l.schedule, l.config.seed, l.config.recovery.algorithm, run_options(l), &diag);
  log_run(err, diag);
  std::ostringstream ss;
  write_coeffs_csv(ss, comparison(l, sur));
  if (o.out.empty())
    out << ss.str();
  else
    write_file(o.out, ss.str());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-level compressed sensing Petrov-Galerkin surrogates"};
  app.require_subcommand(1);
  Common sched_o, run_o, bench_o, cmp_o;
  auto* sched = app.add_subcommand("schedule", "print the level schedule");
  add_common(sched, sched_o, false);
  auto* runc = app.add_subcommand("run", "build a surrogate");
  add_common(runc, run_o, true);
  auto* bench = app.add_subcommand("bench", "convergence, work and coefficient tables");
  add_common(bench, bench_o, false);
  auto* cmp = app.add_subcommand("compare", "coefficient comparison against least squares and Monte Carlo");
  add_common(cmp, cmp_o, false);

  std::string surrogate, yfile;
  std::vector<std::string> ys;
  auto* ev = app.add_subcommand("eval", "evaluate a surrogate");
  ev->add_option("surrogate", surrogate, "surrogate file")->required();
  ev->add_option("--y", ys, "point as comma-separated coordinates")->take_all();
  ev->add_option("--y-file", yfile, "file with one point per line");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Common* used = sched->parsed() ? &sched_o : runc->parsed() ? &run_o : bench->parsed() ? &bench_o : &cmp_o;
  try {
    if (sched->parsed()) return cmd_schedule(sched_o, out);
    if (runc->parsed()) return cmd_run(run_o, err);
    if (ev->parsed()) return cmd_eval(surrogate, ys, yfile, out);
    if (bench->parsed()) return cmd_bench(bench_o, out, err);
    return cmd_compare(cmp_o, out, err);
  } catch (const ConfigError& e) {
    err << "error=config message=\"" << e.what() << "\"\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error=usage message=\"" << e.what() << "\"\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error=domain message=\"" << e.what() << "\"\n";
    return kExitUsage;
  } catch (const InfiniteSet& e) {
    err << "error=config message=\"" << e.what() << "\"\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error=runtime message=\"" << e.what() << "\"" << (used->config.empty() ? "" : " config=" + used->config)
        << '\n';
    return kExitRuntime;
  }
}

}  // namespace mlcspg
