#include "mlcspg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "mlcspg/errors.hpp"

namespace mlcspg {

ParametricProblem ProblemConfig::build() const {
  ParametricProblem p;
  p.spatial_dim = spatial_dim;
  p.mean_field = ScalarField::constant(mean);
  p.forcing = ScalarField::constant(forcing);
  p.qoi_weight = ScalarField::constant(qoi_weight);
  if (fluctuation == "none")
    p.fluctuations = Fluctuations::none();
  else if (fluctuation == "cosine")
    p.fluctuations = Fluctuations::cosine(mu, terms);
  else if (fluctuation == "patchwise")
    p.fluctuations = Fluctuations::patchwise(amplitudes);
  else
    throw std::invalid_argument("problem: fluctuation must be none, cosine or patchwise");
  return p;
}

namespace {

void require_mesh(double h0) {
  const double n = 1.0 / h0;
  if (!(h0 > 0.0) || std::abs(n - std::round(n)) > 1e-9 * n)
    throw std::invalid_argument("schedule: 1/h0 must be an integer");
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    const auto p = problem.build();
    p.validate();
    weights.validate();
    weights.require_finite_candidate_sets();
    schedule.validate();
    require_mesh(schedule.h0);
    if (recovery.noise_level && *recovery.noise_level < 0.0)
      throw std::invalid_argument("recovery: noise_level must be >= 0");
    if (!(recovery.solver_tolerance > 0.0)) throw std::invalid_argument("recovery: solver_tolerance must be > 0");
    if (bench) {
      if (bench->n_test < 1) throw std::invalid_argument("bench: n_test must be >= 1");
      if (bench->refinement < 4) throw std::invalid_argument("bench: refinement must be >= 4");
      for (double h : bench->h0_sweep) require_mesh(h);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

namespace {

std::size_t line_of(const toml::node& n) { return n.source().begin.line; }

// Typed access to one block; type errors carry the line of the offending key.
class Block {
 public:
  Block(const toml::table* t, std::string name, std::size_t line) : t_(t), name_(std::move(name)), line_(line) {}

  bool present() const { return t_ != nullptr; }
  std::size_t line() const { return line_; }
  std::size_t line(std::string_view key) const {
    if (t_)
      if (auto n = t_->get(key)) return line_of(*n);
    return line_;
  }

  const toml::node* node(std::string_view key) const { return t_ ? t_->get(key) : nullptr; }

  double real(std::string_view key, double fallback) const {
    auto n = node(key);
    if (!n) return fallback;
    if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
    throw bad(key, *n, "a number");
  }

  std::optional<double> optional_real(std::string_view key) const {
    if (!node(key)) return std::nullopt;
    return real(key, 0.0);
  }

  std::size_t count(std::string_view key, std::size_t fallback) const {
    auto n = node(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<std::int64_t>(); v && *v >= 0) return static_cast<std::size_t>(*v);
    throw bad(key, *n, "a nonnegative integer");
  }

  std::uint64_t u64(std::string_view key, std::uint64_t fallback) const {
    auto n = node(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<std::int64_t>(); v && *v >= 0) return static_cast<std::uint64_t>(*v);
    if (auto s = n->value_exact<std::string>()) {
      try {
        std::size_t pos = 0;
        const auto v2 = std::stoull(*s, &pos);
        if (pos == s->size()) return v2;
      } catch (const std::exception&) {
      }
    }
    throw bad(key, *n, "an unsigned 64-bit integer");
  }

  std::string text(std::string_view key, std::string fallback) const {
    auto n = node(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<std::string>()) return *v;
    throw bad(key, *n, "a string");
  }

  std::vector<double> reals(std::string_view key, std::vector<double> fallback) const {
    auto n = node(key);
    if (!n) return fallback;
    auto arr = n->as_array();
    if (!arr) throw bad(key, *n, "an array of numbers");
    std::vector<double> out;
    for (auto& e : *arr) {
      auto v = e.value<double>();
      if (!v || !(e.is_floating_point() || e.is_integer())) throw bad(key, *n, "an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<std::size_t> counts(std::string_view key, std::vector<std::size_t> fallback) const {
    auto n = node(key);
    if (!n) return fallback;
    auto arr = n->as_array();
    if (!arr) throw bad(key, *n, "an array of integers");
    std::vector<std::size_t> out;
    for (auto& e : *arr) {
      auto v = e.value_exact<std::int64_t>();
      if (!v || *v < 0) throw bad(key, *n, "an array of nonnegative integers");
      out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
  }

  void reject_unknown(const std::set<std::string, std::less<>>& allowed) const {
    if (!t_) return;
    for (auto&& [k, v] : *t_)
      if (!allowed.count(k.str()))
        throw ConfigError("unknown key '" + name_ + "." + std::string(k.str()) + "'", line_of(v));
  }

  // Wraps a check so that failures carry the line of `key`.
  template <class F>
  void check(std::string_view key, F&& f) const {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what(), line(key));
    }
  }

 private:
  ConfigError bad(std::string_view key, const toml::node& n, const char* what) const {
    return ConfigError(name_ + "." + std::string(key) + " must be " + what, line_of(n));
  }

  const toml::table* t_;
  std::string name_;
  std::size_t line_;
};

void apply_override(toml::table& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("--set expects block.key=value, got '" + assignment + "'");
  const std::string block = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string value = assignment.substr(eq + 1);
  if (block.empty() || key.empty() || key.find('.') != std::string::npos)
    throw ConfigError("--set expects block.key=value, got '" + assignment + "'");

  toml::table parsed;
  try {
    parsed = toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    parsed = toml::table{};
    parsed.insert("v", value);
  }
  if (!root.contains(block)) root.insert(block, toml::table{});
  auto* t = root.get_as<toml::table>(block);
  if (!t) throw ConfigError("--set: '" + block + "' is not a block");
  parsed.get("v")->visit([&](auto&& n) { t->insert_or_assign(key, n); });
}

const toml::table* sub(const toml::table& root, const char* name, std::size_t& line) {
  auto n = root.get(name);
  line = 0;
  if (!n) return nullptr;
  line = line_of(*n);
  auto t = n->as_table();
  if (!t) throw ConfigError(std::string("'") + name + "' must be a block", line);
  return t;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(e.description()), e.source().begin.line);
  }
  for (const auto& o : overrides) apply_override(root, o);

  const std::set<std::string, std::less<>> blocks{"problem", "weights", "schedule", "recovery", "bench"};
  for (auto&& [k, v] : root)
    if (!blocks.count(k.str())) throw ConfigError("unknown block '" + std::string(k.str()) + "'", line_of(v));

  ExperimentConfig c;
  std::size_t line = 0;

  const Block pb(sub(root, "problem", line), "problem", line);
  if (!pb.present()) throw ConfigError("missing [problem] block");
  pb.reject_unknown({"spatial_dim", "mean", "forcing", "qoi_weight", "fluctuation", "mu", "terms", "amplitudes",
                     "patches", "amplitude"});
  auto& pc = c.problem;
  pc.spatial_dim = static_cast<int>(pb.count("spatial_dim", 1));
  pc.mean = pb.real("mean", 1.0);
  pc.forcing = pb.real("forcing", 1.0);
  pc.qoi_weight = pb.real("qoi_weight", 1.0);
  pc.fluctuation = pb.text("fluctuation", "none");
  pc.mu = pb.real("mu", 2.0);
  pc.terms = pb.count("terms", 0);
  pc.amplitudes = pb.reals("amplitudes", {});
  if (pb.node("patches")) {
    if (pb.node("amplitudes")) throw ConfigError("give either problem.amplitudes or problem.patches", pb.line("patches"));
    pc.amplitudes.assign(pb.count("patches", 0), pb.real("amplitude", 0.0));
  } else if (pb.node("amplitude")) {
    throw ConfigError("problem.amplitude requires problem.patches", pb.line("amplitude"));
  }
  pb.check("fluctuation", [&] { pc.build().validate(); });
  const std::size_t d = pc.build().parameter_dim();

  const Block wb(sub(root, "weights", line), "weights", line);
  wb.reject_unknown({"kind", "beta", "active_dims", "c", "alpha", "values", "theta"});
  const std::string kind = wb.text("kind", "constant");
  const double theta = wb.real("theta", WeightConfig{}.theta);
  if (kind == "constant")
    c.weights = WeightConfig::constant(wb.real("beta", WeightConfig{}.beta), wb.count("active_dims", d), theta);
  else if (kind == "polynomial")
    c.weights = WeightConfig::polynomial(wb.real("c", 2.0), wb.real("alpha", 1.0), theta);
  else if (kind == "explicit")
    c.weights = WeightConfig::explicit_list(wb.reals("values", {}), theta);
  else
    throw ConfigError("weights.kind must be constant, polynomial or explicit", wb.line("kind"));
  wb.check(kind == "constant" ? "beta" : kind == "polynomial" ? "c" : "values", [&] {
    c.weights.validate();
    c.weights.require_finite_candidate_sets();
  });

  const Block sb(sub(root, "schedule", line), "schedule", line);
  sb.reject_unknown({"L", "h0", "C_s", "sigma", "sample_rule", "c0", "gamma", "seed", "sample_reuse"});
  auto& sp = c.schedule;
  sp.levels = sb.count("L", sp.levels);
  sp.h0 = sb.real("h0", sp.h0);
  sp.sparsity_constant = sb.real("C_s", sp.sparsity_constant);
  sp.sigma = sb.real("sigma", sp.sigma);
  sb.check("sample_rule", [&] { sp.rule = parse_sample_rule(sb.text("sample_rule", "practical")); });
  sp.c0 = sb.real("c0", sp.c0);
  sp.gamma = sb.real("gamma", sp.gamma);
  c.seed = sb.u64("seed", 1);
  const std::string reuse = sb.text("sample_reuse", "fresh");
  if (reuse == "fresh")
    c.sample_reuse = SampleReuse::fresh;
  else if (reuse == "nested")
    c.sample_reuse = SampleReuse::nested;
  else
    throw ConfigError("schedule.sample_reuse must be fresh or nested", sb.line("sample_reuse"));
  sb.check("L", [&] { sp.validate(); });
  sb.check("h0", [&] { require_mesh(sp.h0); });

  const Block rb(sub(root, "recovery", line), "recovery", line);
  rb.reject_unknown({"algorithm", "noise_level", "solver_tolerance"});
  rb.check("algorithm", [&] { c.recovery.algorithm = parse_algorithm(rb.text("algorithm", "womp")); });
  c.recovery.noise_level = rb.optional_real("noise_level");
  c.recovery.solver_tolerance = rb.real("solver_tolerance", 1e-10);

  const Block bb(sub(root, "bench", line), "bench", line);
  if (bb.present()) {
    bb.reject_unknown({"n_test", "refinement", "h0_sweep", "mc_samples", "compare_cells"});
    BenchConfig b;
    b.n_test = bb.count("n_test", b.n_test);
    b.refinement = bb.count("refinement", b.refinement);
    b.h0_sweep = bb.reals("h0_sweep", {});
    b.mc_samples = bb.counts("mc_samples", b.mc_samples);
    b.compare_cells = bb.count("compare_cells", 0);
    c.bench = b;
  }

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(std::string_view s) { return "\"" + std::string(s) + "\""; }

template <class T, class F>
std::string list(const std::vector<T>& v, F f) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + f(v[k]);
  return s + "]";
}

}  // namespace

void save_config(std::ostream& os, const ExperimentConfig& c) {
  const auto& p = c.problem;
  os << "[problem]\n";
  os << "spatial_dim = " << p.spatial_dim << '\n';
  os << "mean = " << num(p.mean) << '\n';
  os << "forcing = " << num(p.forcing) << '\n';
  os << "qoi_weight = " << num(p.qoi_weight) << '\n';
  os << "fluctuation = " << quoted(p.fluctuation) << '\n';
  os << "mu = " << num(p.mu) << '\n';
  os << "terms = " << p.terms << '\n';
  os << "amplitudes = " << list(p.amplitudes, num) << "\n\n";

  const auto& w = c.weights;
  os << "[weights]\n";
  switch (w.kind) {
    case WeightConfig::Kind::constant:
      os << "kind = \"constant\"\nbeta = " << num(w.beta) << "\nactive_dims = " << w.active_dims << '\n';
      break;
    case WeightConfig::Kind::polynomial:
      os << "kind = \"polynomial\"\nc = " << num(w.c) << "\nalpha = " << num(w.alpha) << '\n';
      break;
    case WeightConfig::Kind::explicit_list:
      os << "kind = \"explicit\"\nvalues = " << list(w.values, num) << '\n';
      break;
  }
  os << "theta = " << num(w.theta) << "\n\n";

  const auto& s = c.schedule;
  os << "[schedule]\n";
  os << "L = " << s.levels << '\n';
  os << "h0 = " << num(s.h0) << '\n';
  os << "C_s = " << num(s.sparsity_constant) << '\n';
  os << "sigma = " << num(s.sigma) << '\n';
  os << "sample_rule = " << quoted(to_string(s.rule)) << '\n';
  os << "c0 = " << num(s.c0) << '\n';
  os << "gamma = " << num(s.gamma) << '\n';
  // TOML integers are signed 64-bit
  if (c.seed <= static_cast<std::uint64_t>(INT64_MAX))
    os << "seed = " << c.seed << '\n';
  else
    os << "seed = \"" << c.seed << "\"\n";
  os << "sample_reuse = " << quoted(c.sample_reuse == SampleReuse::fresh ? "fresh" : "nested") << "\n\n";

  os << "[recovery]\n";
  os << "algorithm = " << quoted(to_string(c.recovery.algorithm)) << '\n';
  if (c.recovery.noise_level) os << "noise_level = " << num(*c.recovery.noise_level) << '\n';
  os << "solver_tolerance = " << num(c.recovery.solver_tolerance) << '\n';

  if (c.bench) {
    const auto& b = *c.bench;
    os << "\n[bench]\n";
    os << "n_test = " << b.n_test << '\n';
    os << "refinement = " << b.refinement << '\n';
    os << "h0_sweep = " << list(b.h0_sweep, num) << '\n';
    os << "mc_samples = " << list(b.mc_samples, [](std::size_t v) { return std::to_string(v); }) << '\n';
    os << "compare_cells = " << b.compare_cells << '\n';
  }
}

}  // namespace mlcspg
