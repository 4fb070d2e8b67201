#include "mlcspg/multiindex.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mlcspg/errors.hpp"

namespace mlcspg {

MultiIndex::MultiIndex(std::vector<Entry> entries) {
  std::erase_if(entries, [](const Entry& e) { return e.second == 0; });
  std::sort(entries.begin(), entries.end());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].first == 0) throw std::invalid_argument("multi-index dimensions are 1-based");
    if (k > 0 && entries[k].first == entries[k - 1].first)
      throw std::invalid_argument("duplicate dimension in multi-index");
  }
  entries_ = std::move(entries);
}

MultiIndex MultiIndex::from_dense(std::span<const std::uint32_t> degrees) {
  std::vector<Entry> e;
  for (std::size_t k = 0; k < degrees.size(); ++k)
    if (degrees[k] != 0) e.emplace_back(static_cast<std::uint32_t>(k + 1), degrees[k]);
  MultiIndex nu;
  nu.entries_ = std::move(e);
  return nu;
}

MultiIndex MultiIndex::from_dense(std::initializer_list<std::uint32_t> degrees) {
  return from_dense(std::span<const std::uint32_t>(degrees.begin(), degrees.size()));
}

std::uint32_t MultiIndex::degree(std::uint32_t dim) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{dim, 0});
  return (it != entries_.end() && it->first == dim) ? it->second : 0;
}

std::uint64_t MultiIndex::total_degree() const noexcept {
  std::uint64_t t = 0;
  for (const auto& [j, k] : entries_) t += k;
  return t;
}

std::uint32_t MultiIndex::max_degree() const noexcept {
  std::uint32_t m = 0;
  for (const auto& [j, k] : entries_) m = std::max(m, k);
  return m;
}

bool MultiIndex::dominated_by(const MultiIndex& other) const noexcept {
  for (const auto& [j, k] : entries_)
    if (other.degree(j) < k) return false;
  return true;
}

bool canonical_less(const MultiIndex& a, const MultiIndex& b) noexcept {
  const auto ta = a.total_degree(), tb = b.total_degree();
  if (ta != tb) return ta < tb;
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0, k = 0;
  while (i < ea.size() && k < eb.size()) {
    if (ea[i].first == eb[k].first) {
      if (ea[i].second != eb[k].second) return ea[i].second > eb[k].second;
      ++i;
      ++k;
    } else {
      return ea[i].first < eb[k].first;
    }
  }
  return i < ea.size();
}

void sort_canonical(std::vector<MultiIndex>& set) {
  std::sort(set.begin(), set.end(), canonical_less);
}

std::string to_string(const MultiIndex& nu) {
  std::string out;
  for (const auto& [j, k] : nu.entries()) {
    if (!out.empty()) out += ';';
    out += std::to_string(j);
    out += ':';
    out += std::to_string(k);
  }
  return out;
}

namespace {

std::uint32_t parse_u32(std::string_view s, std::string_view whole) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("malformed multi-index '" + std::string(whole) + "'");
  return v;
}

}  // namespace

MultiIndex parse_multiindex(std::string_view text) {
  std::vector<MultiIndex::Entry> entries;
  if (text.empty()) return MultiIndex{};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    auto item = text.substr(pos, end - pos);
    auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw std::invalid_argument("malformed multi-index '" + std::string(text) + "'");
    auto j = parse_u32(item.substr(0, colon), text);
    auto k = parse_u32(item.substr(colon + 1), text);
    if (j == 0 || k == 0 || (!entries.empty() && entries.back().first >= j))
      throw std::invalid_argument("non-canonical multi-index '" + std::string(text) + "'");
    entries.emplace_back(j, k);
    pos = end + 1;
  }
  return MultiIndex(std::move(entries));
}

// ---------------------------------------------------------------------------

WeightConfig WeightConfig::constant(double beta, std::size_t d, double theta) {
  WeightConfig w;
  w.kind = Kind::constant;
  w.beta = beta;
  w.active_dims = d;
  w.theta = theta;
  return w;
}

WeightConfig WeightConfig::polynomial(double c, double alpha, double theta) {
  WeightConfig w;
  w.kind = Kind::polynomial;
  w.c = c;
  w.alpha = alpha;
  w.theta = theta;
  return w;
}

WeightConfig WeightConfig::explicit_list(std::vector<double> v, double theta) {
  WeightConfig w;
  w.kind = Kind::explicit_list;
  w.values = std::move(v);
  w.theta = theta;
  return w;
}

double WeightConfig::v(std::size_t j) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (j == 0) throw std::invalid_argument("weight dimensions are 1-based");
  switch (kind) {
    case Kind::constant:
      return j <= active_dims ? beta : inf;
    case Kind::polynomial:
      return c * std::pow(static_cast<double>(j), alpha);
    case Kind::explicit_list:
      return j <= values.size() ? values[j - 1] : inf;
  }
  return inf;
}

std::optional<std::size_t> WeightConfig::finite_dims() const {
  switch (kind) {
    case Kind::constant:
      return active_dims;
    case Kind::polynomial:
      return std::nullopt;
    case Kind::explicit_list:
      return values.size();
  }
  return std::nullopt;
}

void WeightConfig::validate() const {
  if (!(theta >= 1.0) || !std::isfinite(theta)) throw std::invalid_argument("weights: theta must be >= 1");
  switch (kind) {
    case Kind::constant:
      if (!(beta >= 1.0) || !std::isfinite(beta)) throw std::invalid_argument("weights: beta must be >= 1");
      break;
    case Kind::polynomial:
      if (!(c >= 1.0) || !std::isfinite(c)) throw std::invalid_argument("weights: c must be >= 1");
      if (!(alpha > 0.0)) throw std::invalid_argument("weights: alpha must be > 0");
      break;
    case Kind::explicit_list:
      for (double x : values)
        if (!(x >= 1.0)) throw std::invalid_argument("weights: every v_j must be >= 1");
      break;
  }
}

void WeightConfig::require_finite_candidate_sets() const {
  validate();
  switch (kind) {
    case Kind::constant:
      if (!(beta > 1.0))
        throw InfiniteSet("candidate set is infinite: constant weights need beta > 1");
      break;
    case Kind::polynomial:
      if (!(c > 1.0)) throw InfiniteSet("candidate set is infinite: polynomial weights need c > 1");
      break;
    case Kind::explicit_list:
      for (double x : values)
        if (std::isfinite(x) && !(x > 1.0))
          throw InfiniteSet("candidate set is infinite: explicit weights need every v_j > 1");
      break;
  }
}

std::string to_string(const WeightConfig& w) {
  std::ostringstream os;
  os.precision(17);
  switch (w.kind) {
    case WeightConfig::Kind::constant:
      os << "constant(beta=" << w.beta << ",d=" << w.active_dims << ")";
      break;
    case WeightConfig::Kind::polynomial:
      os << "polynomial(c=" << w.c << ",alpha=" << w.alpha << ")";
      break;
    case WeightConfig::Kind::explicit_list:
      os << "explicit(";
      for (std::size_t k = 0; k < w.values.size(); ++k) os << (k ? ";" : "") << w.values[k];
      os << ")";
      break;
  }
  os << ",theta=" << w.theta;
  return os.str();
}

double weight_of(const MultiIndex& nu, const WeightConfig& w) {
  double omega = 1.0;
  for (const auto& [j, k] : nu.entries()) {
    const double vj = w.v(j);
    if (!std::isfinite(vj)) return std::numeric_limits<double>::infinity();
    omega *= w.theta * std::pow(vj, static_cast<double>(k));
  }
  return omega;
}

namespace {

struct Enumerator {
  const WeightConfig& w;
  std::size_t dim_limit;  // 0 = unbounded
  bool monotone;          // v_j nondecreasing in j: a failed activation rules out later dims
  double log_theta2;
  std::vector<MultiIndex::Entry> current;
  std::vector<MultiIndex> out;

  static constexpr double slack = 1e-12;

  void extend(std::size_t first_dim, double budget) {
    out.emplace_back(current);
    for (std::size_t j = first_dim; dim_limit == 0 || j <= dim_limit; ++j) {
      const double vj = w.v(j);
      if (!std::isfinite(vj)) {
        if (monotone) break;
        continue;
      }
      const double log_v2 = 2.0 * std::log(vj);
      if (log_theta2 + log_v2 > budget + slack) {
        if (monotone) break;
        continue;
      }
      for (std::uint32_t k = 1;; ++k) {
        const double cost = log_theta2 + k * log_v2;
        if (cost > budget + slack) break;
        current.emplace_back(static_cast<std::uint32_t>(j), k);
        extend(j + 1, budget - cost);
        current.pop_back();
      }
    }
  }
};

}  // namespace

std::vector<MultiIndex> enumerate_candidate_set(const WeightConfig& w, double s,
                                                std::optional<std::size_t> max_dim) {
  w.require_finite_candidate_sets();
  if (!(s > 0.0)) return {};
  const double budget = std::log(s / 2.0);
  if (budget < -Enumerator::slack) return {};

  std::size_t limit = 0;
  if (auto fd = w.finite_dims()) limit = *fd;
  if (max_dim) limit = limit == 0 ? *max_dim : std::min(limit, *max_dim);
  if (limit == 0 && w.kind != WeightConfig::Kind::polynomial) return {MultiIndex{}};

  Enumerator e{w, limit, w.kind != WeightConfig::Kind::explicit_list, 2.0 * std::log(w.theta), {}, {}};
  e.extend(1, budget);
  sort_canonical(e.out);
  return std::move(e.out);
}

double weighted_sparsity(const WeightedVector& x, const WeightConfig& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x.values[k] == 0.0) continue;
    const double om = weight_of(x.support[k], w);
    s += om * om;
  }
  return s;
}

double weighted_lp_norm(const WeightedVector& x, const WeightConfig& w, double p) {
  if (!(p > 0.0 && p <= 2.0)) throw std::invalid_argument("weighted_lp_norm: p must lie in (0, 2]");
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x.values[k] == 0.0) continue;
    const double om = weight_of(x.support[k], w);
    acc += std::pow(om, 2.0 - p) * std::pow(std::abs(x.values[k]), p);
  }
  return std::pow(acc, 1.0 / p);
}

std::vector<std::size_t> greedy_weighted_selection(std::span<const double> values,
                                                   std::span<const double> weights, double s) {
  std::vector<std::size_t> order;
  order.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    if (values[k] != 0.0) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(values[a]) / weights[a] > std::abs(values[b]) / weights[b];
  });

  std::vector<std::size_t> chosen;
  const double cap = s * (1.0 + 1e-12);
  double used = 0.0;
  for (std::size_t k : order) {
    const double cost = weights[k] * weights[k];
    if (used + cost <= cap) {
      chosen.push_back(k);
      used += cost;
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

SelectionResult best_weighted_s_term(const WeightedVector& x, const WeightConfig& w, double s) {
  if (s < 0.0) throw std::invalid_argument("best_weighted_s_term: s must be >= 0");
  std::vector<double> om(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) om[k] = weight_of(x.support[k], w);

  SelectionResult r;
  r.support = greedy_weighted_selection(x.values, om, s);
  std::vector<char> kept(x.size(), 0);
  for (auto k : r.support) kept[k] = 1;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (!kept[k]) r.residual += om[k] * std::abs(x.values[k]);
  return r;
}

}  // namespace mlcspg

namespace mlcspg {

namespace {

double parse_double(std::string_view t) {
  std::string s(t);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::string_view after_key(std::string_view field, std::string_view key) {
  if (field.substr(0, key.size()) != key || field.size() <= key.size() || field[key.size()] != '=')
    throw std::invalid_argument("expected '" + std::string(key) + "=' in weight config");
  return field.substr(key.size() + 1);
}

}  // namespace

WeightConfig parse_weight_config(std::string_view text) {
  const auto open = text.find('(');
  const auto close = text.find(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw std::invalid_argument("malformed weight config '" + std::string(text) + "'");
  const auto kind = text.substr(0, open);
  const auto inner = text.substr(open + 1, close - open - 1);
  auto tail = text.substr(close + 1);
  if (tail.empty() || tail[0] != ',') throw std::invalid_argument("weight config lacks theta");
  const double theta = parse_double(after_key(tail.substr(1), "theta"));
  auto split = [](std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto pos = s.find(sep, start);
      parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return parts;
  };
  if (kind == "constant") {
    const auto f = split(inner, ',');
    if (f.size() != 2) throw std::invalid_argument("constant weights need beta and d");
    return WeightConfig::constant(parse_double(after_key(f[0], "beta")),
                                  static_cast<std::size_t>(parse_double(after_key(f[1], "d"))), theta);
  }
  if (kind == "polynomial") {
    const auto f = split(inner, ',');
    if (f.size() != 2) throw std::invalid_argument("polynomial weights need c and alpha");
    return WeightConfig::polynomial(parse_double(after_key(f[0], "c")), parse_double(after_key(f[1], "alpha")),
                                    theta);
  }
  if (kind == "explicit") {
    std::vector<double> v;
    if (!inner.empty())
      for (auto part : split(inner, ';')) v.push_back(parse_double(part));
    return WeightConfig::explicit_list(std::move(v), theta);
  }
  throw std::invalid_argument("unknown weight kind '" + std::string(kind) + "'");
}

}  // namespace mlcspg
