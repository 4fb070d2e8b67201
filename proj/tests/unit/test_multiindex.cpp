#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <set>

#include "mlcspg/errors.hpp"
#include "mlcspg/multiindex.hpp"

using namespace mlcspg;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// All dense degree vectors in {0..box}^d with omega^2 <= s/2, by brute force.
std::set<MultiIndex> brute_force_box(const WeightConfig& w, double s, std::size_t d, std::uint32_t box) {
  std::set<MultiIndex> out;
  std::vector<std::uint32_t> deg(d, 0);
  while (true) {
    const auto nu = MultiIndex::from_dense(deg);
    const double om = weight_of(nu, w);
    if (om * om <= s / 2 * (1 + 1e-12)) out.insert(nu);
    std::size_t k = 0;
    while (k < d && deg[k] == box) deg[k++] = 0;
    if (k == d) break;
    ++deg[k];
  }
  return out;
}

// All indices of total degree <= K in d dimensions (odometer over compositions).
std::size_t brute_force_total_degree(const WeightConfig& w, double s, std::size_t d, std::uint32_t K) {
  std::size_t count = 0;
  std::vector<std::uint32_t> deg(d, 0);
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t j, std::uint32_t left) {
    if (j == d) {
      const double om = weight_of(MultiIndex::from_dense(deg), w);
      if (om * om <= s / 2 * (1 + 1e-12)) ++count;
      return;
    }
    for (std::uint32_t k = 0; k <= left; ++k) {
      deg[j] = k;
      rec(j + 1, left - k);
    }
    deg[j] = 0;
  };
  rec(0, K);
  return count;
}

double cardinality_bound(double beta, std::size_t d, double s) {
  const double b2 = beta * beta;
  const double dd = static_cast<double>(d);
  if (s < std::pow(2.0, dd + 1) * std::pow(b2, dd))
    return std::pow((1.0 + 1.0 / std::log2(b2)) * std::exp(1.0) * dd, std::log(s / 2) / std::log(2 * b2));
  return std::pow(std::log(b2 * s / 2) / std::log(b2), dd);
}

}  // namespace

TEST_CASE("multi-index storage is canonical") {
  const MultiIndex a({{3, 1}, {1, 2}});
  const auto b = MultiIndex::from_dense({2, 0, 1});
  CHECK(a == b);
  CHECK(a.degree(1) == 2);
  CHECK(a.degree(2) == 0);
  CHECK(a.support_size() == 2);
  CHECK(a.total_degree() == 3);
  CHECK(a.max_dim() == 3);
  CHECK(MultiIndex::from_dense({0, 0, 0}).is_zero());
  CHECK(MultiIndex({{2, 0}}) == MultiIndex());
  CHECK_THROWS_AS(MultiIndex({{0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(MultiIndex({{1, 1}, {1, 2}}), std::invalid_argument);
  CHECK(MultiIndex::from_dense({1, 0}).dominated_by(MultiIndex::from_dense({1, 1})));
  CHECK_FALSE(MultiIndex::from_dense({2, 0}).dominated_by(MultiIndex::from_dense({1, 1})));
}

TEST_CASE("text serialization round-trips") {
  CHECK(to_string(MultiIndex()) == "");
  CHECK(to_string(MultiIndex::from_dense({2, 0, 1})) == "1:2;3:1");
  for (const char* t : {"", "1:2", "1:2;3:1", "4:10;12:1"}) CHECK(to_string(parse_multiindex(t)) == t);
  for (const char* bad : {"1", "1:", ":1", "1:0", "2:1;1:1", "1:1;1:2", "a:1", "1:1;"})
    CHECK_THROWS_AS(parse_multiindex(bad), std::invalid_argument);
}

TEST_CASE("canonical order") {
  std::vector<MultiIndex> v{MultiIndex::from_dense({0, 2}), MultiIndex::from_dense({1, 1}), MultiIndex(),
                            MultiIndex::from_dense({0, 1}), MultiIndex::from_dense({2, 0}),
                            MultiIndex::from_dense({1, 0})};
  sort_canonical(v);
  const std::vector<MultiIndex> expect{MultiIndex(),
                                       MultiIndex::from_dense({1, 0}),
                                       MultiIndex::from_dense({0, 1}),
                                       MultiIndex::from_dense({2, 0}),
                                       MultiIndex::from_dense({1, 1}),
                                       MultiIndex::from_dense({0, 2})};
  CHECK(v == expect);
}

TEST_CASE("weight_of") {
  CHECK(weight_of(MultiIndex(), WeightConfig::constant(1.5, 3)) == 1.0);
  CHECK(weight_of(MultiIndex::from_dense({2, 0, 1}), WeightConfig::constant(1.08, 3, 1.0)) ==
        doctest::Approx(1.259712).epsilon(1e-12));
  CHECK(weight_of(MultiIndex::from_dense({1, 1}), WeightConfig::constant(2.0, 2, 2.0)) == doctest::Approx(16.0));
  CHECK(std::isinf(weight_of(MultiIndex::from_dense({0, 0, 1}), WeightConfig::constant(2.0, 2))));
  const auto poly = WeightConfig::polynomial(2.0, 1.0, 1.0);
  CHECK(weight_of(MultiIndex::from_dense({0, 0, 1}), poly) == doctest::Approx(6.0));
  const auto ex = WeightConfig::explicit_list({1.5, 3.0}, 1.0);
  CHECK(weight_of(MultiIndex::from_dense({1, 1}), ex) == doctest::Approx(4.5));
  CHECK(std::isinf(ex.v(3)));
}

TEST_CASE("weights multiply over disjoint supports") {
  const auto w = WeightConfig::polynomial(1.3, 0.7);
  const auto a = MultiIndex::from_dense({2, 0, 1});
  const auto b = MultiIndex::from_dense({0, 3, 0, 0, 2});
  const auto ab = MultiIndex::from_dense({2, 3, 1, 0, 2});
  CHECK(weight_of(ab, w) == doctest::Approx(weight_of(a, w) * weight_of(b, w)).epsilon(1e-13));
}

TEST_CASE("weight config validation") {
  CHECK_THROWS_AS(WeightConfig::constant(0.5, 2).validate(), std::invalid_argument);
  CHECK_THROWS_AS(WeightConfig::constant(1.5, 2, 0.9).validate(), std::invalid_argument);
  CHECK_THROWS_AS(WeightConfig::polynomial(2.0, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(WeightConfig::explicit_list({1.2, 0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(WeightConfig::constant(1.0, 2, 1.0).require_finite_candidate_sets(), InfiniteSet);
  CHECK_THROWS_AS(WeightConfig::polynomial(1.0, 1.0).require_finite_candidate_sets(), InfiniteSet);
  CHECK_THROWS_AS(WeightConfig::explicit_list({1.2, 1.0}).require_finite_candidate_sets(), InfiniteSet);
  CHECK_NOTHROW(WeightConfig::constant(1.08, 9).require_finite_candidate_sets());
  CHECK_THROWS_AS(enumerate_candidate_set(WeightConfig::constant(1.0, 2, 1.0), 8), InfiniteSet);
}

TEST_CASE("weight config text round-trips") {
  for (const auto& w : {WeightConfig::constant(1.08, 9), WeightConfig::polynomial(2.5, 1.25, 1.0),
                        WeightConfig::explicit_list({1.1, 2.0, 3.0 / 7.0 + 1.0}), WeightConfig::explicit_list({})})
    CHECK(parse_weight_config(to_string(w)) == w);
  CHECK_THROWS_AS(parse_weight_config("square(beta=2)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_weight_config("constant(beta=2,d=3)"), std::invalid_argument);
}

TEST_CASE("candidate set: exhaustive 2D example") {
  const auto w = WeightConfig::constant(2.0, 2, 1.0);
  const auto got = enumerate_candidate_set(w, 32);
  const std::vector<MultiIndex> expect{MultiIndex(),
                                       MultiIndex::from_dense({1, 0}),
                                       MultiIndex::from_dense({0, 1}),
                                       MultiIndex::from_dense({2, 0}),
                                       MultiIndex::from_dense({1, 1}),
                                       MultiIndex::from_dense({0, 2})};
  CHECK(got == expect);
  const auto box = brute_force_box(w, 32, 2, 4);
  CHECK(std::set<MultiIndex>(got.begin(), got.end()) == box);
}

TEST_CASE("candidate set: degenerate budgets") {
  CHECK(enumerate_candidate_set(WeightConfig::constant(1.5, 4, 1.0), 2) == std::vector<MultiIndex>{MultiIndex()});
  CHECK(enumerate_candidate_set(WeightConfig::constant(1.5, 4), 2) == std::vector<MultiIndex>{MultiIndex()});
  CHECK(enumerate_candidate_set(WeightConfig::constant(1.5, 4), 1.5).empty());
}

TEST_CASE("candidate set: d = 9 against brute force") {
  const auto w = WeightConfig::constant(1.08, 9);
  const auto got = enumerate_candidate_set(w, 64);
  // each unit of total degree costs at least 1.08^2, and any active index at least theta^2 = 2
  const auto K = static_cast<std::uint32_t>(std::floor(std::log(16.0) / (2 * std::log(1.08))));
  CHECK(got.size() == brute_force_total_degree(w, 64, 9, K));
  CHECK(got.size() == 10153);
}

TEST_CASE("candidate set: brute force on random configurations") {
  struct Case {
    WeightConfig w;
    double s;
    std::size_t d;
    std::uint32_t box;
  };
  const std::vector<Case> cases{{WeightConfig::constant(1.3, 3), 40, 3, 12},
                                {WeightConfig::polynomial(1.2, 1.0), 30, 4, 10},
                                {WeightConfig::explicit_list({1.1, 1.5, 2.5}, 1.0), 50, 3, 20},
                                {WeightConfig::constant(1.05, 2, 1.2), 20, 2, 40}};
  for (const auto& c : cases) {
    const auto got = enumerate_candidate_set(c.w, c.s, c.d);
    CHECK(std::set<MultiIndex>(got.begin(), got.end()) == brute_force_box(c.w, c.s, c.d, c.box));
    CHECK(std::is_sorted(got.begin(), got.end(), canonical_less));
  }
}

TEST_CASE("candidate set: cardinality anchors") {
  // v = 1.1, theta = sqrt(2)
  const std::vector<std::pair<std::size_t, std::array<std::size_t, 3>>> rows{
      {9, {4687, 931, 172}}, {16, {25225, 3241, 473}}, {25, {94351, 8851, 1076}}, {36, {278755, 20731, 2143}}};
  for (const auto& [d, n] : rows) {
    const auto w = WeightConfig::constant(1.1, d);
    CHECK(enumerate_candidate_set(w, 64).size() == n[0]);
    CHECK(enumerate_candidate_set(w, 32).size() == n[1]);
    CHECK(enumerate_candidate_set(w, 16).size() == n[2]);
  }
  // v = 1.07, d = 6
  const auto w6 = WeightConfig::constant(1.07, 6);
  const std::vector<std::pair<double, std::size_t>> anchors{{120, 12171}, {60, 3181}, {30, 705},
                                                            {40, 1328},  {20, 292},  {10, 37}};
  for (const auto& [s, n] : anchors) CHECK(enumerate_candidate_set(w6, s).size() == n);
}

TEST_CASE("candidate set: closed-form cardinality bound") {
  for (double beta : {1.05, 1.1, 1.5, 2.0})
    for (std::size_t d : {2, 4, 6, 9})
      for (double s : {4.0, 16.0, 64.0, 256.0}) {
        const auto n = enumerate_candidate_set(WeightConfig::constant(beta, d, kSqrt2), s).size();
        CHECK(static_cast<double>(n) <= cardinality_bound(beta, d, s));
      }
}

TEST_CASE("candidate sets are downward closed and nested") {
  for (const auto& w : {WeightConfig::constant(1.1, 5), WeightConfig::polynomial(1.5, 2.0),
                        WeightConfig::explicit_list({1.2, 1.4, 3.0})}) {
    const auto big = enumerate_candidate_set(w, 80, 6);
    const std::set<MultiIndex> all(big.begin(), big.end());
    for (const auto& nu : big)
      for (const auto& [j, k] : nu.entries()) {
        auto e = nu.entries();
        for (auto& x : e)
          if (x.first == j) x.second = k - 1;
        CHECK(all.count(MultiIndex(e)) == 1);
      }
    const auto small = enumerate_candidate_set(w, 20, 6);
    for (const auto& nu : small) CHECK(all.count(nu) == 1);
  }
}

TEST_CASE("max_dim truncation") {
  const auto w = WeightConfig::polynomial(1.2, 0.5);
  for (const auto& nu : enumerate_candidate_set(w, 40, 3)) CHECK(nu.max_dim() <= 3);
  CHECK(enumerate_candidate_set(w, 40, 3).size() < enumerate_candidate_set(w, 40, 10).size());
}

TEST_CASE("weighted sparsity and norms") {
  const auto w = WeightConfig::constant(2.0, 2, 1.0);
  WeightedVector zero{{MultiIndex()}, {0.0}};
  CHECK(weighted_sparsity(zero, w) == 0.0);
  WeightedVector one{{MultiIndex()}, {3.0}};
  CHECK(weighted_sparsity(one, w) == 1.0);
  WeightedVector two{{MultiIndex::from_dense({1, 0}), MultiIndex::from_dense({0, 1})}, {1.0, -2.0}};
  CHECK(weighted_sparsity(two, w) == doctest::Approx(8.0));

  WeightedVector x{{MultiIndex(), MultiIndex::from_dense({1, 0}), MultiIndex::from_dense({1, 1})}, {0.5, -3.0, 2.0}};
  CHECK(weighted_lp_norm(x, w, 2.0) == doctest::Approx(std::sqrt(0.25 + 9.0 + 4.0)));
  CHECK(weighted_lp_norm(x, w, 1.0) == doctest::Approx(0.5 + 2 * 3.0 + 4 * 2.0));
  const auto unit = WeightConfig::constant(1.0, 2, 1.0);
  CHECK(weighted_lp_norm(x, unit, 1.0) == doctest::Approx(5.5));
  WeightedVector single{{MultiIndex::from_dense({1})}, {3.0}};
  CHECK(weighted_lp_norm(single, WeightConfig::constant(2.0, 1, 1.0), 1.0) == doctest::Approx(6.0));
  CHECK_THROWS_AS(weighted_lp_norm(x, w, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(weighted_lp_norm(x, w, 2.5), std::invalid_argument);
}

TEST_CASE("best weighted s-term approximation") {
  const auto w = WeightConfig::constant(2.0, 2, 1.0);
  WeightedVector x{{MultiIndex(), MultiIndex::from_dense({1, 0}), MultiIndex::from_dense({0, 1})}, {1.0, 3.0, -0.5}};
  const double l1 = weighted_lp_norm(x, w, 1.0);
  auto full = best_weighted_s_term(x, w, weighted_sparsity(x, w));
  CHECK(full.support.size() == 3);
  CHECK(full.residual == doctest::Approx(0.0));
  auto none = best_weighted_s_term(x, w, 0);
  CHECK(none.support.empty());
  CHECK(none.residual == doctest::Approx(l1));

  // exhaustive subset search
  for (double s : {1.0, 4.0, 5.0, 8.0, 9.0}) {
    double best = l1;
    for (int mask = 0; mask < 8; ++mask) {
      double cost = 0, kept = 0;
      for (int k = 0; k < 3; ++k)
        if (mask & (1 << k)) {
          const double om = weight_of(x.support[k], w);
          cost += om * om;
          kept += om * std::abs(x.values[k]);
        }
      if (cost <= s) best = std::min(best, l1 - kept);
    }
    const auto g = best_weighted_s_term(x, w, s);
    CHECK(g.residual >= best - 1e-12);
    CHECK(g.residual <= l1 + 1e-12);
  }
}

TEST_CASE("greedy selection ties and budget") {
  const std::vector<double> v{1.0, -1.0, 0.0, 2.0};
  const std::vector<double> om{1.0, 1.0, 1.0, 1.0};
  CHECK(greedy_weighted_selection(v, om, 2) == std::vector<std::size_t>{0, 3});
  CHECK(greedy_weighted_selection(v, om, 10) == std::vector<std::size_t>{0, 1, 3});
  const std::vector<double> om2{1.0, 1.0, 1.0, 2.0};
  // density of entry 3 is 1, ties with 0 and 1; it costs 4 and does not fit after them
  CHECK(greedy_weighted_selection(v, om2, 3) == std::vector<std::size_t>{0, 1});
  CHECK(greedy_weighted_selection(v, om2, 4.5) == std::vector<std::size_t>{0, 1});
  // first fit: an entry that does not fit is skipped and the scan continues
  const std::vector<double> v3{3.0, 1.0};
  const std::vector<double> om3{2.0, 1.0};
  CHECK(greedy_weighted_selection(v3, om3, 3) == std::vector<std::size_t>{1});
}
