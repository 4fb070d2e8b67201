#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "mlcspg/errors.hpp"
#include "mlcspg/multilevel.hpp"

using namespace mlcspg;

namespace {

ParametricProblem cosine_1d(std::size_t d, double a = 2.0) {
  ParametricProblem p;
  p.mean_field = ScalarField::constant(a);
  p.fluctuations = Fluctuations::cosine(2.0, d);
  return p;
}

ScheduleParams params(std::size_t L, double h0, double cs, SampleRule rule = SampleRule::practical) {
  ScheduleParams sp;
  sp.levels = L;
  sp.h0 = h0;
  sp.sparsity_constant = cs;
  sp.rule = rule;
  return sp;
}

std::string dump(const Surrogate& s) {
  std::ostringstream os;
  write_surrogate(os, s);
  return os.str();
}

}  // namespace

TEST_CASE("sample rules") {
  CHECK(practical_sample_count(64, 4687) == 1082);
  CHECK(practical_sample_count(32, 931) == 438);
  CHECK(practical_sample_count(16, 172) == 165);
  CHECK(practical_sample_count(5, 1) == 1);
  CHECK(practical_sample_count(5, 0) == 0);
  ScheduleParams sp;
  sp.rule = SampleRule::theoretical;
  sp.c0 = 0.5;
  sp.gamma = 0.01;
  const double s = 16, n = 200;
  const double ln3 = std::pow(std::log(s), 3);
  CHECK(sample_count(sp, s, 200) == static_cast<std::size_t>(std::ceil(0.5 * s * std::max(ln3 * std::log(n), std::log(100.0)))));
  sp.rule = SampleRule::interpolation;
  CHECK(sample_count(sp, s, 200) == 200);
  for (auto r : {SampleRule::practical, SampleRule::theoretical, SampleRule::interpolation})
    CHECK(parse_sample_rule(to_string(r)) == r);
  CHECK_THROWS_AS(parse_sample_rule("fast"), std::invalid_argument);
}

TEST_CASE("schedule") {
  const auto w = WeightConfig::constant(1.1, 4);
  const auto sched = make_schedule(params(3, 0.25, 8), w, 4);
  REQUIRE(sched.levels.size() == 3);
  const double expect_s[] = {32, 16, 8};
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& lv = sched.levels[l];
    CHECK(lv.index == l);
    CHECK(lv.label == l + 1);
    CHECK(lv.sparsity == expect_s[l]);
    CHECK(lv.h == 0.25 / static_cast<double>(1u << l));
    CHECK(lv.candidates == enumerate_candidate_set(w, lv.sparsity, 4));
    CHECK(lv.samples == practical_sample_count(lv.sparsity, lv.candidates.size()));
    CHECK(lv.least_squares_advised == (lv.samples >= lv.candidates.size()));
    if (l > 0)
      for (const auto& nu : lv.candidates)
        CHECK(std::binary_search(sched.levels[l - 1].candidates.begin(), sched.levels[l - 1].candidates.end(), nu,
                                 canonical_less));
  }
  auto sp = params(4, 0.1, 3);
  sp.sigma = 0.5;
  const auto s2 = make_schedule(sp, w, 4);
  CHECK(s2.levels[0].sparsity == std::ceil(3 * std::pow(2.0, 1.5)));
  CHECK(s2.levels[3].sparsity == 3);
}

TEST_CASE("schedule of the d = 9 reference experiment") {
  const auto sched = make_schedule(params(3, 0.1, 16), WeightConfig::constant(1.1, 9), 9);
  const std::size_t N[] = {4687, 931, 172}, m[] = {1082, 438, 165};
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(sched.levels[l].candidates.size() == N[l]);
    CHECK(sched.levels[l].samples == m[l]);
  }
}

TEST_CASE("schedule errors") {
  const auto w = WeightConfig::constant(1.1, 2);
  CHECK_THROWS_AS(make_schedule(params(0, 0.1, 8), w, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(params(2, 0.0, 8), w, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(params(2, 0.1, 0.5), w, 2), std::invalid_argument);
  auto sp = params(2, 0.1, 8);
  sp.sigma = 0;
  CHECK_THROWS_AS(make_schedule(sp, w, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(params(2, 0.1, 8), WeightConfig::constant(1.0, 2, 1.0), 2), InfiniteSet);
}

TEST_CASE("single level equals plain recovery on QoI samples") {
  const auto p = cosine_1d(3);
  const auto sched = make_schedule(params(1, 1.0 / 16, 12), WeightConfig::constant(1.2, 3), 3);
  const auto s = run(p, sched, 77, Algorithm::womp);
  REQUIRE(s.blocks.size() == 1);
  const auto& lv = sched.levels[0];
  const auto batch = level_samples(sched, 0, 77, SampleReuse::fresh);
  REQUIRE(batch.count() == lv.samples);
  const MeshHierarchy mesh(1, lv.h, 1);
  Eigen::VectorXd b(static_cast<Eigen::Index>(batch.count()));
  for (std::size_t i = 0; i < batch.count(); ++i) b[static_cast<Eigen::Index>(i)] = detail(p, batch.point(i), 0, mesh);
  const auto phi = build_sensing_matrix(batch, lv.candidates);
  Eigen::VectorXd om(static_cast<Eigen::Index>(lv.candidates.size()));
  for (std::size_t k = 0; k < lv.candidates.size(); ++k) om[static_cast<Eigen::Index>(k)] = weight_of(lv.candidates[k], sched.weights);
  const auto direct = womp({phi.values, b, om, lv.sparsity, std::nullopt});
  CHECK(s.blocks[0].indices == lv.candidates);
  for (std::size_t k = 0; k < lv.candidates.size(); ++k)
    CHECK(s.blocks[0].coefficients[k] == direct.coefficients[static_cast<Eigen::Index>(k)]);
}

TEST_CASE("constant QoI lands on the zero index") {
  ParametricProblem p;
  p.mean_field = ScalarField::constant(3.0);
  p.forcing = ScalarField::constant(2.0);
  p.fluctuations = Fluctuations::patchwise({0.0, 0.0, 0.0, 0.0});
  const auto sched = make_schedule(params(3, 0.25, 6), WeightConfig::constant(1.2, 4), 4);
  for (auto alg : {Algorithm::womp, Algorithm::whtp, Algorithm::lsq}) {
    CAPTURE(to_string(alg));
    const auto s = run(p, sched, 5, alg);
    REQUIRE(s.blocks.size() == 3);
    for (const auto& blk : s.blocks)
      for (std::size_t k = 0; k < blk.indices.size(); ++k) {
        const double target = blk.level == 0 && blk.indices[k].is_zero() ? 2.0 / 36.0 : 0.0;
        CHECK(std::abs(blk.coefficients[k] - target) <= 1e-8);
      }
  }
}

TEST_CASE("interpolation regime telescopes to the finest QoI") {
  const auto p = cosine_1d(2);
  const auto sched = make_schedule(params(3, 0.125, 4, SampleRule::interpolation), WeightConfig::constant(1.2, 2), 2);
  for (const auto& lv : sched.levels) REQUIRE(lv.samples == lv.candidates.size());
  RunOptions ro;
  ro.reuse = SampleReuse::nested;
  const auto s = run(p, sched, 3, Algorithm::lsq, ro);
  const auto pts = level_samples(sched, 2, 3, SampleReuse::nested);
  const MeshHierarchy mesh(1, 0.125, 3);
  for (std::size_t i = 0; i < pts.count(); ++i) {
    const double fine = qoi(solve(p, pts.point(i), 2, mesh), p);
    CHECK(std::abs(evaluate(s, pts.point(i)) - fine) <= 1e-8);
  }
  for (std::size_t l = 0; l < 3; ++l) CHECK(level_samples(sched, l, 3, SampleReuse::nested).count() == sched.levels[l].samples);
}

TEST_CASE("fresh samples use disjoint streams per level") {
  const auto sched = make_schedule(params(3, 0.125, 6), WeightConfig::constant(1.2, 2), 2);
  const auto a = level_samples(sched, 0, 9, SampleReuse::fresh);
  const auto b = level_samples(sched, 1, 9, SampleReuse::fresh);
  CHECK(a.point(0)[0] != b.point(0)[0]);
  const auto c = level_samples(sched, 1, 9, SampleReuse::nested);
  CHECK(c.point(0)[0] == level_samples(sched, 0, 9, SampleReuse::nested).point(0)[0]);
}

TEST_CASE("evaluate") {
  Surrogate s;
  s.parameter_dim = 3;
  s.blocks.push_back({0, {MultiIndex{}}, {1.0}});
  for (const std::vector<double>& y : {std::vector<double>{0, 0, 0}, {1, -1, 0.3}, {-0.2, 0.9, 0.99}}) CHECK(evaluate(s, y) == 1.0);

  Surrogate t;
  t.parameter_dim = 3;
  t.blocks.push_back({0, {MultiIndex{}, MultiIndex::from_dense({2}), MultiIndex::from_dense({1, 2}), MultiIndex::from_dense({2, 0, 4})},
                      {0.5, -1.0, 3.0, 0.25}});
  t.blocks.push_back({1, {MultiIndex{}, MultiIndex::from_dense({0, 0, 2})}, {0.1, 2.0}});
  const std::vector<double> zero{0, 0, 0};
  double naive = 0.0;
  for (const auto& blk : t.blocks)
    for (std::size_t k = 0; k < blk.indices.size(); ++k) naive += blk.coefficients[k] * cheb_tensor(blk.indices[k], zero);
  CHECK(evaluate(t, zero) == doctest::Approx(naive).epsilon(1e-14));
  // T_2(0) = -sqrt2, T_4(0) = sqrt2; odd degrees vanish
  CHECK(naive == doctest::Approx(0.5 + std::sqrt(2.0) + 0.25 * -2.0 + 0.1 - 2.0 * std::sqrt(2.0)).epsilon(1e-14));

  Surrogate u = t;
  for (auto& blk : u.blocks)
    for (auto& c : blk.coefficients) c = std::sin(c + 1.0);
  Surrogate sum = t;
  for (std::size_t b = 0; b < sum.blocks.size(); ++b)
    for (std::size_t k = 0; k < sum.blocks[b].coefficients.size(); ++k) sum.blocks[b].coefficients[k] += u.blocks[b].coefficients[k];
  const std::vector<double> y{0.3, -0.7, 0.55};
  CHECK(evaluate(sum, y) == doctest::Approx(evaluate(t, y) + evaluate(u, y)).epsilon(1e-13));

  CHECK_NOTHROW(evaluate(t, std::vector<double>{1 + 1e-13, 0, 0}));
  CHECK_THROWS_AS(evaluate(t, std::vector<double>{1.01, 0, 0}), DomainError);
  CHECK_THROWS_AS(evaluate(t, std::vector<double>{0, 0}), DimensionError);
}

TEST_CASE("dimension truncation") {
  const std::vector<double> b{1.0, 0.5, 0.25};
  CHECK(truncate_dimension(b, 0.5, 1.0, 0.5).dims == 2);
  CHECK(truncate_dimension(b, 0.5, 2.0, 1.0 / 64).dims == 4096);
  std::vector<double> decay(100000);
  for (std::size_t j = 0; j < decay.size(); ++j) decay[j] = 1.0 / std::pow(static_cast<double>(j + 1), 2);
  const auto t = truncate_dimension(decay, 0.5, 1.0, 0.1);
  CHECK(t.dims == 10);
  double tail = 0.0;
  for (std::size_t j = 10; j < decay.size(); ++j) tail += decay[j];
  CHECK(t.tail_bound >= tail);
  CHECK_THROWS_AS(truncate_dimension(b, 1.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(truncate_dimension(std::vector<double>{0.5, 1.0}, 0.5, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("surrogate file round trip") {
  const auto p = cosine_1d(3);
  auto sp = params(2, 0.125, 6);
  const auto sched = make_schedule(sp, WeightConfig::polynomial(1.5, 2.0), 3);
  const auto s = run(p, sched, 0xDEADBEEFCAFEull, Algorithm::whtp);
  const auto text = dump(s);
  std::istringstream is(text);
  const auto r = read_surrogate(is);
  CHECK(r.seed == s.seed);
  CHECK(r.fingerprint == s.fingerprint);
  CHECK(r.fingerprint == p.fingerprint());
  CHECK(r.parameter_dim == 3);
  CHECK(r.algorithm == Algorithm::whtp);
  CHECK(r.params == s.params);
  CHECK(r.weights == s.weights);
  REQUIRE(r.blocks.size() == s.blocks.size());
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    CHECK(r.blocks[b].indices == s.blocks[b].indices);
    CHECK(r.blocks[b].coefficients == s.blocks[b].coefficients);
  }
  CHECK(dump(r) == text);

  std::istringstream bad("#format=mlcspg-surrogate\n#seed=1\n0,(1:x),0.5\n");
  CHECK_THROWS_AS(read_surrogate(bad), std::runtime_error);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_surrogate(empty), std::runtime_error);
}

TEST_CASE("runs are independent of the thread count") {
  const auto p = cosine_1d(4);
  const auto sched = make_schedule(params(3, 0.125, 6), WeightConfig::constant(1.2, 4), 4);
  for (auto alg : {Algorithm::womp, Algorithm::whtp, Algorithm::wbp}) {
    RunOptions one, many;
    many.threads = 4;
    CHECK(dump(run(p, sched, 21, alg, one)) == dump(run(p, sched, 21, alg, many)));
  }
}

TEST_CASE("degenerate levels and diagnostics") {
  const auto p = cosine_1d(2);
  const auto w = WeightConfig::constant(1.2, 2);
  // s = 1: no index fits, s = 2: only the zero index
  const auto sched = make_schedule(params(2, 0.125, 1), WeightConfig::constant(1.2, 2), 2);
  REQUIRE(sched.levels[1].sparsity == 1);
  CHECK(sched.levels[1].candidates.empty());
  CHECK(sched.levels[1].samples == 0);
  CHECK(sched.levels[0].candidates == std::vector<MultiIndex>{MultiIndex{}});
  RunDiagnostics diag;
  const auto s = run(p, sched, 1, Algorithm::womp, {}, &diag);
  REQUIRE(s.blocks.size() == 2);
  CHECK(s.blocks[1].indices.empty());
  REQUIRE(s.blocks[0].indices.size() == 1);
  CHECK(std::isfinite(evaluate(s, std::vector<double>{0.1, 0.2})));

  const auto sched3 = make_schedule(params(3, 0.125, 4), w, 2);
  const auto s3 = run(p, sched3, 1, Algorithm::womp, {}, &diag);
  REQUIRE(diag.levels.size() == 3);
  CHECK(diag.pde_solves() == sched3.levels[0].samples + 2 * (sched3.levels[1].samples + sched3.levels[2].samples));
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(diag.levels[l].samples == sched3.levels[l].samples);
    CHECK(diag.levels[l].achieved_weighted_sparsity <= sched3.levels[l].sparsity);
  }
}

TEST_CASE("run checks dimensions") {
  const auto p = cosine_1d(3);
  const auto sched = make_schedule(params(2, 0.125, 6), WeightConfig::constant(1.2, 2), 2);
  CHECK_THROWS_AS(run(p, sched, 1, Algorithm::womp), DimensionError);
  ParametricProblem bad = cosine_1d(2, 0.5);
  CHECK_THROWS_AS(run(bad, sched, 1, Algorithm::womp), EllipticityViolation);
}
