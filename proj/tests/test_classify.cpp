#include "doctest.h"

#include "semidyn/classify.hpp"
#include "semidyn/expr.hpp"
#include "test_support.hpp"

#include <numbers>

using namespace semidyn;

namespace {

PolyMap map2(const char* a, const char* b) { return PolyMap({parse_poly(a, 2), parse_poly(b, 2)}); }

Semigroup example1() { return Semigroup({map2("z1^2", "z2^2"), map2("0.5*z1^2", "z2^2")}); }
Semigroup squaring() { return Semigroup({map2("z1^2", "z2^2")}); }

Point polar2(double r1, double t1, double r2, double t2) { return make_point({std::polar(r1, t1), std::polar(r2, t2)}); }

// Closed form for z -> (z1^2, z2^2): distance in moduli to {|z1| = 1, |z2| <= 1} u {|z1| <= 1, |z2| = 1}
double distance_to_julia_of_squaring(double x, double y) {
  return std::min(std::hypot(x - 1.0, std::max(0.0, y - 1.0)), std::hypot(y - 1.0, std::max(0.0, x - 1.0)));
}

PointClass analytic_verdict_of_squaring(double x, double y) {
  return x < 1.0 && y < 1.0 ? PointClass::FatouBounded : PointClass::FatouEscaping;
}

}  // namespace

TEST_CASE("escape_time counts letters") {
  const Semigroup f = squaring();
  CHECK(escape_time(f, repeat_letter(0, 6), make_point({2.0, 0.0}), 10.0) == 2);
  CHECK_FALSE(escape_time(f, repeat_letter(0, 6), make_point({0.3, 0.3}), 10.0).has_value());
  CHECK_FALSE(escape_time(f, repeat_letter(0, 6), make_point({0.0, 0.0}), 10.0).has_value());
}

TEST_CASE("Example 1 point verdicts") {
  const Semigroup g = example1();
  const ClassifierConfig cfg;
  CHECK(classify_point(g, make_point({0.5, 0.5}), cfg).verdict == PointClass::FatouBounded);
  CHECK(classify_point(g, make_point({3.0, 0.0}), cfg).verdict == PointClass::FatouEscaping);
  const auto julia = classify_point(g, make_point({1.5, 0.2}), cfg);
  CHECK(julia.verdict == PointClass::JuliaCandidate);
  CHECK_FALSE(julia.evidence.witnesses.empty());
  CHECK(julia.evidence.witnesses.size() <= 4);
  // |z2| > 1 escapes under both maps
  CHECK(classify_point(g, make_point({0.5, 1.5}), cfg).verdict == PointClass::FatouEscaping);
}

TEST_CASE("normality_score examples") {
  const ClassifierConfig cfg;
  const Semigroup contraction({map2("0.5*z1", "0.5*z2")});
  CHECK(normality_score(contraction, make_point({0.0, 0.0}), cfg) == doctest::Approx(0.0).epsilon(1e-6));
  const Semigroup g = example1();
  CHECK(normality_score(g, make_point({0.1, 0.1}), cfg) < std::log(cfg.kappa));
  CHECK(normality_score(g, make_point({1.0, 0.5}), cfg) > std::log(cfg.kappa));
}

TEST_CASE("score tracks the spherical derivative near the unit circle") {
  // for squaring the score grows like log(1 / distance to |z1| = 1)
  const Semigroup f = squaring();
  const ClassifierConfig cfg;
  double previous = 0.0;
  for (double d : {0.2, 0.05, 0.01, 0.002}) {
    const double s = normality_score(f, polar2(1.0 - d, 0.4, 0.3, 1.0), cfg);
    CHECK(s > previous);
    previous = s;
  }
}

TEST_CASE("classifier determinism") {
  const Semigroup g = example1();
  ClassifierConfig cfg;
  cfg.seed = 77;
  KeyedStream rng(1);
  for (int i = 0; i < 20; ++i) {
    const Point z = polar2(2.5 * rng.uniform(), 6.0 * rng.uniform(), 1.6 * rng.uniform(), 6.0 * rng.uniform());
    const auto a = classify_point(g, z, cfg);
    const auto b = classify_point(g, z, cfg);
    CHECK(a.verdict == b.verdict);
    CHECK(a.score == b.score);
    CHECK(a.evidence.witnesses == b.evidence.witnesses);
  }
  CHECK(Classifier(g, cfg).words() == Classifier(g, cfg).words());
}

TEST_CASE("monotonicity under nested word sets") {
  const Semigroup g = example1();
  ClassifierConfig small, large;
  small.N = 30;
  large.N = 200;
  small.seed = large.seed = 3;
  // the random part draws word i from (seed, i), so the smaller set is a prefix
  const Classifier cs(g, small), cl(g, large);
  for (const auto& w : cs.words())
    CHECK(std::find(cl.words().begin(), cl.words().end(), w) != cl.words().end());

  KeyedStream rng(8);
  for (int i = 0; i < 60; ++i) {
    const Point z = polar2(2.5 * rng.uniform(), 6.0 * rng.uniform(), 1.5 * rng.uniform(), 6.0 * rng.uniform());
    const PointClass a = cs.classify(z).verdict;
    const PointClass b = cl.classify(z).verdict;
    if (a == PointClass::FatouEscaping) CHECK(b != PointClass::FatouBounded);
    if (a == PointClass::FatouBounded) CHECK(b != PointClass::FatouEscaping);
    if (a == PointClass::JuliaCandidate) CHECK(b == PointClass::JuliaCandidate);
  }
}

TEST_CASE("exhaustive words agree with the closed-form Julia set of squaring") {
  const Semigroup f = squaring();
  ClassifierConfig cfg;
  cfg.sampler = SamplerMode::Exhaustive;
  cfg.L = 8;
  const Classifier c(f, cfg);
  KeyedStream rng(2024);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = 1.6 * rng.uniform(), y = 1.6 * rng.uniform();
    const Point z = polar2(x, 2.0 * std::numbers::pi * rng.uniform(), y, 2.0 * std::numbers::pi * rng.uniform());
    if (distance_to_julia_of_squaring(x, y) <= 2.0 * cfg.delta) continue;
    ++checked;
    INFO("moduli " << x << ", " << y);
    CHECK(c.classify(z).verdict == analytic_verdict_of_squaring(x, y));
  }
  CHECK(checked >= 95);
}

TEST_CASE("images of bounded Fatou points stay Fatou") {
  const Semigroup g = example1();
  const Classifier c(g, ClassifierConfig{});
  KeyedStream rng(31);
  int tested = 0, fatou = 0;
  while (tested < 40) {
    const Point z = polar2(0.95 * rng.uniform(), 6.0 * rng.uniform(), 0.95 * rng.uniform(), 6.0 * rng.uniform());
    if (c.classify(z).verdict != PointClass::FatouBounded) continue;
    for (int i = 0; i < g.size(); ++i) {
      // the critical locus z1 z2 = 0 has measure zero, so samples avoid it
      ++tested;
      fatou += is_fatou(c.classify(eval_map(g.generator(i), z)).verdict);
    }
  }
  CHECK(static_cast<double>(fatou) / tested >= 0.95);
}

TEST_CASE("word set construction") {
  const Semigroup g = example1();
  ClassifierConfig cfg;
  cfg.sampler = SamplerMode::Exhaustive;
  cfg.L = 4;
  // binary necklaces of length 1..4 that are not proper powers: 2 + 1 + 2 + 3
  CHECK(Classifier(g, cfg).words().size() == 8);
  CHECK(cyclic_canonical(Word{{1, 0, 1, 0}}) == Word{{0, 1}});
  CHECK(cyclic_canonical(Word{{1, 1, 0}}) == Word{{0, 1, 1}});
  CHECK(cyclic_canonical(Word{{2}}) == Word{{2}});
}

TEST_CASE("companions sit at distance delta") {
  const Point z = make_point({Complex(0.3, -0.2), Complex(1.1, 0.4)});
  const auto cs = companion_points(z, 1e-4, 12, 5);
  REQUIRE(cs.size() == 12);
  for (const auto& c : cs) CHECK((c - z).norm() == doctest::Approx(1e-4).epsilon(1e-9));
  CHECK(cs == companion_points(z, 1e-4, 12, 5));
}

TEST_CASE("classifier config validation and resolution") {
  ClassifierConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.R = 0.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.n_companions = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.resolution = 0.01;
  CHECK(cfg.effective_kappa() == doctest::Approx(100.0));
  cfg.resolution = 0.0;
  CHECK(cfg.effective_kappa() == cfg.kappa);
  CHECK(point_class_from_string("FatouMixed") == PointClass::FatouMixed);
  CHECK_FALSE(point_class_from_string("Fatou").has_value());
}

TEST_CASE("non-finite input is undetermined") {
  const auto r = classify_point(example1(), make_point({Complex(std::nan(""), 0.0), 0.0}), ClassifierConfig{});
  CHECK(r.verdict == PointClass::Undetermined);
  CHECK_THROWS_AS(classify_point(example1(), make_point({0.0}), ClassifierConfig{}), Error);
}
