#include "doctest.h"

#include "semidyn/expr.hpp"
#include "semidyn/polyalg.hpp"
#include "test_support.hpp"

#include <algorithm>

using namespace semidyn;

namespace {

MultiPoly P(const char* text, int nvars = 2) { return parse_poly(text, nvars); }

PolyMap example1_f(double a) {
  // (z^2 + a w, z): not triangular, volume preserving up to sign
  return PolyMap({P("z1^2") + Complex(a) * P("z2"), P("z1")});
}

}  // namespace

TEST_CASE("polynomial evaluation matches direct arithmetic") {
  const MultiPoly p = P("3*z1^2*z2 - (2+1i)*z2 + 7");
  const Complex z(0.3, -1.1), w(-0.7, 0.4);
  const Complex expected = 3.0 * z * z * w - Complex(2, 1) * w + 7.0;
  CHECK(std::abs(eval_poly(p, make_point({z, w})) - expected) < 1e-13);
  CHECK_THROWS_AS(eval_poly(p, make_point({z})), Error);
}

TEST_CASE("zero coefficients are never stored") {
  MultiPoly p = P("z1 + z2 - z1");
  CHECK(p.terms().size() == 1);
  p.add_term({0, 1}, Complex(-1.0));
  CHECK(p.is_zero());
  MultiPoly q(2);
  q.add_term({1, 0}, Complex(1e-16));
  CHECK(q.is_zero());
}

TEST_CASE("degree queries") {
  const MultiPoly p = P("z1^3*z2 + z2^2 + 1");
  CHECK(p.total_degree() == 4);
  CHECK(p.degree_in(0) == 3);
  CHECK(p.degree_in(1) == 2);
  CHECK(p.sole_variable() == -2);
  CHECK(P("z2^5 + 2").sole_variable() == 1);
  CHECK(P("4").sole_variable() == -1);
}

TEST_CASE("differentiation of known polynomials") {
  CHECK(differentiate(P("z1^3*z2 + z2^2"), 0) == P("3*z1^2*z2"));
  CHECK(differentiate(P("z1^3*z2 + z2^2"), 1) == P("z1^3 + 2*z2"));
  CHECK(differentiate(P("5"), 0).is_zero());
}

TEST_CASE("product rule holds on random polynomials") {
  KeyedStream rng(11);
  auto random_poly = [&]() {
    MultiPoly p(2);
    for (int t = 0; t < 4; ++t)
      p.add_term({static_cast<std::uint16_t>(rng.below(4)), static_cast<std::uint16_t>(rng.below(4))},
                 Complex(rng.uniform() - 0.5, rng.uniform() - 0.5));
    return p;
  };
  for (int trial = 0; trial < 25; ++trial) {
    const MultiPoly a = random_poly(), b = random_poly();
    for (int v = 0; v < 2; ++v) {
      const MultiPoly lhs = differentiate(a * b, v);
      const MultiPoly rhs = differentiate(a, v) * b + a * differentiate(b, v);
      const Point z = make_point({Complex(rng.uniform(), rng.uniform()), Complex(rng.uniform(), -rng.uniform())});
      CHECK(std::abs(eval_poly(lhs, z) - eval_poly(rhs, z)) < 1e-10);
    }
  }
}

TEST_CASE("canonical form is idempotent") {
  const MultiPoly p = P("(z1 + z2)^3 - z1^3");
  CHECK(p.canonical() == p);
  CHECK(p.canonical().canonical() == p.canonical());
}

TEST_CASE("composition agrees with pointwise evaluation (chain of maps)") {
  const PolyMap f = example1_f(2.0);
  const PolyMap g({P("z1*z2"), P("z2 + 0.5*z1^2")});
  const PolyMap fg = compose(f, g);
  KeyedStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Point z = make_point({Complex(rng.uniform() - 0.5, rng.uniform() - 0.5), Complex(rng.uniform() - 0.5, rng.uniform())});
    const Point direct = eval_map(f, eval_map(g, z));
    CHECK((eval_map(fg, z) - direct).norm() < 1e-12);
  }
}

TEST_CASE("composition is associative") {
  const PolyMap f = example1_f(2.0);
  const PolyMap g({P("z1*z2"), P("z2")});
  const PolyMap h({P("z1 + 1i"), P("z2^2")});
  const PolyMap left = compose(compose(f, g), h);
  const PolyMap right = compose(f, compose(g, h));
  const Point z = make_point({Complex(0.2, 0.1), Complex(-0.4, 0.3)});
  CHECK((eval_map(left, z) - eval_map(right, z)).norm() < 1e-12);
}

TEST_CASE("composition refuses degrees past the budget") {
  const PolyMap sq({P("z1^2", 1)});
  CHECK(power(sq, 6).total_degree() == 64);
  CHECK_THROWS_AS(power(sq, 7), Error);
  try {
    (void)power(sq, 7);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegreeBudgetExceeded);
  }
}

TEST_CASE("Jacobian determinant of the Henon-type maps") {
  CHECK(jacobian_det(example1_f(2.0)) == P("-2"));
  CHECK(is_volume_preserving(PolyMap({P("z2"), P("z1 + z2^2")})));
  CHECK_FALSE(is_volume_preserving(example1_f(2.0)));
  CHECK_FALSE(is_volume_preserving(PolyMap({P("z1*z2"), P("z2")})));
}

TEST_CASE("determinant of a 3x3 polynomial matrix matches Eigen") {
  const PolyMap f({parse_poly("z1*z2 + z3", 3), parse_poly("z2^2 - z1", 3), parse_poly("z1 + z2*z3^2", 3)});
  const Point z = make_point({Complex(0.3, 0.2), Complex(-1.0, 0.5), Complex(0.7, -0.1)});
  const Jacobian j = jacobian(f).evaluate(z);
  CHECK(std::abs(eval_poly(jacobian_det(f), z) - j.determinant()) < 1e-12);
}

TEST_CASE("compiled map agrees with the symbolic map and its Jacobian") {
  const PolyMap f({P("z1^2 + 2*z2 - 1i"), P("z1*z2^3 + 0.5")});
  const CompiledMap c(f);
  const PolyMatrix jf = jacobian(f);
  KeyedStream rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Point z = make_point({Complex(rng.uniform() * 2 - 1, rng.uniform()), Complex(rng.uniform(), rng.uniform() - 1)});
    Point out;
    Jacobian jac;
    c.eval_with_jacobian(z, out, jac);
    CHECK((out - eval_map(f, z)).norm() < 1e-13);
    CHECK((jac - jf.evaluate(z)).norm() < 1e-12);
    CHECK((c(z) - out).norm() == 0.0);
  }
}

TEST_CASE("roots of z^2 + 1") {
  const std::vector<Complex> c{Complex(1), Complex(0), Complex(1)};
  const auto r = roots_1d(std::span<const Complex>(c));
  REQUIRE(r.size() == 2);
  CHECK(std::abs(r[0] - Complex(0, -1)) < 1e-12);
  CHECK(std::abs(r[1] - Complex(0, 1)) < 1e-12);
}

TEST_CASE("roots reproduce Vieta's formulas") {
  KeyedStream rng(77);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(9));
    std::vector<Complex> chosen;
    for (int i = 0; i < n; ++i) chosen.emplace_back(rng.uniform() * 4 - 2, rng.uniform() * 4 - 2);
    // expand prod (x - r_i) in ascending coefficient order
    std::vector<Complex> coeffs{Complex(1)};
    for (const auto& r : chosen) {
      std::vector<Complex> next(coeffs.size() + 1, Complex(0));
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        next[j + 1] += coeffs[j];
        next[j] -= r * coeffs[j];
      }
      coeffs = next;
    }
    const auto found = roots_1d(std::span<const Complex>(coeffs), 1e-10);
    REQUIRE(found.size() == chosen.size());
    Complex sum(0), prod(1), chosen_sum(0), chosen_prod(1);
    for (std::size_t i = 0; i < found.size(); ++i) {
      sum += found[i];
      prod *= found[i];
      chosen_sum += chosen[i];
      chosen_prod *= chosen[i];
    }
    CHECK(std::abs(sum - chosen_sum) < 1e-8);
    CHECK(std::abs(prod - chosen_prod) < 1e-8 * (1 + std::abs(chosen_prod)));
    for (const auto& r : chosen) {
      double best = 1e9;
      for (const auto& f : found) best = std::min(best, std::abs(f - r));
      CHECK(best < 1e-6);
    }
  }
}

TEST_CASE("root finder rejects a vanishing leading coefficient") {
  const std::vector<Complex> c{Complex(1), Complex(1), Complex(0)};
  CHECK_THROWS_AS(roots_1d(std::span<const Complex>(c)), Error);
}

TEST_CASE("roots of a one-variable MultiPoly") {
  const auto r = roots_1d(P("z2^2 - 4"));
  REQUIRE(r.size() == 2);
  CHECK(std::abs(r[0] + 2.0) < 1e-12);
  CHECK(std::abs(r[1] - 2.0) < 1e-12);
  CHECK_THROWS_AS(roots_1d(P("z1*z2 - 1")), Error);
}

TEST_CASE("triangularity") {
  CHECK(PolyMap({P("z1^2"), P("z1 + z2^3")}).is_triangular());
  CHECK_FALSE(example1_f(2.0).is_triangular());
}
