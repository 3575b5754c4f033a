#include "doctest.h"

#include "semidyn/expr.hpp"
#include "semidyn/properties.hpp"

#include <cmath>

using namespace semidyn;

namespace {

PolyMap map2(const char* a, const char* b) { return PolyMap({parse_poly(a, 2), parse_poly(b, 2)}); }

const PolyMap kF = map2("z1^2", "z2^2");
const PolyMap kG = map2("0.5*z1^2", "z2^2");
const PolyMap kCube = map2("z1^3", "z2^3");

Region modulus_region(double xh, double yh, int nx, int ny, int phases) {
  Region r;
  r.x_high = xh, r.y_high = yh;
  r.nx = nx, r.ny = ny, r.phase_samples = phases;
  return r;
}

// One scan of Example 1 shared by several cases.
const Raster& example1_raster() {
  static const Raster r = scan(Semigroup({kF, kG}), modulus_region(3, 2, 36, 24, 2), ClassifierConfig{}, 2);
  return r;
}

Raster uniform_raster(const Region& region, PointClass c) {
  Raster r;
  r.region = region;
  r.cells.assign(region.cell_count(), c);
  r.scores.assign(region.cell_count(), 0.0);
  return r;
}

}  // namespace

TEST_CASE("forward invariance holds on Example 1") {
  const auto rep = check_forward_invariance(Semigroup({kF, kG}), example1_raster(), 0.05, {60, 0.1, 3});
  CHECK(rep.n_checked > 0);
  CHECK(rep.n_violations == 0);
  CHECK(rep.pass);
  CHECK(rep.n_excluded > 0);  // cells near |z1| = 1 and |z2| = 1 fall in the band
}

TEST_CASE("squaring keeps the escape zone escaping") {
  const Semigroup sq({kF});
  Region region = modulus_region(3, 3, 12, 12, 2);
  region.x_low = 1.5, region.y_low = 1.5;  // |z1|, |z2| > 1.5
  const Raster r = scan(sq, region, ClassifierConfig{}, 1);
  for (PointClass c : r.cells) REQUIRE(c == PointClass::FatouEscaping);
  const auto rep = check_forward_invariance(sq, r, 0.05, {40, 0.05, 1});
  CHECK(rep.n_checked == 40);
  CHECK(rep.n_violations == 0);
}

TEST_CASE("backward invariance on Example 1") {
  const Semigroup g({kF, kG});
  const auto rep = check_backward_invariance(g, example1_raster(), 0.05, {40, 0.05, 5});
  CHECK(rep.applicable);
  CHECK(rep.n_checked > 0);
  CHECK(rep.pass);

  // q with |z1| = sqrt 2, |z2| = 0.5 is Julia; its f-preimages sit on |z1| = 2^(1/4)
  const Classifier cl(g, ClassifierConfig{});
  const Point q = make_point({std::polar(std::sqrt(2.0), 0.4), 0.5});
  REQUIRE(cl.classify(q).verdict == PointClass::JuliaCandidate);
  const auto pre = preimages(kF, q, Polydisc::around_origin(2, 10.0));
  REQUIRE(pre.complete);
  CHECK(pre.points.size() == 4);
  bool some_julia = false;
  for (const Point& p : pre.points) {
    CHECK(std::abs(p[0]) == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-9));
    some_julia |= cl.classify(p).verdict == PointClass::JuliaCandidate;
  }
  CHECK(some_julia);
}

TEST_CASE("square roots keep the torus on the torus") {
  const Semigroup sq({kF});
  const Classifier cl(sq, ClassifierConfig{});
  const Point q = make_point({std::polar(1.0, 0.7), std::polar(1.0, -1.1)});
  REQUIRE(cl.classify(q).verdict == PointClass::JuliaCandidate);
  const auto pre = preimages(kF, q, Polydisc::around_origin(2, 2.0));
  REQUIRE(pre.points.size() == 4);
  for (const Point& p : pre.points) {
    CHECK(std::abs(p[0]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(p[1]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cl.classify(p).verdict == PointClass::JuliaCandidate);
  }
}

TEST_CASE("backward invariance is not applicable without exact preimages") {
  const Semigroup g({map2("z1^2 + z2^2", "z1*z2")});
  const Raster r = uniform_raster(modulus_region(1, 1, 4, 4, 1), PointClass::JuliaCandidate);
  const auto rep = check_backward_invariance(g, r);
  CHECK_FALSE(rep.applicable);
  CHECK(rep.pass);
  CHECK(rep.note.find("PreimageUnavailable") != std::string::npos);
}

TEST_CASE("finite index and trivial power tuples") {
  const Semigroup sq({kF});
  const Region region = modulus_region(2, 2, 16, 16, 2);
  RasterPair pair;
  const auto two = check_finite_index_equality(sq, PowerTuple{{2}}, region, ClassifierConfig{}, 0.05, 0.05, 1, &pair);
  CHECK(two.pass);
  CHECK(two.n_checked > 0);

  const auto one = check_finite_index_equality(sq, PowerTuple{{1}}, region, ClassifierConfig{}, 0.05, 0.05, 1, &pair);
  CHECK(pair.first.cells == pair.second.cells);
  CHECK(one.n_violations == 0);

  const Semigroup pr({kF, kCube});
  const auto same = check_power_tuple_independence(pr, PowerTuple{{2, 3}}, PowerTuple{{2, 3}}, region, ClassifierConfig{}, 0.05,
                                                   0.05, 1, &pair);
  CHECK(pair.first.cells == pair.second.cells);
  CHECK(same.violation_rate == 0.0);
}

TEST_CASE("power tuples need commuting generators") {
  CHECK_THROWS_AS(check_power_tuple_independence(Semigroup({kF, kG}), PowerTuple{{1, 1}}, PowerTuple{{2, 2}},
                                                 modulus_region(1, 1, 2, 2, 1), ClassifierConfig{}),
                  Error);
  try {
    check_power_tuple_independence(Semigroup({kF, kG}), PowerTuple{{1, 1}}, PowerTuple{{2, 2}}, modulus_region(1, 1, 2, 2, 1),
                                   ClassifierConfig{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotCommuting);
  }
}

TEST_CASE("commuting checks") {
  CHECK(check_commuting(kF, kCube));
  CHECK_FALSE(check_commuting(kF, kG));
  CHECK(check_commuting(kG, kG));
  const PolyMap maps[] = {kF, kG, kCube, map2("z2", "0.25*z1 - z2^2"), map2("z1*z2", "z2"), map2("z1 + 1", "z2")};
  for (const PolyMap& a : maps)
    for (const PolyMap& b : maps) CHECK(check_commuting(a, b, 32, 1e-9, 7) == check_commuting(b, a, 32, 1e-9, 7));
  CHECK_THROWS_AS(check_commuting(kF, PolyMap::identity(3)), Error);
}

TEST_CASE("boundary containment") {
  const Semigroup sq({kF});
  const auto lab = label_components(scan(sq, modulus_region(2, 2, 24, 24, 2), ClassifierConfig{}, 2));
  const auto rep = check_boundary_containment(sq, lab, 80, 0.1, 2);
  CHECK(rep.n_checked > 0);
  CHECK(rep.pass);

  const auto ex1 = check_boundary_containment(Semigroup({kF, kG}), label_components(example1_raster()), 80, 0.1, 2);
  CHECK(ex1.n_checked > 0);
  CHECK(ex1.pass);

  // a single component without neighbours has no boundary cells to test
  const auto solid = label_components(uniform_raster(modulus_region(1, 1, 6, 6, 1), PointClass::FatouBounded));
  const auto none = check_boundary_containment(sq, solid, 50);
  CHECK(none.n_checked == 0);
  CHECK(none.pass);
}

TEST_CASE("local boundedness premise on the bidisc") {
  const auto lab = label_components(example1_raster());
  const auto rep = check_local_boundedness(Semigroup({kF, kG}), lab, ClassifierConfig{}, 40, 1);
  CHECK(rep.n_checked == 40);
  CHECK(rep.n_violations == 0);
  CHECK(rep.note.find("premise only") != std::string::npos);
}

TEST_CASE("volume-preserving dichotomy") {
  const Region region = modulus_region(1, 1, 8, 8, 1);
  const auto lab = label_components(uniform_raster(region, PointClass::FatouBounded));

  const Semigroup henon({map2("z2", "z1 + z2^2")});
  const auto h = check_volume_divergence(henon, lab, 0);
  CHECK(h.pass);

  const Semigroup stretch({map2("2*z1", "0.5*z2")});
  const auto s = check_volume_divergence(stretch, lab, 0);
  CHECK(s.pass);
  REQUIRE_FALSE(s.witnesses.empty());
  const Witness& w = s.witnesses.front();
  CHECK_FALSE(orbit(stretch, *w.word, w.point, 1e6).completed);

  // the identity neither escapes nor is recurrent without a report
  const Semigroup id({PolyMap::identity(2)});
  CHECK_FALSE(check_volume_divergence(id, lab, 0).pass);
  RecurrenceReport rec;
  rec.verdict = RecurrenceVerdict::RecurrentLikely;
  CHECK(check_volume_divergence(id, lab, 0, rec).pass);

  CHECK_THROWS_AS(check_volume_divergence(Semigroup({kF}), lab, 0), Error);
  CHECK_THROWS_AS(check_volume_divergence(henon, lab, 5), Error);
}

TEST_CASE("witnesses reproduce their violations") {
  // claiming everything is Fatou makes images near the tori violate forward invariance
  const Semigroup sq({kF});
  Raster fake = uniform_raster(modulus_region(2, 2, 20, 20, 2), PointClass::FatouBounded);
  fake.config.resolution = fake.region.cell_diagonal();
  const auto rep = check_forward_invariance(sq, fake, 0.0, {200, 0.05, 11});
  REQUIRE(rep.n_violations > 0);
  CHECK_FALSE(rep.pass);
  CHECK(rep.witnesses.size() <= 8);
  for (const Witness& w : rep.witnesses) {
    const Point img = sq.compiled(w.generator)(w.point);
    CHECK(classify_like_raster(sq, fake, img).verdict == PointClass::JuliaCandidate);
  }
  const auto again = check_forward_invariance(sq, fake, 0.0, {200, 0.05, 11});
  CHECK(again.n_violations == rep.n_violations);
  REQUIRE(again.witnesses.size() == rep.witnesses.size());
  for (std::size_t i = 0; i < rep.witnesses.size(); ++i) CHECK(again.witnesses[i].point == rep.witnesses[i].point);
}
