#include "doctest.h"

#include "semidyn/expr.hpp"
#include "semidyn/gridscan.hpp"
#include "test_support.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace semidyn;

namespace {

PolyMap map2(const char* a, const char* b) { return PolyMap({parse_poly(a, 2), parse_poly(b, 2)}); }

Semigroup example1() { return Semigroup({map2("z1^2", "z2^2"), map2("0.5*z1^2", "z2^2")}); }
Semigroup squaring() { return Semigroup({map2("z1^2", "z2^2")}); }

Region modulus_region(double x0, double x1, double y0, double y1, int nx, int ny, int phases) {
  Region r;
  r.x_low = x0, r.x_high = x1, r.y_low = y0, r.y_high = y1;
  r.nx = nx, r.ny = ny, r.phase_samples = phases;
  return r;
}

Raster blank_raster(const Region& region, PointClass fill) {
  Raster r;
  r.region = region;
  r.cells.assign(region.cell_count(), fill);
  r.scores.assign(region.cell_count(), 0.0);
  return r;
}

std::string temp_path(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST_CASE("reference membership") {
  const ReferenceSet ex1 = example1_reference(2.0);
  CHECK(membership_moduli(ex1, {1.5, 0.3}));
  CHECK_FALSE(membership_moduli(ex1, {0.5, 0.5}));
  CHECK(membership_moduli(ex1, {0.5, 1.0}));
  CHECK_FALSE(membership_moduli(ex1, {2.5, 0.5}));
  CHECK(membership(ex1, make_point({Complex(0.0, 1.5), std::polar(0.3, 2.0)})));

  const ReferenceSet sq = single_squaring_reference();
  CHECK(membership_moduli(sq, {1.0, 0.2}));
  CHECK_FALSE(membership_moduli(sq, {1.2, 0.2}));

  const ReferenceSet cheb = chebyshev_reference();
  CHECK(membership(cheb, make_point({0.3, 0.5})));
  CHECK_FALSE(membership(cheb, make_point({Complex(0.3, 0.1), 0.5})));
  CHECK_THROWS_AS(membership_moduli(cheb, {0.3, 0.5}), Error);
}

TEST_CASE("region geometry") {
  const Region r = modulus_region(0, 3, 0, 2, 30, 20, 4);
  CHECK(r.dx() == doctest::Approx(0.1));
  CHECK(r.cell_points(4, 7).size() == 4);
  for (const Point& p : r.cell_points(4, 7)) {
    CHECK(std::abs(p[0]) == doctest::Approx(r.x_center(4)));
    CHECK(std::abs(p[1]) == doctest::Approx(r.y_center(7)));
    const auto cell = r.locate(p);
    REQUIRE(cell.has_value());
    CHECK(cell->first == 4);
    CHECK(cell->second == 7);
  }
  CHECK_FALSE(r.locate(make_point({5.0, 0.0})).has_value());
  CHECK_THROWS_AS(r.validate(3), Error);

  Region slice;
  slice.mode = RegionMode::ComplexSlice;
  slice.x_low = -2, slice.x_high = 2, slice.y_low = -1, slice.y_high = 1;
  slice.nx = 40, slice.ny = 20;
  slice.fixture = make_point({0.0, 0.5});
  CHECK_NOTHROW(slice.validate(2));
  const Point p = slice.embed(0.25, -0.5);
  CHECK(p[0] == Complex(0.25, -0.5));
  CHECK(p[1] == Complex(0.5));
  CHECK_FALSE(slice.project(make_point({0.0, 0.7})).has_value());
}

TEST_CASE("aggregate rule") {
  using P = PointClass;
  CHECK(aggregate({P::FatouBounded, P::JuliaCandidate, P::FatouEscaping}) == P::JuliaCandidate);
  CHECK(aggregate({P::FatouBounded, P::FatouBounded}) == P::FatouBounded);
  CHECK(aggregate({P::FatouBounded, P::FatouEscaping}) == P::Undetermined);
  CHECK(aggregate({}) == P::Undetermined);
}

TEST_CASE("compare against the set itself and against nothing") {
  const Region region = modulus_region(0, 3, 0, 2, 60, 40, 1);
  const ReferenceSet ref = example1_reference(2.0);
  Raster perfect = blank_raster(region, PointClass::FatouBounded);
  for (int iy = 0; iy < region.ny; ++iy)
    for (int ix = 0; ix < region.nx; ++ix)
      if (membership_moduli(ref, {region.x_center(ix), region.y_center(iy)}))
        perfect.cells[static_cast<std::size_t>(iy * region.nx + ix)] = PointClass::JuliaCandidate;
  const auto rep = compare(perfect, ref, 0.05);
  REQUIRE(rep.agreement.has_value());
  CHECK(*rep.agreement == 1.0);
  CHECK(rep.n_decided + rep.n_band_excluded + rep.n_undetermined == rep.n_cells);
  CHECK(rep.n_band_excluded > 0);

  const auto none = compare(blank_raster(region, PointClass::Undetermined), ref, 0.05);
  CHECK(none.n_decided == 0);
  CHECK_FALSE(none.agreement.has_value());

  // a real segment cannot be judged from moduli
  CHECK_THROWS_AS(compare(perfect, chebyshev_reference(), 0.05), Error);
}

TEST_CASE("band around the reference boundary") {
  const Region region = modulus_region(0, 3, 0, 2, 60, 40, 1);
  const ReferenceSet ref = single_squaring_reference();
  CHECK(near_boundary(ref, region, 1.02, 0.5, 0.05));
  CHECK_FALSE(near_boundary(ref, region, 1.2, 0.5, 0.05));
  CHECK_FALSE(near_boundary(ref, region, 0.5, 0.5, 0.05));
  CHECK(distance_to_set(ref, region, 1.2, 0.5) == doctest::Approx(0.2));
  CHECK(distance_to_set(ref, region, 1.0, 0.5) == 0.0);
  // a solid region: interior cells are far from the boundary
  const ReferenceSet ex1 = example1_reference(2.0);
  CHECK_FALSE(near_boundary(ex1, region, 1.5, 0.5, 0.05));
  CHECK(near_boundary(ex1, region, 1.5, 0.98, 0.05));
}

TEST_CASE("PPM and CSV formats") {
  const Region region = modulus_region(0, 1, 0, 1, 2, 2, 1);
  Raster r = blank_raster(region, PointClass::FatouBounded);
  r.cells = {PointClass::FatouBounded, PointClass::FatouEscaping, PointClass::JuliaCandidate, PointClass::Undetermined};
  const std::string ppm = ppm_bytes(r);
  const std::string header = "P6\n2 2\n255\n";
  REQUIRE(ppm.size() == header.size() + 12);
  CHECK(ppm.substr(0, header.size()) == header);
  // rows go top to bottom, so iy = 1 comes first
  const unsigned char expected[12] = {0, 0, 0, 128, 128, 128, 0, 160, 0, 0, 64, 224};
  for (int i = 0; i < 12; ++i) CHECK(static_cast<unsigned char>(ppm[header.size() + static_cast<std::size_t>(i)]) == expected[i]);

  const auto mixed = palette(PointClass::FatouMixed);
  CHECK((mixed.r == 0 && mixed.g == 160 && mixed.b == 160));

  const std::string csv = csv_text(r);
  std::istringstream in(csv);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "ix,iy,x_center,y_center,class,score");
  ++rows;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);

  const std::string path = temp_path("semidyn_test_raster.csv");
  write_csv(r, path);
  const Raster back = read_csv(path, region);
  CHECK(back.cells == r.cells);
  std::remove(path.c_str());
  CHECK_THROWS_AS(render_ppm(r, "/nonexistent-dir/x.ppm"), Error);
  CHECK_THROWS_AS(read_csv("/nonexistent-dir/x.csv", region), Error);
}

TEST_CASE("escape zone scans are uniformly escaping") {
  const Raster r = scan(example1(), modulus_region(5, 6, 0, 2, 6, 6, 2), ClassifierConfig{}, 1);
  for (auto c : r.cells) CHECK(c == PointClass::FatouEscaping);
}

TEST_CASE("scan is identical for every worker count") {
  const Semigroup g = example1();
  const Region region = modulus_region(0, 3, 0, 2, 24, 16, 2);
  ClassifierConfig cfg;
  cfg.seed = 11;
  const Raster one = scan(g, region, cfg, 1);
  const Raster three = scan(g, region, cfg, 3);
  CHECK(one.cells == three.cells);
  CHECK(one.scores == three.scores);
  CHECK(ppm_bytes(one) == ppm_bytes(three));
  CHECK(csv_text(one) == csv_text(three));
  CHECK(one.config_fingerprint == three.config_fingerprint);
  CHECK(one.generator_fingerprint == generator_fingerprint(g));
  // a scan substitutes its cell diagonal for the resolution
  CHECK(one.config.resolution == doctest::Approx(region.cell_diagonal()));
}

TEST_CASE("small squaring scan traces the torus bands") {
  const Raster r = scan(squaring(), modulus_region(0, 3, 0, 2, 30, 20, 2), ClassifierConfig{}, 2);
  const auto rep = compare(r, single_squaring_reference(), 0.05);
  REQUIRE(rep.agreement.has_value());
  CHECK(*rep.agreement >= 0.9);
}

TEST_CASE("agreement does not drop under refinement") {
  const Semigroup g = example1();
  const ReferenceSet ref = example1_reference(2.0);
  double previous = 0.0;
  for (int n : {12, 24, 48}) {
    const Raster r = scan(g, modulus_region(0, 3, 0, 2, n, n, 2), ClassifierConfig{}, 2);
    const double a = compare(r, ref, 0.1).agreement.value();
    CHECK(a >= previous - 0.02);
    previous = a;
  }
}

TEST_CASE("phase offset does not change modulus verdicts") {
  const Semigroup g = example1();
  Region a = modulus_region(0, 3, 0, 2, 30, 20, 2);
  Region b = a;
  b.phase_offset = 0.37;
  const Raster ra = scan(g, a, ClassifierConfig{}, 2), rb = scan(g, b, ClassifierConfig{}, 2);
  int same = 0;
  for (std::size_t i = 0; i < ra.cells.size(); ++i) same += ra.cells[i] == rb.cells[i];
  CHECK(static_cast<double>(same) / static_cast<double>(ra.cells.size()) >= 0.98);
}

TEST_CASE("raster comparison off the interface band") {
  const Region region = modulus_region(0, 2, 0, 2, 20, 20, 1);
  Raster a = blank_raster(region, PointClass::FatouBounded);
  for (int iy = 0; iy < 20; ++iy) a.cells[static_cast<std::size_t>(iy * 20 + 10)] = PointClass::JuliaCandidate;
  Raster b = a;
  // shifting the Julia column by one cell stays inside the band
  for (int iy = 0; iy < 20; ++iy) {
    b.cells[static_cast<std::size_t>(iy * 20 + 10)] = PointClass::FatouBounded;
    b.cells[static_cast<std::size_t>(iy * 20 + 11)] = PointClass::JuliaCandidate;
  }
  const auto same = compare_rasters(a, a, 0.15);
  CHECK(same.disagreement == 0.0);
  const auto shifted = compare_rasters(a, b, 0.15);
  CHECK(shifted.disagreement == 0.0);
  CHECK(shifted.n_band_excluded > 0);

  const auto band = interface_band(a, 0.15);
  CHECK(band[static_cast<std::size_t>(5 * 20 + 9)]);
  CHECK_FALSE(band[static_cast<std::size_t>(5 * 20 + 2)]);

  // a Julia cell far from any interface in one raster only is a disagreement
  Raster c = blank_raster(region, PointClass::FatouBounded);
  Raster d = blank_raster(region, PointClass::JuliaCandidate);
  const auto all = compare_rasters(c, d, 0.15);
  CHECK(all.disagreement == 1.0);
}
