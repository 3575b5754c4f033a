// Region scans, closed-form reference sets and raster output.
#pragma once

#include "semidyn/classify.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace semidyn {

enum class RegionMode { ModulusPlane, ComplexSlice };

/// ModulusPlane (k = 2): x = |z1|, y = |z2|, each cell sampled at several phases.
/// ComplexSlice: x + iy is the free coordinate, the rest come from the fixture.
struct Region {
  RegionMode mode = RegionMode::ModulusPlane;
  double x_low = 0.0, x_high = 1.0;
  double y_low = 0.0, y_high = 1.0;
  int nx = 2, ny = 2;
  int phase_samples = 1;
  double phase_offset = 0.0;
  int free_coordinate = 0;
  Point fixture;  // ComplexSlice only; the free entry is ignored

  void validate(int k) const;
  double dx() const { return (x_high - x_low) / nx; }
  double dy() const { return (y_high - y_low) / ny; }
  double cell_diagonal() const { return std::hypot(dx(), dy()); }
  double x_center(int ix) const { return x_low + (ix + 0.5) * dx(); }
  double y_center(int iy) const { return y_low + (iy + 0.5) * dy(); }
  std::size_t cell_count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  /// Point of C^k for plane coordinates (u, v); `sample` picks the phase.
  Point embed(double u, double v, int sample = 0) const;
  /// Representative points of a cell (phase_samples of them in ModulusPlane).
  std::vector<Point> cell_points(int ix, int iy) const;
  /// Plane coordinates of z, or nullopt when z is off the slice (ComplexSlice).
  std::optional<std::pair<double, double>> project(const Point& z, double slice_tol = 1e-9) const;
  /// Cell containing z, if inside the region.
  std::optional<std::pair<int, int>> locate(const Point& z, double slice_tol = 1e-9) const;

  friend bool operator==(const Region& a, const Region& b);
};

struct Raster {
  Region region;
  std::vector<PointClass> cells;  // index iy * nx + ix
  std::vector<double> scores;
  ClassifierConfig config;  // as used, with the resolution resolved
  std::string config_fingerprint;
  std::string generator_fingerprint;

  PointClass at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * region.nx + ix]; }
};

/// Cell verdict for ModulusPlane phases: any Julia wins, unanimous Fatou kinds
/// keep their kind, anything else is Undetermined.
PointClass aggregate(const std::vector<PointClass>& samples);

/// Cell-parallel scan; identical output for every worker count.
Raster scan(const Semigroup& g, const Region& region, const ClassifierConfig& cfg, int workers = 1);

std::string generator_fingerprint(const Semigroup& g);

// ---------------------------------------------------------------------------
// reference sets

enum class FactorKind { ModulusInterval, ModulusCircle, RealSegment, Disk };

struct Factor {
  FactorKind kind = FactorKind::Disk;
  double a = 0.0;  // interval/segment low end, circle or disk radius
  double b = 0.0;  // interval/segment high end

  static Factor interval(double r1, double r2) { return {FactorKind::ModulusInterval, r1, r2}; }
  static Factor circle(double r) { return {FactorKind::ModulusCircle, r, r}; }
  static Factor segment(double lo, double hi) { return {FactorKind::RealSegment, lo, hi}; }
  static Factor disk(double r) { return {FactorKind::Disk, r, r}; }

  friend bool operator==(const Factor&, const Factor&) = default;
};

/// Finite union of closed product sets.
struct ReferenceSet {
  std::vector<std::vector<Factor>> terms;

  int dim() const { return terms.empty() ? 0 : static_cast<int>(terms.front().size()); }
  friend bool operator==(const ReferenceSet&, const ReferenceSet&) = default;
};

/// {|z1| <= 1} x {|z2| = 1}  u  {1 <= |z1| <= |a|} x {|z2| <= 1}
ReferenceSet example1_reference(double a);
/// {|z1| = 1} x {|z2| <= 1}  u  {|z1| <= 1} x {|z2| = 1}
ReferenceSet single_squaring_reference();
/// [-1, 1] x {|z2| <= 1}
ReferenceSet chebyshev_reference();

bool membership(const ReferenceSet& ref, const Point& z);
/// Membership from moduli alone; RealSegment factors raise GeometryMismatch.
bool membership_moduli(const ReferenceSet& ref, const std::vector<double>& moduli);

/// Distance in plane coordinates from (u, v) to the set inside the region's slice.
double distance_to_set(const ReferenceSet& ref, const Region& region, double u, double v);
/// True when (u, v) lies within eps of the topological boundary of the set (in the plane).
bool near_boundary(const ReferenceSet& ref, const Region& region, double u, double v, double eps);

struct ComparisonReport {
  int n_cells = 0;
  int n_decided = 0;
  int n_band_excluded = 0;
  int n_undetermined = 0;
  std::optional<double> agreement;  // absent when nothing is decided
  int julia_member = 0, julia_nonmember = 0;
  int fatou_member = 0, fatou_nonmember = 0;
  double epsilon = 0.0;
};

ComparisonReport compare(const Raster& raster, const ReferenceSet& ref, double eps);

struct RasterComparison {
  int n_cells = 0;
  int n_compared = 0;
  int n_band_excluded = 0;
  int n_undecided = 0;
  int n_disagree = 0;
  std::optional<double> disagreement;
  double epsilon = 0.0;
};

/// Cells within eps of a Julia/Fatou interface in either raster are skipped;
/// the rest are compared as Julia versus Fatou.
RasterComparison compare_rasters(const Raster& a, const Raster& b, double eps);

/// Per cell: a Julia and a Fatou cell both occur within eps (plane metric).
std::vector<bool> interface_band(const Raster& r, double eps);

// ---------------------------------------------------------------------------
// output

struct Rgb {
  unsigned char r, g, b;
};
Rgb palette(PointClass c);

std::string ppm_bytes(const Raster& raster);
std::string csv_text(const Raster& raster);
void render_ppm(const Raster& raster, const std::string& path);
void write_csv(const Raster& raster, const std::string& path);
/// Reads cells back from write_csv output for a known region.
Raster read_csv(const std::string& path, const Region& region);

}  // namespace semidyn
