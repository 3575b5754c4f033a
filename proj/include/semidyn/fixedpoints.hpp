// Fixed points of maps and words, their linear type, covering relations and
// backward orbits.
#pragma once

#include "semidyn/semigroup.hpp"

#include <string>
#include <vector>

namespace semidyn {

/// {z : |z_i - center_i| <= radius for all i}
struct Polydisc {
  Point center;
  double radius = 1.0;

  static Polydisc around_origin(int k, double radius) { return {Point::Zero(k), radius}; }
  bool contains(const Point& z, double slack = 0.0) const;
};

/// Low-discrepancy points of a polydisc: a Halton sequence with a seeded
/// Cranley-Patterson shift, mapped area-uniformly onto each disc.
std::vector<Point> halton_points(const Polydisc& region, int count, std::uint64_t seed);

enum class FixedPointKind { Attracting, Repelling, Saddle, Indeterminate };
const char* to_string(FixedPointKind kind);

struct FixedPointRecord {
  Point location;
  double residual = 0.0;
  std::vector<Complex> eigenvalues;  // decreasing modulus
  FixedPointKind kind = FixedPointKind::Indeterminate;
  double jacobian_det_modulus = 0.0;
};

struct NewtonOptions {
  int n_starts = 200;
  double tol = 1e-10;
  int max_iter = 100;
  std::uint64_t seed = 0;
};

/// Sorted by the (re, im) parts of the coordinates, duplicates within 10 tol merged.
std::vector<FixedPointRecord> find_fixed_points(const MapView& f, const Polydisc& region, const NewtonOptions& opt = {});

/// Eigenvalues by decreasing modulus (closed form for 2x2).
std::vector<Complex> eigenvalues(const Jacobian& m);

/// Throws NotAFixedPoint when |F(p) - p| > residual_tol (1 + |p|).
FixedPointRecord classify_fixed_point(const MapView& f, const Point& p, double tol_unit = 1e-6, double residual_tol = 1e-8);

bool is_invertible_at(const MapView& f, const Point& p, double tol = 1e-10);

/// Heuristic evidence for B(center, r) being compactly contained in F(B(center, r)).
struct CoveringReport {
  Point center;
  double radius = 0.0;
  double margin = 0.1;
  int n_boundary = 0;
  double min_boundary_image_modulus = 0.0;  // min over the sphere of |F(b) - center|
  bool contains_preimage_of_center = false;
  bool verdict = false;
  std::string note;
};

CoveringReport covering_check(const MapView& f, const Point& center, double r, double margin = 0.1, int n_boundary = 256,
                              std::uint64_t seed = 0);

struct BackwardOrbitTree {
  struct Node {
    Point z;
    int parent = -1;  // index into the previous level
  };
  Point root;
  std::vector<std::vector<Node>> levels;  // levels[0] holds the root alone
  bool exact = false;
  bool truncated = false;
  std::size_t newton_runs = 0;

  std::size_t size() const;
};

/// Exact mode (root finding, one coordinate at a time) for triangular maps,
/// otherwise multistart Newton with the tree marked truncated.
/// `budget` bounds the node count, and the Newton runs in general mode.
BackwardOrbitTree backward_orbit(const PolyMap& f, const Point& p, int depth, const Polydisc& region,
                                 std::size_t budget = 10000, const NewtonOptions& opt = {});

struct PreimageSet {
  std::vector<Point> points;
  bool exact = false;
  bool complete = false;  // exact and no free coordinate was met
  std::size_t newton_runs = 0;
};

/// Solutions of F(z) = target inside the region.
PreimageSet preimages(const PolyMap& f, const Point& target, const Polydisc& region, const NewtonOptions& opt = {});

}  // namespace semidyn
