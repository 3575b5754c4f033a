// Fatou components of rasters and the behaviour of words on them: recurrence
// versus wandering, rank of limit maps, and the fixed set of a limit.
#pragma once

#include "semidyn/fixedpoints.hpp"
#include "semidyn/gridscan.hpp"

#include <string>
#include <vector>

namespace semidyn {

struct CellBox {
  int ix0 = 0, iy0 = 0, ix1 = 0, iy1 = 0;  // inclusive
};

/// 4-connected sets of cells sharing one Fatou verdict. Labels follow the
/// row-major position of each component's first cell; -1 marks Julia and
/// Undetermined cells.
struct ComponentLabeling {
  Region region;
  std::vector<PointClass> classes;
  std::vector<int> labels;
  int count = 0;
  std::vector<std::vector<int>> cells;  // cell indices per component, ascending
  std::vector<CellBox> boxes;
  std::vector<PointClass> kinds;

  int label_at(int ix, int iy) const { return labels[static_cast<std::size_t>(iy) * region.nx + ix]; }
  /// Component containing z, -1 if none or outside the region.
  int component_of(const Point& z) const;
  /// Cells of the component with a 4-neighbour (inside the raster) outside it.
  std::vector<int> boundary_cells(int component) const;
};

ComponentLabeling label_components(const Raster& raster);

enum class RecurrenceVerdict { RecurrentLikely, WanderingLikely, Inconclusive };
const char* to_string(RecurrenceVerdict v);

struct RecurrenceOptions {
  std::vector<int> lengths{1, 2, 3, 4, 5, 6};  // strictly increasing word lengths per sequence
  int n_samples = 8;                           // points of the component pushed forward
  int min_return_lengths = 3;                  // proxy for "infinitely often"
  double R = 1e6;
  std::uint64_t seed = 0;
};

struct RecurrenceReport {
  int component = -1;
  int n_sequences = 0;
  int n_recurrent = 0;
  int n_escaping = 0;
  int distinct_target_components = 0;
  std::vector<int> cumulative_targets;  // distinct targets reached up to each length
  RecurrenceVerdict verdict = RecurrenceVerdict::Inconclusive;
  std::string note;
};

/// Throws EmptyComponent for an unknown or empty component.
RecurrenceReport recurrence_test(const Semigroup& g, const ComponentLabeling& labeling, int component, int n_sequences,
                                 const RecurrenceOptions& opt = {});

struct LimitMapEstimate {
  int n = 0;
  std::vector<Point> samples;
  std::vector<int> sample_ranks;  // -1 where the orbit left the bound
  std::vector<double> singular_values;  // of the sample attaining the rank
  int rank = 0;
  bool converged = false;  // every orbit stayed finite and below the bound
};

/// Rank of D(phi^n) counted against rank_tol * max(1, largest singular value), maximised over samples.
LimitMapEstimate limit_rank(const MapView& phi, const std::vector<Point>& samples, int n, double rank_tol = 1e-6,
                            double bound = 1e6);

enum class FitKind { Empty, Point, Line, Subspace, Full };
const char* to_string(FitKind k);

struct ManifoldEstimate {
  std::vector<Point> cloud;
  std::vector<double> residuals;  // |phi^period(x) - x| per cloud point
  int period = 1;
  int n_rejected = 0;  // unbounded orbits, unconverged limits, limits outside the region
  FitKind fit = FitKind::Empty;
  int fit_dimension = -1;
  Point fit_center;
  Point fit_direction;  // Line only: unit tangent
  Point fit_normal;     // Line in C^2 only: unit normal, the line is <normal, z - center> = 0
  double fit_rms = 0.0;  // distance of the cloud from the fitted set
};

ManifoldEstimate estimate_limit_manifold(const MapView& phi, const std::vector<Point>& samples, int n, double residual_tol = 1e-6,
                                         const Polydisc* region = nullptr, double bound = 1e6);

/// Samples the polydisc with halton_points and keeps limits inside it.
ManifoldEstimate estimate_limit_manifold(const MapView& phi, const Polydisc& region, int n_samples, int n,
                                         double residual_tol = 1e-6, std::uint64_t seed = 0);

}  // namespace semidyn
