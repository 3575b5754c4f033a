// Sample-based checks of set-level statements about Fatou and Julia sets.
// Every check reports a violation rate against an explicit threshold.
#pragma once

#include "semidyn/components.hpp"

#include <optional>
#include <string>
#include <vector>

namespace semidyn {

struct Witness {
  Point point;          // the sampled point (cell point or Julia target)
  int generator = -1;   // generator involved, if any
  std::optional<Word> word;
  std::string detail;
};

struct PropertyReport {
  std::string name;
  bool applicable = true;  // false when the premise could not be set up (see note)
  int n_checked = 0;
  int n_violations = 0;
  int n_excluded = 0;
  double threshold = 0.05;
  double violation_rate = 0.0;
  bool pass = true;
  std::uint64_t seed = 0;
  std::vector<Witness> witnesses;  // up to 8
  std::string note;

  /// Fills violation_rate and pass from the counts.
  void finish();
};

struct SampleOptions {
  int n_samples = 200;
  double eps = 0.05;  // interface band in plane units
  std::uint64_t seed = 0;
};

/// Fatou cells off the raster's own interface band are pushed forward by each
/// generator (skipping |det D phi| <= 1e-8); a Julia verdict at the image is a violation.
PropertyReport check_forward_invariance(const Semigroup& g, const Raster& raster, double threshold = 0.05,
                                        const SampleOptions& opt = {});

/// Julia points q are pulled back by generators admitting exact preimages; a
/// violation is a q whose preimages are all Fatou.
PropertyReport check_backward_invariance(const Semigroup& g, const Raster& raster, double threshold = 0.05,
                                         const SampleOptions& opt = {});

/// The cell points a Julia-point sample would use, exposed for witness re-runs.
Classification classify_like_raster(const Semigroup& g, const Raster& raster, const Point& z);

struct RasterPair {
  Raster first, second;
  RasterComparison comparison;
};

/// G against the power subsemigroup H = G_l, compared cellwise off the interface band.
PropertyReport check_finite_index_equality(const Semigroup& g, const PowerTuple& l, const Region& region,
                                           const ClassifierConfig& cfg, double eps = 0.05, double threshold = 0.05,
                                           int workers = 1, RasterPair* rasters = nullptr);

/// G_l against G_l'; throws NotCommuting unless every pair of generators commutes.
PropertyReport check_power_tuple_independence(const Semigroup& g, const PowerTuple& l, const PowerTuple& l2,
                                              const Region& region, const ClassifierConfig& cfg, double eps = 0.05,
                                              double threshold = 0.05, int workers = 1, RasterPair* rasters = nullptr);

/// |F(H(z)) - H(F(z))| <= tol (1 + max(|F(H(z))|, |H(F(z))|)) at seeded points of the unit polydisc.
bool check_commuting(const PolyMap& f, const PolyMap& h, int n_points = 64, double tol = 1e-9, std::uint64_t seed = 0);

/// Boundary cells p of components: some generator must send p to within one
/// cell of the boundary of the component its images of the component land in.
PropertyReport check_boundary_containment(const Semigroup& g, const ComponentLabeling& labeling, int n_boundary_cells = 200,
                                          double threshold = 0.1, std::uint64_t seed = 0);

/// Premise only: orbits of bounded-component cells stay below R along sampled words.
PropertyReport check_local_boundedness(const Semigroup& g, const ComponentLabeling& labeling, const ClassifierConfig& cfg,
                                       int n_cells = 100, std::uint64_t seed = 0);

struct DivergenceOptions {
  int n_sequences = 32;
  std::vector<int> lengths{4, 8, 16, 32, 64};
  int n_samples = 8;
  double R = 1e6;
  std::uint64_t seed = 0;
};

/// Either some sampled word sends the component's samples beyond R, or the
/// given recurrence report is RecurrentLikely. Throws NotVolumePreserving.
PropertyReport check_volume_divergence(const Semigroup& g, const ComponentLabeling& labeling, int component,
                                       const std::optional<RecurrenceReport>& recurrence = std::nullopt,
                                       const DivergenceOptions& opt = {});

}  // namespace semidyn
