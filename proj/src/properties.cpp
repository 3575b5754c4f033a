#include "semidyn/properties.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace semidyn {

void PropertyReport::finish() {
  violation_rate = n_checked > 0 ? static_cast<double>(n_violations) / n_checked : 0.0;
  pass = !applicable || violation_rate <= threshold;
}

namespace {

constexpr std::size_t kMaxWitnesses = 8;

// Seeded choice of up to n entries, in ascending order so reports read naturally.
std::vector<int> choose(std::vector<int> pool, int n, std::uint64_t seed) {
  KeyedStream rng(seed);
  const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(std::max(n, 0)));
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Point cell_point(const Region& region, int idx, std::uint64_t seed) {
  const auto pts = region.cell_points(idx % region.nx, idx / region.nx);
  KeyedStream rng(hash_combine(seed, static_cast<std::uint64_t>(idx)));
  return pts[static_cast<std::size_t>(rng.below(pts.size()))];
}

void add_witness(PropertyReport& rep, Witness w) {
  if (rep.witnesses.size() < kMaxWitnesses) rep.witnesses.push_back(std::move(w));
}

PropertyReport compare_scans(const std::string& name, const Semigroup& a, const Semigroup& b, const Region& region,
                             const ClassifierConfig& cfg, double eps, double threshold, int workers, RasterPair* rasters) {
  Raster ra = scan(a, region, cfg, workers);
  Raster rb = scan(b, region, cfg, workers);
  const RasterComparison cmp = compare_rasters(ra, rb, eps);
  PropertyReport rep;
  rep.name = name;
  rep.seed = cfg.seed;
  rep.threshold = threshold;
  rep.n_checked = cmp.n_compared;
  rep.n_violations = cmp.n_disagree;
  rep.n_excluded = cmp.n_band_excluded + cmp.n_undecided;
  const auto band = interface_band(ra, eps), band2 = interface_band(rb, eps);
  for (int idx = 0; idx < static_cast<int>(ra.cells.size()) && rep.witnesses.size() < kMaxWitnesses; ++idx) {
    const PointClass x = ra.cells[static_cast<std::size_t>(idx)], y = rb.cells[static_cast<std::size_t>(idx)];
    if ((x == PointClass::JuliaCandidate && is_fatou(y)) || (is_fatou(x) && y == PointClass::JuliaCandidate)) {
      if (band[static_cast<std::size_t>(idx)] || band2[static_cast<std::size_t>(idx)]) continue;
      add_witness(rep, {region.cell_points(idx % region.nx, idx / region.nx).front(), -1, std::nullopt,
                        std::string(to_string(x)) + " vs " + to_string(y)});
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d cells compared, %d in the interface band, %d undecided", cmp.n_compared, cmp.n_band_excluded,
                cmp.n_undecided);
  rep.note = buf;
  rep.finish();
  if (rasters) *rasters = {std::move(ra), std::move(rb), cmp};
  return rep;
}

}  // namespace

Classification classify_like_raster(const Semigroup& g, const Raster& raster, const Point& z) {
  return Classifier(g, raster.config).classify(z);
}

PropertyReport check_forward_invariance(const Semigroup& g, const Raster& raster, double threshold, const SampleOptions& opt) {
  PropertyReport rep;
  rep.name = "forward-invariance";
  rep.threshold = threshold;
  rep.seed = opt.seed;
  const Region& region = raster.region;
  const auto band = interface_band(raster, opt.eps);
  std::vector<int> pool;
  for (int idx = 0; idx < static_cast<int>(raster.cells.size()); ++idx) {
    if (!is_fatou(raster.cells[static_cast<std::size_t>(idx)])) continue;
    if (band[static_cast<std::size_t>(idx)]) ++rep.n_excluded;
    else pool.push_back(idx);
  }
  const Classifier cl(g, raster.config);
  for (int idx : choose(pool, opt.n_samples, opt.seed)) {
    const Point z = cell_point(region, idx, opt.seed);
    for (int i = 0; i < g.size(); ++i) {
      const CompiledMap& f = g.compiled(i);
      if (std::abs(f.jacobian(z).determinant()) <= 1e-8) {
        ++rep.n_excluded;
        continue;
      }
      const Point img = f(z);
      if (const auto cell = region.locate(img); cell && band[static_cast<std::size_t>(cell->second * region.nx + cell->first)]) {
        ++rep.n_excluded;
        continue;
      }
      ++rep.n_checked;
      const PointClass v = cl.classify(img).verdict;
      if (v == PointClass::JuliaCandidate) {
        ++rep.n_violations;
        add_witness(rep, {z, i, std::nullopt, "image classified JuliaCandidate"});
      }
    }
  }
  rep.note = "Fatou cells pushed forward by each generator; cells and images in the interface band are excluded";
  rep.finish();
  return rep;
}

PropertyReport check_backward_invariance(const Semigroup& g, const Raster& raster, double threshold, const SampleOptions& opt) {
  PropertyReport rep;
  rep.name = "backward-invariance";
  rep.threshold = threshold;
  rep.seed = opt.seed;
  std::vector<int> exact;
  for (int i = 0; i < g.size(); ++i)
    if (g.generator(i).is_triangular()) exact.push_back(i);
  if (exact.empty()) {
    rep.applicable = false;
    rep.note = std::string(to_string(ErrorCode::PreimageUnavailable)) + ": no generator admits exact preimages";
    rep.finish();
    return rep;
  }

  const Region& region = raster.region;
  const auto band = interface_band(raster, opt.eps);
  std::vector<int> pool;
  for (int idx = 0; idx < static_cast<int>(raster.cells.size()); ++idx) {
    if (raster.cells[static_cast<std::size_t>(idx)] != PointClass::JuliaCandidate) continue;
    if (band[static_cast<std::size_t>(idx)]) ++rep.n_excluded;
    else pool.push_back(idx);
  }
  const Classifier cl(g, raster.config);
  const Polydisc everywhere = Polydisc::around_origin(g.dim(), raster.config.R);
  for (int idx : choose(pool, opt.n_samples, opt.seed)) {
    const Point q = cell_point(region, idx, opt.seed);
    if (cl.classify(q).verdict != PointClass::JuliaCandidate) {
      ++rep.n_excluded;
      continue;
    }
    for (int i : exact) {
      const PreimageSet pre = preimages(g.generator(i), q, everywhere);
      if (!pre.complete || pre.points.empty()) {
        ++rep.n_excluded;
        continue;
      }
      ++rep.n_checked;
      const bool some_julia = std::any_of(pre.points.begin(), pre.points.end(),
                                          [&](const Point& p) { return cl.classify(p).verdict == PointClass::JuliaCandidate; });
      if (!some_julia) {
        ++rep.n_violations;
        add_witness(rep, {q, i, std::nullopt, "every preimage classified Fatou"});
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "exact preimages under %zu of %d generators; a violation needs all preimages Fatou", exact.size(),
                g.size());
  rep.note = buf;
  rep.finish();
  return rep;
}

PropertyReport check_finite_index_equality(const Semigroup& g, const PowerTuple& l, const Region& region,
                                           const ClassifierConfig& cfg, double eps, double threshold, int workers,
                                           RasterPair* rasters) {
  const Semigroup h = power_subsemigroup(g, l);
  return compare_scans("finite-index", g, h, region, cfg, eps, threshold, workers, rasters);
}

PropertyReport check_power_tuple_independence(const Semigroup& g, const PowerTuple& l, const PowerTuple& l2,
                                              const Region& region, const ClassifierConfig& cfg, double eps, double threshold,
                                              int workers, RasterPair* rasters) {
  for (int i = 0; i < g.size(); ++i)
    for (int j = i + 1; j < g.size(); ++j)
      if (!check_commuting(g.generator(i), g.generator(j), 64, 1e-9, cfg.seed))
        throw Error(ErrorCode::NotCommuting, "generators " + std::to_string(i) + " and " + std::to_string(j) + " do not commute");
  return compare_scans("power-tuple", power_subsemigroup(g, l), power_subsemigroup(g, l2), region, cfg, eps, threshold, workers,
                       rasters);
}

bool check_commuting(const PolyMap& f, const PolyMap& h, int n_points, double tol, std::uint64_t seed) {
  if (f.dim() != h.dim()) throw Error(ErrorCode::DimensionMismatch, "maps differ in dimension");
  const CompiledMap cf(f), ch(h);
  for (const Point& z : halton_points(Polydisc::around_origin(f.dim(), 1.0), n_points, seed)) {
    const Point fh = cf(ch(z)), hf = ch(cf(z));
    if (!((fh - hf).norm() <= tol * (1.0 + std::max(fh.norm(), hf.norm())))) return false;
  }
  return true;
}

PropertyReport check_boundary_containment(const Semigroup& g, const ComponentLabeling& labeling, int n_boundary_cells,
                                          double threshold, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "boundary-containment";
  rep.threshold = threshold;
  rep.seed = seed;
  const Region& region = labeling.region;
  const int nx = region.nx, ny = region.ny;

  // where each generator sends each component: the most common label among images of its cells
  std::vector<std::vector<int>> target(static_cast<std::size_t>(labeling.count), std::vector<int>(static_cast<std::size_t>(g.size()), -1));
  for (int c = 0; c < labeling.count; ++c) {
    const auto& cells = labeling.cells[static_cast<std::size_t>(c)];
    const std::size_t n = std::min<std::size_t>(cells.size(), 16);
    for (int i = 0; i < g.size(); ++i) {
      std::map<int, int> votes;
      for (std::size_t s = 0; s < n; ++s) {
        const int idx = cells[(2 * s + 1) * cells.size() / (2 * n)];
        const int t = labeling.component_of(g.compiled(i)(region.cell_points(idx % nx, idx / nx).front()));
        if (t >= 0) ++votes[t];
      }
      int best = -1, best_votes = 0;
      for (const auto& [t, v] : votes)
        if (v > best_votes) best = t, best_votes = v;
      target[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = best;
    }
  }

  std::vector<int> pool;  // encoded as component * cells + cell
  const int n_cells = nx * ny;
  for (int c = 0; c < labeling.count; ++c)
    for (int idx : labeling.boundary_cells(c)) pool.push_back(c * n_cells + idx);

  // The true boundary lies somewhere across the Julia band next to a
  // boundary cell. The segment from the cell through the band to the next
  // Fatou cell (of another component) is pushed forward instead of the cell alone.
  constexpr int kMaxWalk = 32;
  for (int code : choose(pool, n_boundary_cells, seed)) {
    const int c = code / n_cells, idx = code % n_cells;
    const int ix = idx % nx, iy = idx / nx;
    int sx = 0, sy = 0;
    const int dirs[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    for (const auto& dir : dirs) {
      const int x = ix + dir[0], y = iy + dir[1];
      if (x >= 0 && x < nx && y >= 0 && y < ny && labeling.label_at(x, y) != c) {
        sx = dir[0], sy = dir[1];
        break;
      }
    }
    int ox = ix + sx, oy = iy + sy, walked = 1;
    while (walked < kMaxWalk && labeling.label_at(ox, oy) < 0) {
      const int x = ox + sx, y = oy + sy;
      if (x < 0 || x >= nx || y < 0 || y >= ny) break;
      ox = x, oy = y, ++walked;
    }
    const int n_points = 4 * walked + 1;
    bool judged = false, ok = false;
    for (int i = 0; i < g.size() && !ok; ++i) {
      const int d = target[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
      if (d < 0) continue;
      for (int s = 0; s < n_points && !ok; ++s) {
        const double t = static_cast<double>(s) / (n_points - 1);
        const double u = region.x_center(ix) + t * (region.x_center(ox) - region.x_center(ix));
        const double v = region.y_center(iy) + t * (region.y_center(oy) - region.y_center(iy));
        const auto cell = region.locate(g.compiled(i)(region.embed(u, v)));
        if (!cell) continue;
        judged = true;
        // within one cell of the boundary of d: the 3x3 block meets d and its complement
        bool in = false, out = false;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = cell->first + dx, y = cell->second + dy;
            if (x < 0 || x >= nx || y < 0 || y >= ny) continue;
            (labeling.label_at(x, y) == d ? in : out) = true;
          }
        ok = in && out;
      }
    }
    if (!judged) {
      ++rep.n_excluded;
      continue;
    }
    ++rep.n_checked;
    if (!ok) {
      ++rep.n_violations;
      add_witness(rep, {region.cell_points(ix, iy).front(), -1, std::nullopt,
                        "component " + std::to_string(c) + ": no generator lands near a boundary"});
    }
  }
  rep.note = "approximate: boundaries are resolved to one raster cell; images leaving the region are excluded";
  rep.finish();
  return rep;
}

PropertyReport check_local_boundedness(const Semigroup& g, const ComponentLabeling& labeling, const ClassifierConfig& cfg,
                                       int n_cells, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "local-boundedness";
  rep.threshold = 0.0;
  rep.seed = seed;
  std::vector<int> pool;
  for (int c = 0; c < labeling.count; ++c)
    if (labeling.kinds[static_cast<std::size_t>(c)] == PointClass::FatouBounded)
      for (int idx : labeling.cells[static_cast<std::size_t>(c)]) pool.push_back(idx);
  const auto words = sample_words(g, RandomSampler{cfg.N, cfg.L, cfg.seed});
  for (int idx : choose(pool, n_cells, seed)) {
    const Point z = cell_point(labeling.region, idx, seed);
    ++rep.n_checked;
    for (const Word& w : words) {
      const OrbitRecord rec = orbit(g, w, z, cfg.R);
      if (!rec.completed) {
        ++rep.n_violations;
        add_witness(rep, {z, -1, w, "orbit left the ball of radius R"});
        break;
      }
    }
  }
  rep.note =
      "premise only: sampled orbits from bounded components stay below R; the polynomial hull and Runge conclusions "
      "are not certified";
  rep.finish();
  return rep;
}

PropertyReport check_volume_divergence(const Semigroup& g, const ComponentLabeling& labeling, int component,
                                       const std::optional<RecurrenceReport>& recurrence, const DivergenceOptions& opt) {
  for (int i = 0; i < g.size(); ++i)
    if (!is_volume_preserving(g.generator(i)))
      throw Error(ErrorCode::NotVolumePreserving, "generator " + std::to_string(i) + " has non-constant or non-unit Jacobian determinant");
  if (component < 0 || component >= labeling.count) throw Error(ErrorCode::EmptyComponent, "component " + std::to_string(component));

  PropertyReport rep;
  rep.name = "volume-divergence";
  rep.threshold = 0.0;
  rep.seed = opt.seed;
  const auto& cells = labeling.cells[static_cast<std::size_t>(component)];
  const std::size_t n = std::min<std::size_t>(cells.size(), static_cast<std::size_t>(std::max(opt.n_samples, 1)));
  std::vector<Point> samples;
  for (std::size_t s = 0; s < n; ++s) {
    const int idx = cells[(2 * s + 1) * cells.size() / (2 * n)];
    samples.push_back(labeling.region.cell_points(idx % labeling.region.nx, idx / labeling.region.nx).front());
  }

  bool found = false;
  for (int s = 0; s < opt.n_sequences && !found; ++s) {
    ++rep.n_checked;
    for (int len : opt.lengths) {
      KeyedStream rng(hash_combine(hash_combine(opt.seed, static_cast<std::uint64_t>(s)), static_cast<std::uint64_t>(len)));
      Word w;
      for (int l = 0; l < len; ++l) w.indices.push_back(static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(g.size()))));
      for (const Point& z : samples) {
        const OrbitRecord rec = orbit(g, w, z, opt.R);
        if (!rec.completed) {
          found = true;
          add_witness(rep, {z, -1, w, "orbit exceeds R"});
          break;
        }
      }
      if (found) break;
    }
  }
  const bool recurrent = recurrence && recurrence->verdict == RecurrenceVerdict::RecurrentLikely;
  rep.n_violations = found || recurrent ? 0 : 1;
  rep.note = found ? "a sampled word sequence diverges on the component"
                   : (recurrent ? "no divergent sequence sampled, but the component tested recurrent"
                                : "neither a divergent sequence nor recurrence was observed");
  rep.finish();
  rep.pass = rep.n_violations == 0;
  return rep;
}

}  // namespace semidyn
