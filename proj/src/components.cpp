#include "semidyn/components.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace semidyn {

int ComponentLabeling::component_of(const Point& z) const {
  const auto cell = region.locate(z);
  if (!cell) return -1;
  return label_at(cell->first, cell->second);
}

std::vector<int> ComponentLabeling::boundary_cells(int component) const {
  std::vector<int> out;
  if (component < 0 || component >= count) return out;
  const int nx = region.nx, ny = region.ny;
  for (int idx : cells[static_cast<std::size_t>(component)]) {
    const int ix = idx % nx, iy = idx / nx;
    const int nb[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
    for (const auto& p : nb) {
      if (p[0] < 0 || p[0] >= nx || p[1] < 0 || p[1] >= ny) continue;
      if (label_at(p[0], p[1]) != component) {
        out.push_back(idx);
        break;
      }
    }
  }
  return out;
}

ComponentLabeling label_components(const Raster& raster) {
  ComponentLabeling out;
  out.region = raster.region;
  out.classes = raster.cells;
  const int nx = raster.region.nx, ny = raster.region.ny;
  out.labels.assign(raster.cells.size(), -1);
  std::vector<int> stack;
  for (int start = 0; start < nx * ny; ++start) {
    const PointClass kind = raster.cells[static_cast<std::size_t>(start)];
    if (!is_fatou(kind) || out.labels[static_cast<std::size_t>(start)] >= 0) continue;
    const int label = out.count++;
    std::vector<int> members;
    CellBox box{start % nx, start / nx, start % nx, start / nx};
    out.labels[static_cast<std::size_t>(start)] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      members.push_back(idx);
      const int ix = idx % nx, iy = idx / nx;
      box.ix0 = std::min(box.ix0, ix), box.ix1 = std::max(box.ix1, ix);
      box.iy0 = std::min(box.iy0, iy), box.iy1 = std::max(box.iy1, iy);
      const int nb[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
      for (const auto& p : nb) {
        if (p[0] < 0 || p[0] >= nx || p[1] < 0 || p[1] >= ny) continue;
        const int j = p[1] * nx + p[0];
        if (out.labels[static_cast<std::size_t>(j)] >= 0 || raster.cells[static_cast<std::size_t>(j)] != kind) continue;
        out.labels[static_cast<std::size_t>(j)] = label;
        stack.push_back(j);
      }
    }
    std::sort(members.begin(), members.end());
    out.cells.push_back(std::move(members));
    out.boxes.push_back(box);
    out.kinds.push_back(kind);
  }
  return out;
}

const char* to_string(RecurrenceVerdict v) {
  switch (v) {
    case RecurrenceVerdict::RecurrentLikely: return "RecurrentLikely";
    case RecurrenceVerdict::WanderingLikely: return "WanderingLikely";
    case RecurrenceVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

RecurrenceReport recurrence_test(const Semigroup& g, const ComponentLabeling& labeling, int component, int n_sequences,
                                 const RecurrenceOptions& opt) {
  if (component < 0 || component >= labeling.count || labeling.cells[static_cast<std::size_t>(component)].empty())
    throw Error(ErrorCode::EmptyComponent, "component " + std::to_string(component));
  for (std::size_t j = 0; j < opt.lengths.size(); ++j)
    if (opt.lengths[j] < 1 || (j > 0 && opt.lengths[j] <= opt.lengths[j - 1]))
      throw Error(ErrorCode::ConfigError, "recurrence word lengths must be positive and strictly increasing");

  RecurrenceReport rep;
  rep.component = component;
  rep.n_sequences = std::max(n_sequences, 0);
  rep.note =
      "sampled evidence only: a sequence without returns argues against recurrence, "
      "while returns along every sampled sequence do not prove it for all sequences";

  // evenly spread cells of the component, first phase sample of each
  const auto& cells = labeling.cells[static_cast<std::size_t>(component)];
  const std::size_t n_samples = std::min<std::size_t>(static_cast<std::size_t>(std::max(opt.n_samples, 1)), cells.size());
  std::vector<Point> samples;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int idx = cells[(2 * i + 1) * cells.size() / (2 * n_samples)];
    samples.push_back(labeling.region.cell_points(idx % labeling.region.nx, idx / labeling.region.nx).front());
  }

  const std::size_t n_len = opt.lengths.size();
  std::vector<std::set<int>> targets_at(n_len);
  for (int s = 0; s < rep.n_sequences; ++s) {
    int return_lengths = 0;
    bool all_escaped_last = false;
    for (std::size_t j = 0; j < n_len; ++j) {
      KeyedStream rng(hash_combine(hash_combine(opt.seed, static_cast<std::uint64_t>(s)), static_cast<std::uint64_t>(opt.lengths[j])));
      Word w;
      for (int l = 0; l < opt.lengths[j]; ++l) w.indices.push_back(static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(g.size()))));
      bool returned = false;
      int escaped = 0;
      for (const Point& z : samples) {
        const auto img = eval_word(g, w, z);
        if (!img || !all_finite(*img) || img->norm() > opt.R) {
          ++escaped;
          continue;
        }
        const int target = labeling.component_of(*img);
        if (target == component) returned = true;
        else if (target >= 0) targets_at[j].insert(target);
      }
      return_lengths += returned;
      if (j + 1 == n_len) all_escaped_last = escaped == static_cast<int>(samples.size());
    }
    if (return_lengths >= opt.min_return_lengths) ++rep.n_recurrent;
    if (all_escaped_last) ++rep.n_escaping;
  }

  std::set<int> cumulative;
  for (std::size_t j = 0; j < n_len; ++j) {
    cumulative.insert(targets_at[j].begin(), targets_at[j].end());
    rep.cumulative_targets.push_back(static_cast<int>(cumulative.size()));
  }
  rep.distinct_target_components = static_cast<int>(cumulative.size());

  int run = 1;
  bool growing = false;
  for (std::size_t j = 1; j < n_len; ++j) {
    run = rep.cumulative_targets[j] > rep.cumulative_targets[j - 1] ? run + 1 : 1;
    growing = growing || run >= 3;
  }
  if (rep.n_sequences == 0)
    rep.verdict = RecurrenceVerdict::Inconclusive;
  else if (rep.n_recurrent == rep.n_sequences)
    rep.verdict = RecurrenceVerdict::RecurrentLikely;
  else if (growing)
    rep.verdict = RecurrenceVerdict::WanderingLikely;
  else
    rep.verdict = RecurrenceVerdict::Inconclusive;
  return rep;
}

namespace {

// phi^n(z) together with the Jacobian product; false when the orbit leaves the bound
bool iterate(const MapView& phi, Point& z, int n, double bound, Jacobian* jac) {
  const int k = phi.dim();
  Point next(k);
  Jacobian step;
  if (jac) *jac = Jacobian::Identity(k, k);
  for (int i = 0; i < n; ++i) {
    if (jac) {
      phi.eval_with_jacobian(z, next, step);
      *jac = (step * *jac).eval();
    } else {
      phi.eval(z, next);
    }
    z = next;
    if (!all_finite(z) || z.norm() > bound) return false;
  }
  return jac ? jac->allFinite() : true;
}

}  // namespace

LimitMapEstimate limit_rank(const MapView& phi, const std::vector<Point>& samples, int n, double rank_tol, double bound) {
  if (samples.empty()) throw Error(ErrorCode::ConfigError, "limit_rank needs samples");
  if (n < 1) throw Error(ErrorCode::ConfigError, "iterate count must be at least 1");
  LimitMapEstimate est;
  est.n = n;
  est.samples = samples;
  est.converged = true;
  int best = -1;
  for (const Point& x : samples) {
    Point z = x;
    Jacobian jac;
    if (!iterate(phi, z, n, bound, &jac)) {
      est.sample_ranks.push_back(-1);
      est.converged = false;
      continue;
    }
    const Eigen::MatrixXcd dense = jac;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense);
    const auto& sv = svd.singularValues();
    const double threshold = rank_tol * std::max(1.0, sv(0));
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > threshold;
    est.sample_ranks.push_back(r);
    if (r > best) {
      best = r;
      est.singular_values.assign(sv.data(), sv.data() + sv.size());
    }
  }
  est.rank = std::max(best, 0);
  return est;
}

const char* to_string(FitKind k) {
  switch (k) {
    case FitKind::Empty: return "Empty";
    case FitKind::Point: return "Point";
    case FitKind::Line: return "Line";
    case FitKind::Subspace: return "Subspace";
    case FitKind::Full: return "Full";
  }
  return "?";
}

ManifoldEstimate estimate_limit_manifold(const MapView& phi, const std::vector<Point>& samples, int n, double residual_tol,
                                         const Polydisc* region, double bound) {
  if (samples.empty()) throw Error(ErrorCode::ConfigError, "estimate_limit_manifold needs samples");
  if (n < 1) throw Error(ErrorCode::ConfigError, "iterate count must be at least 1");
  const int k = phi.dim();
  ManifoldEstimate est;

  std::vector<Point> limits;
  for (const Point& x : samples) {
    Point z = x;
    if (iterate(phi, z, n, bound, nullptr)) limits.push_back(z);
    else ++est.n_rejected;
  }

  // residuals under phi^l for l = 1, 2, 3; the period keeping most points wins
  std::vector<std::array<double, 3>> res(limits.size());
  for (std::size_t i = 0; i < limits.size(); ++i) {
    Point z = limits[i];
    for (int l = 0; l < 3; ++l) {
      const bool ok = iterate(phi, z, 1, bound, nullptr);
      res[i][static_cast<std::size_t>(l)] = ok ? (z - limits[i]).norm() : std::numeric_limits<double>::infinity();
    }
  }
  int best_count = -1;
  for (int l = 1; l <= 3; ++l) {
    int c = 0;
    for (const auto& r : res) c += r[static_cast<std::size_t>(l - 1)] <= residual_tol;
    if (c > best_count) best_count = c, est.period = l;
  }
  for (std::size_t i = 0; i < limits.size(); ++i) {
    const double r = res[i][static_cast<std::size_t>(est.period - 1)];
    if (r > residual_tol || (region && !region->contains(limits[i], 1e-12))) {
      ++est.n_rejected;
      continue;
    }
    est.cloud.push_back(limits[i]);
    est.residuals.push_back(r);
  }
  if (est.cloud.empty()) return est;

  const auto m = static_cast<Eigen::Index>(est.cloud.size());
  est.fit_center = Point::Zero(k);
  for (const Point& p : est.cloud) est.fit_center += p;
  est.fit_center /= static_cast<double>(m);
  double radius = 0.0;
  for (const Point& p : est.cloud) radius = std::max(radius, (p - est.fit_center).norm());
  const double scale = 10.0 * residual_tol;
  if (2.0 * radius < scale) {
    est.fit = FitKind::Point;
    est.fit_dimension = 0;
    est.fit_rms = radius;
    return est;
  }

  // total least squares: the smallest span whose orthogonal remainder is at noise level
  Eigen::MatrixXcd centered(m, k);
  for (Eigen::Index i = 0; i < m; ++i) centered.row(i) = (est.cloud[static_cast<std::size_t>(i)] - est.fit_center).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int dim = k;
  for (int d = 1; d < k; ++d) {
    double tail = 0.0;
    for (Eigen::Index i = d; i < sv.size(); ++i) tail += sv(i) * sv(i);
    const double rms = std::sqrt(tail / static_cast<double>(m));
    if (rms <= scale) {
      dim = d;
      est.fit_rms = rms;
      break;
    }
  }
  est.fit_dimension = dim;
  if (dim == k) {
    est.fit = FitKind::Full;
    return est;
  }
  est.fit = dim == 1 ? FitKind::Line : FitKind::Subspace;
  if (dim == 1) {
    est.fit_direction = svd.matrixV().col(0);
    if (k == 2) {
      est.fit_normal = make_point({est.fit_direction[1], -est.fit_direction[0]});
      est.fit_normal /= est.fit_normal.norm();
    }
  }
  return est;
}

ManifoldEstimate estimate_limit_manifold(const MapView& phi, const Polydisc& region, int n_samples, int n, double residual_tol,
                                         std::uint64_t seed) {
  return estimate_limit_manifold(phi, halton_points(region, n_samples, seed), n, residual_tol, &region);
}

}  // namespace semidyn
