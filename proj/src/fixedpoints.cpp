#include "semidyn/fixedpoints.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace semidyn {

bool Polydisc::contains(const Point& z, double slack) const {
  if (z.size() != center.size()) throw Error(ErrorCode::DimensionMismatch, "point and polydisc differ in dimension");
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (std::abs(z[i] - center[i]) > radius + slack) return false;
  return true;
}

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, out = 0.0;
  while (i > 0) {
    out += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return out;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

bool lex_less(const Point& a, const Point& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
    if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
  }
  return false;
}

// Newton on F(z) - z (fixed) or F(z) - target. One extra step is taken after
// the tolerance is met, which makes duplicate detection at 10 tol reliable.
std::optional<Point> newton(const MapView& f, Point z, const Point* target, double tol, int max_iter) {
  const int k = f.dim();
  Point fz(k);
  Jacobian jac;
  for (int it = 0; it < max_iter; ++it) {
    f.eval_with_jacobian(z, fz, jac);
    if (!all_finite(fz) || !jac.allFinite()) return std::nullopt;
    const Point g = fz - (target ? *target : z);
    if (!target) jac -= Jacobian::Identity(k, k);
    Eigen::PartialPivLU<Jacobian> lu(jac);
    const bool solvable = std::abs(lu.determinant()) > 1e-300;
    if (g.norm() <= tol * (1.0 + z.norm())) {
      if (solvable) {
        const Point next = z + lu.solve(-g);
        Point fn(k);
        f.eval(next, fn);
        if (all_finite(fn) && (fn - (target ? *target : next)).norm() <= g.norm()) z = next;
      }
      return z;
    }
    if (!solvable) return std::nullopt;
    Point step = lu.solve(-g);
    if (!all_finite(step)) return std::nullopt;
    const double cap = 10.0 * (1.0 + z.norm());
    if (step.norm() > cap) step *= cap / step.norm();
    z += step;
    if (z.norm() > 1e8) return std::nullopt;
  }
  return std::nullopt;
}

double residual_of(const MapView& f, const Point& z, const Point* target) {
  return (f(z) - (target ? *target : z)).norm();
}

// Zeroes parts that are rounding noise around an exact zero, when that keeps the point converged.
Point snap(const MapView& f, const Point& z, const Point* target, double tol) {
  Point s = z;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double re = std::abs(s[i].real()) <= 1e-3 * tol ? 0.0 : s[i].real();
    const double im = std::abs(s[i].imag()) <= 1e-3 * tol ? 0.0 : s[i].imag();
    s[i] = Complex(re, im);
  }
  if (s == z) return z;
  return residual_of(f, s, target) <= std::max(residual_of(f, z, target), tol * (1.0 + s.norm())) ? s : z;
}

std::vector<Point> solve_multistart(const MapView& f, const Point* target, const Polydisc& region, const NewtonOptions& opt) {
  std::vector<Point> found;
  for (const Point& start : halton_points(region, opt.n_starts, opt.seed)) {
    auto z = newton(f, start, target, opt.tol, opt.max_iter);
    if (!z) continue;
    const Point s = snap(f, *z, target, opt.tol);
    if (residual_of(f, s, target) > opt.tol * (1.0 + s.norm())) continue;
    if (!region.contains(s, 10.0 * opt.tol)) continue;
    found.push_back(s);
  }
  std::stable_sort(found.begin(), found.end(), lex_less);
  std::vector<Point> kept;
  for (const Point& z : found) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Point& q) { return (q - z).norm() <= 10.0 * opt.tol; });
    if (!dup) kept.push_back(z);
  }
  return kept;
}

}  // namespace

std::vector<Point> halton_points(const Polydisc& region, int count, std::uint64_t seed) {
  const int k = static_cast<int>(region.center.size());
  if (k < 1 || k > kMaxDim) throw Error(ErrorCode::UnsupportedDimension, "polydisc dimension");
  KeyedStream rng(hash_combine(seed, 0x4a17));
  std::vector<double> shift(static_cast<std::size_t>(2 * k));
  for (auto& s : shift) s = rng.uniform();
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int n = 0; n < count; ++n) {
    Point z(k);
    for (int i = 0; i < k; ++i) {
      double u = radical_inverse(static_cast<std::uint64_t>(n + 1), kPrimes[2 * i]) + shift[static_cast<std::size_t>(2 * i)];
      double v = radical_inverse(static_cast<std::uint64_t>(n + 1), kPrimes[2 * i + 1]) + shift[static_cast<std::size_t>(2 * i + 1)];
      u -= std::floor(u);
      v -= std::floor(v);
      z[i] = region.center[i] + std::polar(region.radius * std::sqrt(u), 2.0 * std::numbers::pi * v);
    }
    out.push_back(z);
  }
  return out;
}

const char* to_string(FixedPointKind kind) {
  switch (kind) {
    case FixedPointKind::Attracting: return "Attracting";
    case FixedPointKind::Repelling: return "Repelling";
    case FixedPointKind::Saddle: return "Saddle";
    case FixedPointKind::Indeterminate: return "Indeterminate";
  }
  return "?";
}

std::vector<Complex> eigenvalues(const Jacobian& m) {
  std::vector<Complex> out;
  if (m.rows() == 1) {
    out.push_back(m(0, 0));
  } else if (m.rows() == 2) {
    const Complex half_trace = 0.5 * (m(0, 0) + m(1, 1));
    const Complex det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const Complex half_gap = 0.5 * (m(0, 0) - m(1, 1));
    const Complex s = std::sqrt(half_gap * half_gap + m(0, 1) * m(1, 0));
    const Complex big = std::abs(half_trace + s) >= std::abs(half_trace - s) ? half_trace + s : half_trace - s;
    out.push_back(big);
    // product form avoids cancellation in the small root
    out.push_back(big == Complex(0.0) ? Complex(0.0) : det / big);
  } else {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(Eigen::MatrixXcd(m), false);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "eigenvalue iteration");
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) out.push_back(solver.eigenvalues()[i]);
  }
  std::stable_sort(out.begin(), out.end(), [](Complex a, Complex b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

FixedPointRecord classify_fixed_point(const MapView& f, const Point& p, double tol_unit, double residual_tol) {
  if (p.size() != f.dim()) throw Error(ErrorCode::DimensionMismatch, "fixed point dimension");
  Point fp(f.dim());
  Jacobian jac;
  f.eval_with_jacobian(p, fp, jac);
  FixedPointRecord rec;
  rec.location = p;
  rec.residual = (fp - p).norm();
  if (!(rec.residual <= residual_tol * (1.0 + p.norm())))
    throw Error(ErrorCode::NotAFixedPoint, "residual " + std::to_string(rec.residual));
  rec.eigenvalues = eigenvalues(jac);
  rec.jacobian_det_modulus = std::abs(jac.determinant());

  bool all_in = true, all_out = true, near_unit = false;
  for (const Complex& l : rec.eigenvalues) {
    const double m = std::abs(l);
    all_in = all_in && m < 1.0 - tol_unit;
    all_out = all_out && m > 1.0 + tol_unit;
    near_unit = near_unit || std::abs(m - 1.0) <= tol_unit;
  }
  if (all_in)
    rec.kind = FixedPointKind::Attracting;
  else if (all_out)
    rec.kind = FixedPointKind::Repelling;
  else if (!near_unit)
    rec.kind = FixedPointKind::Saddle;
  else
    rec.kind = FixedPointKind::Indeterminate;
  return rec;
}

std::vector<FixedPointRecord> find_fixed_points(const MapView& f, const Polydisc& region, const NewtonOptions& opt) {
  if (opt.n_starts < 1) throw Error(ErrorCode::ConfigError, "n_starts must be at least 1");
  if (region.center.size() != f.dim()) throw Error(ErrorCode::DimensionMismatch, "region and map differ in dimension");
  std::vector<FixedPointRecord> out;
  for (const Point& p : solve_multistart(f, nullptr, region, opt))
    out.push_back(classify_fixed_point(f, p, 1e-6, opt.tol));
  return out;
}

bool is_invertible_at(const MapView& f, const Point& p, double tol) {
  return std::abs(f.jacobian(p).determinant()) > tol;
}

CoveringReport covering_check(const MapView& f, const Point& center, double r, double margin, int n_boundary,
                              std::uint64_t seed) {
  if (!(r > 0.0)) throw Error(ErrorCode::ConfigError, "covering radius must be positive");
  if (n_boundary < 64) throw Error(ErrorCode::ConfigError, "covering check needs at least 64 boundary samples");
  const int k = f.dim();
  if (center.size() != k) throw Error(ErrorCode::DimensionMismatch, "covering centre dimension");

  std::vector<Point> sphere;
  if (k == 1) {
    for (int i = 0; i < n_boundary; ++i) sphere.push_back(center + make_point({std::polar(r, 2.0 * std::numbers::pi * i / n_boundary)}));
  } else if (k == 2) {
    // (r cos t e^{ia}, r sin t e^{ib}), the two end circles included
    const int n_t = std::max(2, static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n_boundary)))));
    const int n_a = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_boundary) / n_t)));
    for (int t = 0; t < n_t; ++t) {
      const double eta = 0.5 * std::numbers::pi * t / (n_t - 1);
      for (int a = 0; a < n_a; ++a)
        for (int b = 0; b < n_a; ++b) {
          const double xa = 2.0 * std::numbers::pi * a / n_a;
          const double xb = 2.0 * std::numbers::pi * (b + 0.5) / n_a;
          sphere.push_back(center + make_point({std::polar(r * std::cos(eta), xa), std::polar(r * std::sin(eta), xb)}));
        }
    }
  } else {
    KeyedStream rng(hash_combine(seed, 0x5e7e));
    for (int i = 0; i < n_boundary; ++i) {
      Point d(k);
      for (int j = 0; j < k; ++j) {
        const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        d[j] = Complex(rad * std::cos(2.0 * std::numbers::pi * u2), rad * std::sin(2.0 * std::numbers::pi * u2));
      }
      sphere.push_back(center + r * d / d.norm());
    }
  }

  CoveringReport rep;
  rep.center = center;
  rep.radius = r;
  rep.margin = margin;
  rep.n_boundary = static_cast<int>(sphere.size());
  rep.min_boundary_image_modulus = std::numeric_limits<double>::infinity();
  for (const Point& b : sphere) {
    const Point img = f(b);
    const double m = all_finite(img) ? (img - center).norm() : std::numeric_limits<double>::infinity();
    rep.min_boundary_image_modulus = std::min(rep.min_boundary_image_modulus, m);
  }

  std::vector<Point> starts{center};
  for (const Point& s : halton_points(Polydisc{center, r / std::sqrt(static_cast<double>(k))}, 32, seed)) starts.push_back(s);
  for (const Point& s : starts) {
    const auto z = newton(f, s, &center, 1e-12, 100);
    if (z && (*z - center).norm() < r) {
      rep.contains_preimage_of_center = true;
      break;
    }
  }
  rep.verdict = rep.min_boundary_image_modulus > r * (1.0 + margin) && rep.contains_preimage_of_center;
  char buf[160];
  std::snprintf(buf, sizeof buf, "heuristic: %d boundary samples and a Newton preimage search, not a proof", rep.n_boundary);
  rep.note = buf;
  return rep;
}

std::size_t BackwardOrbitTree::size() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.size();
  return n;
}

PreimageSet preimages(const PolyMap& f, const Point& target, const Polydisc& region, const NewtonOptions& opt) {
  const int k = f.dim();
  if (target.size() != k || region.center.size() != k) throw Error(ErrorCode::DimensionMismatch, "preimage target dimension");
  PreimageSet out;
  if (!f.is_triangular()) {
    MapView view(f);
    out.points = solve_multistart(view, &target, region, opt);
    out.newton_runs = static_cast<std::size_t>(opt.n_starts);
    return out;
  }

  out.exact = true;
  out.complete = true;
  std::vector<std::vector<Complex>> prefixes{{}};
  for (int i = 0; i < k; ++i) {
    std::vector<std::vector<Complex>> next;
    for (const auto& prefix : prefixes) {
      std::vector<MultiPoly> values;
      for (int j = 0; j < k; ++j)
        values.push_back(j < i ? MultiPoly::constant(k, prefix[static_cast<std::size_t>(j)]) : MultiPoly::variable(k, j));
      const MultiPoly q = substitute(f[i], values) - MultiPoly::constant(k, target[i]);
      std::vector<Complex> coeffs(static_cast<std::size_t>(std::max(q.degree_in(i), 0) + 1), Complex(0.0));
      for (const auto& [e, c] : q.terms()) coeffs[e[static_cast<std::size_t>(i)]] += c;
      double scale = 0.0;
      for (const Complex& c : coeffs) scale = std::max(scale, std::abs(c));
      while (coeffs.size() > 1 && std::abs(coeffs.back()) <= 1e-12 * std::max(1.0, scale)) coeffs.pop_back();
      if (coeffs.size() == 1) {
        // the equation does not involve z_i: either no solution or a whole line of them
        if (std::abs(coeffs[0]) <= 1e-10 * (1.0 + std::abs(target[i]))) out.complete = false;
        continue;
      }
      std::vector<Complex> roots = roots_1d(coeffs, 1e-13);
      std::vector<Complex> distinct;
      for (const Complex& r : roots) {
        if (std::abs(r - region.center[i]) > region.radius + 1e-9) continue;
        if (std::none_of(distinct.begin(), distinct.end(), [&](Complex d) { return std::abs(d - r) <= 1e-7 * (1.0 + std::abs(r)); }))
          distinct.push_back(r);
      }
      for (const Complex& r : distinct) {
        auto p = prefix;
        p.push_back(r);
        next.push_back(std::move(p));
      }
    }
    prefixes = std::move(next);
  }
  for (const auto& p : prefixes) {
    Point z(k);
    for (int j = 0; j < k; ++j) z[j] = p[static_cast<std::size_t>(j)];
    out.points.push_back(z);
  }
  std::stable_sort(out.points.begin(), out.points.end(), lex_less);
  return out;
}

BackwardOrbitTree backward_orbit(const PolyMap& f, const Point& p, int depth, const Polydisc& region, std::size_t budget,
                                 const NewtonOptions& opt) {
  if (depth < 1) throw Error(ErrorCode::ConfigError, "backward orbit depth must be at least 1");
  BackwardOrbitTree tree;
  tree.root = p;
  tree.exact = f.is_triangular();
  tree.truncated = !tree.exact;
  tree.levels.push_back({{p, -1}});
  std::size_t nodes = 1;
  for (int d = 1; d <= depth; ++d) {
    std::vector<BackwardOrbitTree::Node> level;
    const auto& prev = tree.levels.back();
    for (std::size_t j = 0; j < prev.size(); ++j) {
      NewtonOptions o = opt;
      o.seed = hash_combine(opt.seed, (static_cast<std::uint64_t>(d) << 32) | j);
      const PreimageSet pre = preimages(f, prev[j].z, region, o);
      tree.newton_runs += pre.newton_runs;
      if (!pre.complete) tree.truncated = true;
      if (tree.newton_runs > budget) throw Error(ErrorCode::BudgetExceeded, "backward orbit Newton budget");
      for (const Point& z : pre.points) level.push_back({z, static_cast<int>(j)});
      nodes += pre.points.size();
      if (nodes > budget) throw Error(ErrorCode::BudgetExceeded, "backward orbit node budget");
    }
    tree.levels.push_back(std::move(level));
  }
  return tree;
}

}  // namespace semidyn
