#include "semidyn/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace semidyn {

const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::FatouBounded: return "FatouBounded";
    case PointClass::FatouEscaping: return "FatouEscaping";
    case PointClass::FatouMixed: return "FatouMixed";
    case PointClass::JuliaCandidate: return "JuliaCandidate";
    case PointClass::Undetermined: return "Undetermined";
  }
  return "?";
}

std::optional<PointClass> point_class_from_string(const std::string& s) {
  for (auto c : {PointClass::FatouBounded, PointClass::FatouEscaping, PointClass::FatouMixed, PointClass::JuliaCandidate,
                 PointClass::Undetermined})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

double ClassifierConfig::effective_kappa() const {
  return resolution > 0.0 ? std::min(kappa, 1.0 / resolution) : kappa;
}

void ClassifierConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, "classifier: " + m); };
  if (!(R > 1.0)) fail("R must exceed 1");
  if (!(delta > 0.0) || !(delta < 1e-2 * R)) fail("delta must lie in (0, 1e-2 R)");
  if (!(kappa > 1.0)) fail("kappa must exceed 1");
  if (L < 1) fail("L must be at least 1");
  if (N < 0) fail("N must be nonnegative");
  if (n_companions < 4) fail("n_companions must be at least 4");
  if (probe < 1) fail("probe must be at least 1");
  if (steer_beam < 0 || steer_depth < 0) fail("steering sizes must be nonnegative");
}

std::optional<int> escape_time(const Semigroup& g, const Word& w, const Point& z, double R) {
  const auto rec = orbit(g, w, z, R, 0);
  return rec.exit_step;
}

Word cyclic_canonical(const Word& w) {
  const std::size_t n = w.size();
  std::size_t period = n;
  for (std::size_t p = 1; p < n; ++p) {
    if (n % p != 0) continue;
    bool ok = true;
    for (std::size_t i = p; i < n && ok; ++i) ok = w[i] == w[i - p];
    if (ok) {
      period = p;
      break;
    }
  }
  std::vector<std::uint32_t> root(w.indices.begin(), w.indices.begin() + static_cast<std::ptrdiff_t>(period));
  std::vector<std::uint32_t> best = root;
  for (std::size_t r = 1; r < period; ++r) {
    std::rotate(root.begin(), root.begin() + 1, root.end());
    if (root < best) best = root;
  }
  return Word{best};
}

std::vector<Point> companion_points(const Point& z, double delta, int count, std::uint64_t seed) {
  const int k = static_cast<int>(z.size());
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    Point c = z;
    if (j < 4 * k) {
      const int coord = (j / 4) % k;
      const Complex dir[4] = {Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1)};
      c[coord] += delta * dir[j % 4];
    } else {
      KeyedStream s(hash_combine(seed, static_cast<std::uint64_t>(j)));
      Point d(k);
      for (int i = 0; i < k; ++i) {
        // Box-Muller pairs give a uniform direction on the sphere
        const double u1 = 1.0 - s.uniform(), u2 = s.uniform();
        const double u3 = 1.0 - s.uniform(), u4 = s.uniform();
        d[i] = Complex(std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2),
                       std::sqrt(-2 * std::log(u3)) * std::cos(2 * std::numbers::pi * u4));
      }
      c += d * (delta / d.norm());
    }
    out.push_back(c);
  }
  return out;
}

Classifier::Classifier(const Semigroup& g, const ClassifierConfig& cfg) : g_(g), cfg_(cfg) {
  cfg_.validate();
  for (const auto& f : g.generators()) {
    bool any = false;
    for (int v = 0; v < f.dim() && !any; ++v) {
      bool used = false;
      for (const auto& c : f.components()) used = used || c.degree_in(v) > 0;
      any = !used;
    }
    collapsible_.push_back(any);
  }
  std::set<Word> seen;
  auto add = [&](const Word& w) {
    if (seen.insert(cyclic_canonical(w)).second) words_.push_back(w);
  };
  if (cfg_.sampler == SamplerMode::Exhaustive) {
    for (int len = 1; len <= cfg_.L; ++len)
      for (const auto& w : enumerate_words(g.size(), len)) add(w);
  } else {
    for (int len = 1; len <= std::min(cfg_.L, 4); ++len)
      for (const auto& w : enumerate_words(g.size(), len)) add(w);
    for (const auto& w : sample_words(g, RandomSampler{cfg_.N, cfg_.L, cfg_.seed})) add(w);
  }
}

struct Classifier::Probe {
  bool center_escaped = false;
  bool nonuniform = false;
  bool slow = false;
  double ratio = 0.0;
};

namespace {

// chordal distance where an escaped point sits at infinity
double chordal(const Point& a, double a2, bool a_inf, const Point& b, double b2, bool b_inf) {
  if (a_inf && b_inf) return 0.0;
  if (a_inf) return 2.0 / std::sqrt(1.0 + b2);
  if (b_inf) return 2.0 / std::sqrt(1.0 + a2);
  return 2.0 * (a - b).norm() / std::sqrt((1.0 + a2) * (1.0 + b2));
}

}  // namespace

Classifier::Probe Classifier::run(const Word& w, const Point& z, const std::vector<Point>& companions,
                                  const std::vector<double>& base) const {
  const std::size_t n = companions.size() + 1;
  const double R2 = cfg_.R * cfg_.R;
  const double guard2 = kOverflowGuard * kOverflowGuard;
  const double kappa = cfg_.effective_kappa();
  const int word_len = static_cast<int>(w.size());
  const int cycle_letters = word_len * ((cfg_.probe + word_len - 1) / word_len);

  constexpr std::size_t kStack = 1 + 4 * kMaxDim * 4;
  Point stack_pts[kStack];
  double stack_sq[kStack];
  std::vector<Point> heap_pts;
  std::vector<double> heap_sq;
  Point* p = stack_pts;
  double* s = stack_sq;
  if (n > kStack) {
    heap_pts.resize(n);
    heap_sq.resize(n);
    p = heap_pts.data();
    s = heap_sq.data();
  }
  // escaped_at: first step of the current stay above R, -1 while within R.
  // Points are only frozen (treated as infinity) past the overflow guard, since
  // degenerate generators such as constants can bring large points back.
  std::vector<int> escaped_at(n, -1);
  std::vector<char> frozen(n, 0);
  // lagged[j]: when j's current stay above R began, another point was still
  // below R^(1/4), i.e. two squaring steps behind
  std::vector<char> lagged(n, 0);
  const double lag2 = std::sqrt(cfg_.R);
  p[0] = z;
  s[0] = z.squaredNorm();
  for (std::size_t j = 1; j < n; ++j) {
    p[j] = companions[j - 1];
    s[j] = p[j].squaredNorm();
  }

  bool word_collapses = false;
  for (auto letter : w.indices) word_collapses = word_collapses || collapsible_[letter];

  Probe out;
  Point next(z.size());
  int limit = cycle_letters;
  bool extended_escape = false, extended_slow = false;
  int t = 0;
  std::size_t pos = w.size() - 1;
  std::size_t n_frozen = 0;
  std::size_t n_escaped = 0;
  for (;;) {
    while (t < limit && (n_frozen < n || word_collapses)) {
      const bool collapsing = collapsible_[w[pos]] != 0;
      const CompiledMap& f = g_.compiled(static_cast<int>(w[pos]));
      pos = pos == 0 ? w.size() - 1 : pos - 1;
      ++t;
      for (std::size_t j = 0; j < n; ++j) {
        if (frozen[j] && !collapsing) continue;
        f.eval(p[j], next);
        const double q = next.squaredNorm();
        if (!(q <= guard2)) {
          if (!frozen[j]) {
            frozen[j] = 1;
            ++n_frozen;
          }
          if (escaped_at[j] < 0) escaped_at[j] = t;
          if (!std::isnan(q)) p[j] = next;
          continue;
        }
        if (frozen[j]) {
          frozen[j] = 0;
          --n_frozen;
        }
        p[j] = next;
        s[j] = q;
        if (q > R2) {
          if (escaped_at[j] < 0) escaped_at[j] = t;
        } else {
          escaped_at[j] = -1;
          lagged[j] = 0;
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (escaped_at[j] != t) continue;
        for (std::size_t i = 0; i < n && !lagged[j]; ++i) lagged[j] = escaped_at[i] < 0 && s[i] < lag2;
      }
      const bool c_inf = frozen[0] != 0;
      for (std::size_t j = 1; j < n; ++j) {
        const double d = chordal(p[0], s[0], c_inf, p[j], s[j], frozen[j] != 0);
        out.ratio = std::max(out.ratio, d / base[j - 1]);
      }
      if (out.ratio > kappa) return out;  // already decisive
    }
    n_escaped = 0;
    for (std::size_t j = 0; j < n; ++j) n_escaped += escaped_at[j] >= 0;
    if (n_escaped > 0 && n_escaped < n && !extended_escape) {
      extended_escape = true;
      limit = t + 2;
      continue;
    }
    if (escaped_at[0] < 0 && s[0] > cfg_.R && !extended_slow) {
      extended_slow = true;
      limit = t + 2 * cycle_letters;
      continue;
    }
    break;
  }
  out.center_escaped = escaped_at[0] >= 0;
  if (n_escaped > 0 && n_escaped < n) out.nonuniform = true;
  if (n_escaped == n && std::find(lagged.begin(), lagged.end(), 1) != lagged.end()) out.nonuniform = true;
  // bounded but still above sqrt(R) after the extension: undecided growth
  if (!out.center_escaped && s[0] > cfg_.R) out.slow = true;
  return out;
}

Word Classifier::steered_word(const Point& z) const {
  struct Node {
    Point x;
    Jacobian jac;  // direction only; the scale lives in log_scale
    double log_scale = 0.0;
    double score = 0.0;
    std::vector<std::uint32_t> letters;  // in order of application
  };
  const int k = g_.dim();
  const double R2 = cfg_.R * cfg_.R;
  const double lift = std::log1p(z.squaredNorm());
  const double enough = std::log(2.0 * cfg_.effective_kappa());

  std::vector<Node> beam(1);
  beam[0].x = z;
  beam[0].jac = Jacobian::Identity(k, k);
  std::vector<std::uint32_t> best_letters;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<Node> candidates;
  Point y;
  Jacobian step;
  for (int depth = 0; depth < cfg_.steer_depth && !beam.empty(); ++depth) {
    candidates.clear();
    for (const Node& node : beam) {
      for (int i = 0; i < g_.size(); ++i) {
        g_.compiled(i).eval_with_jacobian(node.x, y, step);
        const double q = y.squaredNorm();
        if (!(q <= R2)) continue;
        Jacobian jac = step * node.jac;
        const double scale = jac.norm();
        if (!(scale > 0.0) || !std::isfinite(scale)) continue;
        Node c;
        c.x = y;
        c.jac = jac / scale;
        c.log_scale = node.log_scale + std::log(scale);
        c.score = c.log_scale + lift - std::log1p(q);
        c.letters = node.letters;
        c.letters.push_back(static_cast<std::uint32_t>(i));
        candidates.push_back(std::move(c));
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Node& a, const Node& b) {
      return a.score != b.score ? a.score > b.score : a.letters < b.letters;
    });
    beam.clear();
    for (auto& c : candidates) {
      if (static_cast<int>(beam.size()) >= cfg_.steer_beam) break;
      // several paths often reach the same image (constant or commuting maps)
      bool duplicate = false;
      for (const auto& b : beam) duplicate = duplicate || ((b.x - c.x).norm() <= 1e-12 * (1.0 + b.x.norm()) && std::abs(b.score - c.score) < 1e-9);
      if (!duplicate) beam.push_back(std::move(c));
    }
    if (!beam.empty() && beam.front().score > best) {
      best = beam.front().score;
      best_letters = beam.front().letters;
    }
    if (best > enough) break;
  }
  std::reverse(best_letters.begin(), best_letters.end());
  return Word{best_letters};
}

Classification Classifier::classify(const Point& z, bool stop_early) const {
  if (z.size() != g_.dim()) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from semigroup dimension");
  Classification result;
  Evidence& ev = result.evidence;
  if (!all_finite(z)) return result;

  const auto companions = companion_points(z, cfg_.delta, cfg_.n_companions, cfg_.seed);
  std::vector<double> base;
  base.reserve(companions.size());
  for (const auto& c : companions) base.push_back(chordal_distance(z, c));

  const double kappa = cfg_.effective_kappa();
  bool julia = false;
  auto examine = [&](const Word& w) {
    const Probe pr = run(w, z, companions, base);
    ++ev.n_words;
    if (pr.center_escaped) ++ev.n_escaping;
    else ++ev.n_bounded;
    if (pr.nonuniform) ++ev.n_nonuniform;
    if (pr.slow) ++ev.n_slow;
    ev.max_separation_ratio = std::max(ev.max_separation_ratio, pr.ratio);
    const bool witness = pr.nonuniform || pr.ratio > kappa;
    if (witness) {
      julia = true;
      if (ev.witnesses.size() < 4) ev.witnesses.push_back(w);
    }
  };

  if (cfg_.steer_depth > 0 && cfg_.steer_beam > 0) {
    const Word steered = steered_word(z);
    if (!steered.empty()) examine(steered);
  }
  for (const auto& w : words_) {
    if (julia && stop_early) break;
    examine(w);
  }

  result.score = ev.max_separation_ratio > 1.0 ? std::log(ev.max_separation_ratio) : 0.0;
  if (julia) result.verdict = PointClass::JuliaCandidate;
  else if (ev.n_slow > 0) result.verdict = PointClass::Undetermined;
  else if (ev.n_escaping == ev.n_words) result.verdict = PointClass::FatouEscaping;
  else if (ev.n_bounded == ev.n_words) result.verdict = PointClass::FatouBounded;
  else result.verdict = PointClass::FatouMixed;
  if (!julia)
    for (std::size_t i = 0; i < words_.size() && ev.witnesses.size() < 4; ++i) ev.witnesses.push_back(words_[i]);
  return result;
}

Classification classify_point(const Semigroup& g, const Point& z, const ClassifierConfig& cfg) {
  ClassifierConfig pointwise = cfg;
  if (pointwise.resolution < 0.0) pointwise.resolution = 0.0;
  return Classifier(g, pointwise).classify(z);
}

double normality_score(const Semigroup& g, const Point& z, const ClassifierConfig& cfg) {
  ClassifierConfig pointwise = cfg;
  if (pointwise.resolution < 0.0) pointwise.resolution = 0.0;
  return Classifier(g, pointwise).classify(z, false).score;
}

}  // namespace semidyn
