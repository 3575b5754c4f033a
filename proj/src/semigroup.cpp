#include "semidyn/semigroup.hpp"

#include <cmath>
#include <sstream>

namespace semidyn {

std::string Word::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(indices[i]);
  }
  return out;
}

Word Word::parse(const std::string& text) {
  Word w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(item, &used);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "malformed word '" + text + "'");
    }
    if (used != item.size()) throw Error(ErrorCode::ConfigError, "malformed word '" + text + "'");
    w.indices.push_back(static_cast<std::uint32_t>(value));
  }
  return w;
}

Word concat(const Word& u, const Word& v) {
  Word w = u;
  w.indices.insert(w.indices.end(), v.indices.begin(), v.indices.end());
  return w;
}

Semigroup::Semigroup(std::vector<PolyMap> generators, std::string name)
    : generators_(std::move(generators)), name_(std::move(name)) {
  if (generators_.empty()) throw Error(ErrorCode::ConfigError, "semigroup needs at least one generator");
  for (const auto& g : generators_)
    if (g.dim() != generators_.front().dim()) throw Error(ErrorCode::DimensionMismatch, "generators differ in dimension");
  compiled_.reserve(generators_.size());
  for (const auto& g : generators_) compiled_.emplace_back(g);
}

namespace {

void check_word(const Semigroup& g, const Word& w) {
  if (w.empty()) throw Error(ErrorCode::EmptyWord, "cannot evaluate the empty word");
  for (auto i : w.indices)
    if (static_cast<int>(i) >= g.size()) throw Error(ErrorCode::IndexOutOfRange, "word letter " + std::to_string(i));
}

}  // namespace

std::optional<Point> eval_word(const Semigroup& g, const Word& w, const Point& z) {
  check_word(g, w);
  if (z.size() != g.dim()) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from semigroup dimension");
  Point current = z;
  Point next(g.dim());
  for (std::size_t i = w.size(); i-- > 0;) {
    g.compiled(static_cast<int>(w[i])).eval(current, next);
    if (!all_finite(next) || norm(next) > kOverflowGuard) return std::nullopt;
    current = next;
  }
  return current;
}

std::optional<Jacobian> word_jacobian(const Semigroup& g, const Word& w, const Point& z) {
  check_word(g, w);
  if (z.size() != g.dim()) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from semigroup dimension");
  Point current = z;
  Point next;
  Jacobian step;
  Jacobian total = Jacobian::Identity(g.dim(), g.dim());
  for (std::size_t i = w.size(); i-- > 0;) {
    g.compiled(static_cast<int>(w[i])).eval_with_jacobian(current, next, step);
    if (!all_finite(next) || norm(next) > kOverflowGuard) return std::nullopt;
    total = (step * total).eval();
    current = next;
  }
  return total;
}

std::vector<Word> enumerate_words(int m, int length) {
  if (m < 1 || length < 1) throw Error(ErrorCode::IndexOutOfRange, "enumerate_words needs m >= 1 and L >= 1");
  if (static_cast<double>(length) * std::log10(static_cast<double>(m)) > 7.0 + 1e-12)
    throw Error(ErrorCode::BudgetExceeded, "m^L exceeds 10^7 words");
  std::size_t total = 1;
  for (int i = 0; i < length; ++i) total *= static_cast<std::size_t>(m);
  std::vector<Word> words;
  words.reserve(total);
  Word w{std::vector<std::uint32_t>(static_cast<std::size_t>(length), 0)};
  for (std::size_t n = 0; n < total; ++n) {
    words.push_back(w);
    for (std::size_t pos = w.size(); pos-- > 0;) {
      if (++w.indices[pos] < static_cast<std::uint32_t>(m)) break;
      w.indices[pos] = 0;
    }
  }
  return words;
}

Word draw_word(int m, const RandomSampler& sampler, std::uint64_t index) {
  KeyedStream stream(hash_combine(sampler.seed, index));
  const auto length = 1 + stream.below(static_cast<std::uint64_t>(sampler.max_length));
  Word w;
  w.indices.reserve(length);
  for (std::uint64_t i = 0; i < length; ++i) w.indices.push_back(static_cast<std::uint32_t>(stream.below(static_cast<std::uint64_t>(m))));
  return w;
}

std::vector<Word> sample_words(const Semigroup& g, const WordSampler& sampler) {
  if (const auto* ex = std::get_if<ExhaustiveSampler>(&sampler)) return enumerate_words(g.size(), ex->length);
  const auto& rnd = std::get<RandomSampler>(sampler);
  if (rnd.max_length < 1) throw Error(ErrorCode::IndexOutOfRange, "random sampler needs max length >= 1");
  std::vector<Word> words;
  words.reserve(static_cast<std::size_t>(std::max(rnd.count, 0)));
  for (int i = 0; i < rnd.count; ++i) words.push_back(draw_word(g.size(), rnd, static_cast<std::uint64_t>(i)));
  return words;
}

Semigroup power_subsemigroup(const Semigroup& g, const PowerTuple& l) {
  if (static_cast<int>(l.exponents.size()) != g.size())
    throw Error(ErrorCode::DimensionMismatch, "power tuple needs one exponent per generator");
  std::vector<PolyMap> gens;
  for (int i = 0; i < g.size(); ++i) {
    const int e = l.exponents[static_cast<std::size_t>(i)];
    if (e < 1) throw Error(ErrorCode::IndexOutOfRange, "power tuple entries must be positive");
    gens.push_back(e == 1 ? g.generator(i) : power(g.generator(i), e));
  }
  std::string name = g.name() + "_l(";
  for (std::size_t i = 0; i < l.exponents.size(); ++i) name += (i ? "," : "") + std::to_string(l.exponents[i]);
  return Semigroup(std::move(gens), name + ")");
}

OrbitRecord orbit(const Semigroup& g, const Word& w, const Point& z, double escape_radius, int segment_limit) {
  check_word(g, w);
  if (z.size() != g.dim()) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from semigroup dimension");
  OrbitRecord rec;
  auto record = [&](const Point& p) {
    if (segment_limit < 0 || static_cast<int>(rec.trajectory.size()) < segment_limit) rec.trajectory.push_back(p);
  };
  Point current = z;
  record(current);
  rec.max_norm = norm(current);
  if (rec.max_norm > escape_radius) {
    rec.exit_step = 0;
    return rec;
  }
  Point next(g.dim());
  int step = 0;
  for (std::size_t i = w.size(); i-- > 0;) {
    g.compiled(static_cast<int>(w[i])).eval(current, next);
    ++step;
    const double n = all_finite(next) ? norm(next) : std::numeric_limits<double>::infinity();
    current = next;
    record(current);
    rec.max_norm = std::max(rec.max_norm, n);
    if (n > escape_radius) {
      rec.exit_step = step;
      return rec;
    }
  }
  rec.completed = true;
  return rec;
}

MapView::MapView(const PolyMap& f)
    : maps_(std::make_shared<const std::vector<CompiledMap>>(std::vector<CompiledMap>{CompiledMap(f)})),
      order_{0},
      dim_(f.dim()) {}

MapView::MapView(const Semigroup& g, const Word& w) : dim_(g.dim()) {
  check_word(g, w);
  std::vector<CompiledMap> maps;
  for (int i = 0; i < g.size(); ++i) maps.push_back(g.compiled(i));
  maps_ = std::make_shared<const std::vector<CompiledMap>>(std::move(maps));
  order_.assign(w.indices.rbegin(), w.indices.rend());
}

void MapView::eval(const Point& z, Point& out) const {
  Point current = z;
  for (auto i : order_) {
    (*maps_)[i].eval(current, out);
    current = out;
  }
}

Point MapView::operator()(const Point& z) const {
  Point out(dim_);
  eval(z, out);
  return out;
}

void MapView::eval_with_jacobian(const Point& z, Point& out, Jacobian& jac) const {
  Point current = z;
  Jacobian step;
  jac = Jacobian::Identity(dim_, dim_);
  for (auto i : order_) {
    (*maps_)[i].eval_with_jacobian(current, out, step);
    jac = (step * jac).eval();
    current = out;
  }
}

Jacobian MapView::jacobian(const Point& z) const {
  Point out;
  Jacobian jac;
  eval_with_jacobian(z, out, jac);
  return jac;
}

MapView MapView::power(int n) const {
  if (n < 1) throw Error(ErrorCode::IndexOutOfRange, "map power must be at least 1");
  MapView out;
  out.maps_ = maps_;
  out.dim_ = dim_;
  for (int i = 0; i < n; ++i) out.order_.insert(out.order_.end(), order_.begin(), order_.end());
  return out;
}

std::vector<MultiPoly> chebyshev_polynomials(int count, int nvars, int var) {
  std::vector<MultiPoly> t;
  if (count <= 0) return t;
  t.push_back(MultiPoly::constant(nvars, 1.0));
  if (count == 1) return t;
  const MultiPoly x = MultiPoly::variable(nvars, var);
  t.push_back(x);
  while (static_cast<int>(t.size()) < count) {
    const std::size_t n = t.size();
    t.push_back(Complex(2.0) * (x * t[n - 1]) - t[n - 2]);
  }
  return t;
}

std::vector<PolyMap> chebyshev_family(int truncation) {
  const auto t = chebyshev_polynomials(truncation + 1, 2, 0);
  const MultiPoly z2sq = pow(MultiPoly::variable(2, 1), 2);
  std::vector<PolyMap> maps;
  for (int i = 0; i <= truncation; ++i) maps.emplace_back(std::vector<MultiPoly>{t[static_cast<std::size_t>(i)], z2sq}, "f" + std::to_string(i));
  return maps;
}

}  // namespace semidyn
