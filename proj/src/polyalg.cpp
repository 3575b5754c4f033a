#include "semidyn/polyalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace semidyn {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::DegenerateLeadingCoefficient: return "DegenerateLeadingCoefficient";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::EmptyWord: return "EmptyWord";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::DegreeBudgetExceeded: return "DegreeBudgetExceeded";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NotAFixedPoint: return "NotAFixedPoint";
    case ErrorCode::EmptyComponent: return "EmptyComponent";
    case ErrorCode::PreimageUnavailable: return "PreimageUnavailable";
    case ErrorCode::NotCommuting: return "NotCommuting";
    case ErrorCode::NotVolumePreserving: return "NotVolumePreserving";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// MultiPoly

MultiPoly::MultiPoly(int nvars) : nvars_(nvars) {
  if (nvars < 1 || nvars > kMaxDim)
    throw Error(ErrorCode::UnsupportedDimension, "polynomial needs 1.." + std::to_string(kMaxDim) + " variables");
}

MultiPoly MultiPoly::constant(int nvars, Complex value) {
  MultiPoly p(nvars);
  p.add_term(Exponent(static_cast<std::size_t>(nvars), 0), value);
  return p;
}

MultiPoly MultiPoly::variable(int nvars, int index) {
  if (index < 0 || index >= nvars) throw Error(ErrorCode::IndexOutOfRange, "variable index");
  Exponent e(static_cast<std::size_t>(nvars), 0);
  e[static_cast<std::size_t>(index)] = 1;
  return monomial(nvars, e, 1.0);
}

MultiPoly MultiPoly::monomial(int nvars, const Exponent& exponent, Complex coefficient) {
  MultiPoly p(nvars);
  p.add_term(exponent, coefficient);
  return p;
}

void MultiPoly::add_term(const Exponent& exponent, Complex coefficient) {
  if (static_cast<int>(exponent.size()) != nvars_)
    throw Error(ErrorCode::DimensionMismatch, "exponent length differs from variable count");
  if (!std::isfinite(coefficient.real()) || !std::isfinite(coefficient.imag()))
    throw Error(ErrorCode::DimensionMismatch, "non-finite coefficient");
  auto it = terms_.find(exponent);
  if (it == terms_.end()) {
    if (std::abs(coefficient) > kZeroTolerance) terms_.emplace(exponent, coefficient);
    return;
  }
  it->second += coefficient;
  if (std::abs(it->second) <= kZeroTolerance) terms_.erase(it);
}

MultiPoly MultiPoly::canonical() const {
  MultiPoly out(nvars_);
  for (const auto& [e, c] : terms_)
    if (std::abs(c) > kZeroTolerance) out.terms_.emplace(e, c);
  return out;
}

bool MultiPoly::is_constant() const { return total_degree() <= 0; }

Complex MultiPoly::constant_term() const {
  auto it = terms_.find(Exponent(static_cast<std::size_t>(nvars_), 0));
  return it == terms_.end() ? Complex(0.0) : it->second;
}

int MultiPoly::total_degree() const {
  int deg = terms_.empty() ? -1 : 0;
  for (const auto& [e, c] : terms_) {
    int d = 0;
    for (auto v : e) d += v;
    deg = std::max(deg, d);
  }
  return deg;
}

int MultiPoly::degree_in(int var) const {
  if (var < 0 || var >= nvars_) throw Error(ErrorCode::IndexOutOfRange, "variable index");
  int deg = terms_.empty() ? -1 : 0;
  for (const auto& [e, c] : terms_) deg = std::max<int>(deg, e[static_cast<std::size_t>(var)]);
  return deg;
}

int MultiPoly::sole_variable() const {
  int found = -1;
  for (int v = 0; v < nvars_; ++v) {
    if (degree_in(v) > 0) {
      if (found >= 0) return -2;
      found = v;
    }
  }
  return found;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& other) {
  if (other.nvars_ != nvars_) throw Error(ErrorCode::DimensionMismatch, "adding polynomials in different variable counts");
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& other) {
  if (other.nvars_ != nvars_) throw Error(ErrorCode::DimensionMismatch, "subtracting polynomials in different variable counts");
  for (const auto& [e, c] : other.terms_) add_term(e, -c);
  return *this;
}

MultiPoly& MultiPoly::operator*=(Complex scale) {
  MultiPoly out(nvars_);
  for (const auto& [e, c] : terms_) out.add_term(e, c * scale);
  return *this = std::move(out);
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  if (a.nvars_ != b.nvars_) throw Error(ErrorCode::DimensionMismatch, "multiplying polynomials in different variable counts");
  MultiPoly out(a.nvars_);
  Exponent e(static_cast<std::size_t>(a.nvars_));
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      for (std::size_t v = 0; v < e.size(); ++v) e[v] = static_cast<std::uint16_t>(ea[v] + eb[v]);
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_coefficient(Complex c) {
  if (c.imag() == 0.0) {
    const std::string s = format_double(c.real());
    return c.real() < 0.0 ? "(" + s + ")" : s;
  }
  if (c.real() == 0.0) return "(" + format_double(c.imag()) + "i)";
  const std::string im = format_double(std::abs(c.imag()));
  return "(" + format_double(c.real()) + (c.imag() < 0.0 ? "-" : "+") + im + "i)";
}

}  // namespace

std::string MultiPoly::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  // highest degree first reads more naturally
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [e, c] = *it;
    std::string mono;
    for (int v = 0; v < nvars_; ++v) {
      const int p = e[static_cast<std::size_t>(v)];
      if (p == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += "z" + std::to_string(v + 1);
      if (p > 1) mono += "^" + std::to_string(p);
    }
    std::string term;
    if (mono.empty()) term = format_coefficient(c);
    else if (c == Complex(1.0)) term = mono;
    else term = format_coefficient(c) + "*" + mono;
    if (!out.empty()) out += " + ";
    out += term;
  }
  return out;
}

MultiPoly pow(const MultiPoly& p, unsigned n) {
  MultiPoly result = MultiPoly::constant(p.nvars(), 1.0);
  MultiPoly base = p;
  while (n > 0) {
    if (n & 1u) result = result * base;
    n >>= 1u;
    if (n > 0) base = base * base;
  }
  return result;
}

MultiPoly differentiate(const MultiPoly& p, int var) {
  if (var < 0 || var >= p.nvars()) throw Error(ErrorCode::IndexOutOfRange, "differentiation variable");
  MultiPoly out(p.nvars());
  for (const auto& [e, c] : p.terms()) {
    const auto power = e[static_cast<std::size_t>(var)];
    if (power == 0) continue;
    Exponent d = e;
    d[static_cast<std::size_t>(var)] = static_cast<std::uint16_t>(power - 1);
    out.add_term(d, c * static_cast<double>(power));
  }
  return out;
}

MultiPoly substitute(const MultiPoly& p, std::span<const MultiPoly> values) {
  if (static_cast<int>(values.size()) != p.nvars())
    throw Error(ErrorCode::DimensionMismatch, "substitution needs one polynomial per variable");
  const int target_vars = values.empty() ? 1 : values[0].nvars();
  for (const auto& v : values)
    if (v.nvars() != target_vars) throw Error(ErrorCode::DimensionMismatch, "substituted polynomials disagree on variable count");
  // memoised powers per substituted variable
  std::vector<std::vector<MultiPoly>> powers(values.size());
  for (std::size_t v = 0; v < values.size(); ++v) powers[v].push_back(MultiPoly::constant(target_vars, 1.0));
  MultiPoly out(target_vars);
  for (const auto& [e, c] : p.terms()) {
    MultiPoly term = MultiPoly::constant(target_vars, c);
    for (std::size_t v = 0; v < values.size(); ++v) {
      auto& table = powers[v];
      while (table.size() <= e[v]) table.push_back(table.back() * values[v]);
      if (e[v] > 0) term = term * table[e[v]];
    }
    out += term;
  }
  return out;
}

Complex eval_poly(const MultiPoly& p, const Point& z) {
  if (z.size() != p.nvars())
    throw Error(ErrorCode::DimensionMismatch, "point has " + std::to_string(z.size()) + " coordinates, polynomial has " +
                                                  std::to_string(p.nvars()) + " variables");
  return p(z);
}

// ---------------------------------------------------------------------------
// PolyMap and Jacobians

PolyMap::PolyMap(std::vector<MultiPoly> components, std::string label)
    : components_(std::move(components)), label_(std::move(label)) {
  const int k = static_cast<int>(components_.size());
  if (k < 1 || k > kMaxDim) throw Error(ErrorCode::UnsupportedDimension, "map dimension out of range");
  for (const auto& c : components_)
    if (c.nvars() != k) throw Error(ErrorCode::DimensionMismatch, "map component variable count differs from dimension");
}

PolyMap PolyMap::identity(int k, std::string label) {
  std::vector<MultiPoly> comps;
  for (int i = 0; i < k; ++i) comps.push_back(MultiPoly::variable(k, i));
  return PolyMap(std::move(comps), std::move(label));
}

int PolyMap::total_degree() const {
  int d = 0;
  for (const auto& c : components_) d = std::max(d, c.total_degree());
  return d;
}

bool PolyMap::is_triangular() const {
  for (int i = 0; i < dim(); ++i)
    for (int v = i + 1; v < dim(); ++v)
      if (components_[static_cast<std::size_t>(i)].degree_in(v) > 0) return false;
  return true;
}

Point eval_map(const PolyMap& f, const Point& z) {
  if (z.size() != f.dim()) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from map dimension");
  Point out(f.dim());
  for (int i = 0; i < f.dim(); ++i) out[i] = f[i](z);
  return out;
}

PolyMatrix::PolyMatrix(int rows, int cols, int nvars)
    : rows_(rows), cols_(cols), entries_(static_cast<std::size_t>(rows * cols), MultiPoly(nvars)) {}

Jacobian PolyMatrix::evaluate(const Point& z) const {
  Jacobian m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = eval_poly((*this)(i, j), z);
  return m;
}

PolyMatrix jacobian(const PolyMap& f) {
  PolyMatrix m(f.dim(), f.dim(), f.dim());
  for (int i = 0; i < f.dim(); ++i)
    for (int j = 0; j < f.dim(); ++j) m(i, j) = differentiate(f[i], j);
  return m;
}

namespace {

MultiPoly determinant_of(const PolyMatrix& m, std::vector<int>& rows, std::vector<int>& cols) {
  const int n = static_cast<int>(rows.size());
  if (n == 1) return m(rows[0], cols[0]);
  MultiPoly det(m(0, 0).nvars());
  const int r = rows.front();
  std::vector<int> sub_rows(rows.begin() + 1, rows.end());
  for (int j = 0; j < n; ++j) {
    const MultiPoly& entry = m(r, cols[static_cast<std::size_t>(j)]);
    if (entry.is_zero()) continue;
    std::vector<int> sub_cols;
    for (int c = 0; c < n; ++c)
      if (c != j) sub_cols.push_back(cols[static_cast<std::size_t>(c)]);
    MultiPoly minor = determinant_of(m, sub_rows, sub_cols);
    if (j % 2 == 0) det += entry * minor;
    else det -= entry * minor;
  }
  return det;
}

}  // namespace

MultiPoly determinant(const PolyMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "determinant of a non-square matrix");
  if (m.rows() > 4) throw Error(ErrorCode::UnsupportedDimension, "symbolic determinant limited to k <= 4");
  std::vector<int> rows(static_cast<std::size_t>(m.rows())), cols(static_cast<std::size_t>(m.cols()));
  for (int i = 0; i < m.rows(); ++i) rows[static_cast<std::size_t>(i)] = cols[static_cast<std::size_t>(i)] = i;
  return determinant_of(m, rows, cols).canonical();
}

MultiPoly jacobian_det(const PolyMap& f) { return determinant(jacobian(f)); }

bool is_volume_preserving(const PolyMap& f, double tol) {
  const MultiPoly det = jacobian_det(f);
  if (!det.is_constant() || det.is_zero()) return false;
  return std::abs(std::abs(det.constant_term()) - 1.0) <= tol;
}

PolyMap compose(const PolyMap& outer, const PolyMap& inner, int max_degree) {
  if (outer.dim() != inner.dim()) throw Error(ErrorCode::DimensionMismatch, "composing maps of different dimension");
  const long bound = static_cast<long>(std::max(outer.total_degree(), 0)) * std::max(inner.total_degree(), 0);
  if (bound > max_degree)
    throw Error(ErrorCode::DegreeBudgetExceeded,
                "composition degree " + std::to_string(bound) + " exceeds " + std::to_string(max_degree));
  std::vector<MultiPoly> comps;
  for (int i = 0; i < outer.dim(); ++i) comps.push_back(substitute(outer[i], inner.components()));
  return PolyMap(std::move(comps), outer.label() + "o" + inner.label());
}

PolyMap power(const PolyMap& f, int n, int max_degree) {
  if (n < 1) throw Error(ErrorCode::IndexOutOfRange, "map power must be at least 1");
  double bound = std::pow(static_cast<double>(std::max(f.total_degree(), 0)), n);
  if (bound > max_degree)
    throw Error(ErrorCode::DegreeBudgetExceeded, "power degree exceeds " + std::to_string(max_degree));
  PolyMap result = f;
  for (int i = 1; i < n; ++i) result = compose(f, result, max_degree);
  return PolyMap(result.components(), f.label() + "^" + std::to_string(n));
}

// ---------------------------------------------------------------------------
// Aberth-Ehrlich

namespace {

struct HornerResult {
  Complex value;
  Complex derivative;
  double scale;  // sum |a_j| |x|^j, the rounding scale of the evaluation
};

HornerResult horner(std::span<const Complex> a, Complex x) {
  Complex p = a.back();
  Complex dp(0.0);
  double scale = std::abs(a.back());
  const double ax = std::abs(x);
  for (std::size_t j = a.size() - 1; j-- > 0;) {
    dp = dp * x + p;
    p = p * x + a[j];
    scale = scale * ax + std::abs(a[j]);
  }
  return {p, dp, scale};
}

}  // namespace

std::vector<Complex> roots_1d(std::span<const Complex> coeffs, double tol, int max_iter) {
  if (coeffs.size() < 2) throw Error(ErrorCode::DegenerateLeadingCoefficient, "root finding needs degree >= 1");
  const Complex lead = coeffs.back();
  if (std::abs(lead) <= tol) throw Error(ErrorCode::DegenerateLeadingCoefficient, "leading coefficient vanishes");
  // exact zero roots are split off so x^s factors do not slow the iteration
  std::size_t zeros = 0;
  while (zeros + 1 < coeffs.size() && coeffs[zeros] == Complex(0.0)) ++zeros;
  if (zeros > 0) {
    std::vector<Complex> roots(zeros, Complex(0.0));
    if (zeros + 1 < coeffs.size()) {
      const auto rest = roots_1d(coeffs.subspan(zeros), tol, max_iter);
      roots.insert(roots.end(), rest.begin(), rest.end());
    }
    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
  }
  const std::size_t n = coeffs.size() - 1;
  if (n == 1) return {-coeffs[0] / coeffs[1]};

  // Initial radius from the Fujiwara bound, then a rotated circle of guesses.
  double radius = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double ratio = std::abs(coeffs[j] / lead);
    const double exponent = 1.0 / static_cast<double>(n - j);
    radius = std::max(radius, std::pow(j == 0 ? ratio / 2.0 : ratio, exponent));
  }
  radius = radius > 0.0 ? radius : 1.0;
  std::vector<Complex> z(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n) + 0.4;
    z[k] = std::polar(radius * (1.0 + 0.05 * static_cast<double>(k % 3)), angle);
  }

  bool converged = false;
  for (int iter = 0; iter < max_iter && !converged; ++iter) {
    converged = true;
    for (std::size_t k = 0; k < n; ++k) {
      const HornerResult h = horner(coeffs, z[k]);
      if (std::abs(h.value) <= 1e-3 * tol * h.scale) continue;
      const Complex ratio = h.value / h.derivative;
      Complex repulsion(0.0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) repulsion += 1.0 / (z[k] - z[j]);
      const Complex step = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[k] -= step;
      if (std::abs(step) > tol * (1.0 + std::abs(z[k]))) converged = false;
    }
  }

  double worst = 0.0;
  for (const Complex& root : z) {
    const HornerResult h = horner(coeffs, root);
    worst = std::max(worst, std::abs(h.value) / (1.0 + h.scale));
  }
  // Multiple roots converge only linearly, so the residual test decides, not the step size.
  if (worst > tol)
    throw Error(ErrorCode::NonConvergence, "Aberth iteration stalled after " + std::to_string(max_iter) +
                                               " sweeps, worst scaled residual " + format_double(worst));
  std::sort(z.begin(), z.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return z;
}

std::vector<Complex> roots_1d(const MultiPoly& p, double tol, int max_iter) {
  const int var = p.sole_variable();
  if (var == -2) throw Error(ErrorCode::DimensionMismatch, "roots_1d needs a univariate polynomial");
  if (var == -1) throw Error(ErrorCode::DegenerateLeadingCoefficient, "constant polynomial has no roots");
  std::vector<Complex> coeffs(static_cast<std::size_t>(p.degree_in(var) + 1), Complex(0.0));
  for (const auto& [e, c] : p.terms()) coeffs[e[static_cast<std::size_t>(var)]] += c;
  return roots_1d(coeffs, tol, max_iter);
}

// ---------------------------------------------------------------------------
// CompiledMap

CompiledMap::CompiledMap(const PolyMap& f) : dim_(f.dim()), max_exponent_(static_cast<std::size_t>(f.dim()), 0) {
  for (const auto& c : f.components())
    for (int v = 0; v < dim_; ++v) max_exponent_[static_cast<std::size_t>(v)] = std::max(max_exponent_[static_cast<std::size_t>(v)], c.degree_in(v));
  for (int v = 0; v < dim_; ++v) {
    power_offset_.push_back(power_table_size_);
    power_table_size_ += static_cast<std::uint32_t>(max_exponent_[static_cast<std::size_t>(v)] + 1);
  }
  for (const auto& c : f.components()) append(c, values_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) append(differentiate(f[i], j), partials_);
}

void CompiledMap::append(const MultiPoly& p, std::vector<Poly>& into) {
  Poly poly;
  poly.first_term = static_cast<std::uint32_t>(terms_.size());
  for (const auto& [e, c] : p.terms()) {
    Term t{c, static_cast<std::uint32_t>(factors_.size()), 0};
    for (int v = 0; v < dim_; ++v) {
      if (e[static_cast<std::size_t>(v)] == 0) continue;
      factors_.push_back(power_offset_[static_cast<std::size_t>(v)] + e[static_cast<std::size_t>(v)]);
      ++t.factor_count;
    }
    terms_.push_back(t);
  }
  poly.term_count = static_cast<std::uint32_t>(terms_.size()) - poly.first_term;
  into.push_back(poly);
}

void CompiledMap::fill_powers(const Point& z, Complex* powers) const {
  for (int v = 0; v < dim_; ++v) {
    Complex* row = powers + power_offset_[static_cast<std::size_t>(v)];
    row[0] = Complex(1.0);
    for (int n = 1; n <= max_exponent_[static_cast<std::size_t>(v)]; ++n) row[n] = row[n - 1] * z[v];
  }
}

Complex CompiledMap::eval_poly(const Poly& p, const Complex* powers) const {
  Complex sum(0.0);
  const Term* t = terms_.data() + p.first_term;
  for (std::uint32_t i = 0; i < p.term_count; ++i, ++t) {
    Complex value = t->coefficient;
    const std::uint32_t* f = factors_.data() + t->first_factor;
    for (std::uint32_t j = 0; j < t->factor_count; ++j) value *= powers[f[j]];
    sum += value;
  }
  return sum;
}

namespace {
constexpr std::uint32_t kScratchEntries = kMaxDim * (kMaxSymbolicDegree + 1);
// Uninitialised scratch for power tables; avoids zero-filling on every call.
struct PowerScratch {
  alignas(Complex) unsigned char bytes[sizeof(Complex) * kScratchEntries];
  Complex* data() { return reinterpret_cast<Complex*>(bytes); }
};
}  // namespace

void CompiledMap::eval(const Point& z, Point& out) const {
  if (z.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from map dimension");
  PowerScratch scratch;
  Complex* powers = power_table_size_ <= kScratchEntries ? scratch.data() : nullptr;
  std::vector<Complex> heap;
  if (powers == nullptr) {
    heap.resize(power_table_size_);
    powers = heap.data();
  }
  fill_powers(z, powers);
  out.resize(dim_);
  for (int i = 0; i < dim_; ++i) out[i] = eval_poly(values_[static_cast<std::size_t>(i)], powers);
}

void CompiledMap::eval_with_jacobian(const Point& z, Point& out, Jacobian& jac) const {
  if (z.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from map dimension");
  PowerScratch scratch;
  Complex* powers = power_table_size_ <= kScratchEntries ? scratch.data() : nullptr;
  std::vector<Complex> heap;
  if (powers == nullptr) {
    heap.resize(power_table_size_);
    powers = heap.data();
  }
  fill_powers(z, powers);
  out.resize(dim_);
  jac.resize(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    out[i] = eval_poly(values_[static_cast<std::size_t>(i)], powers);
    for (int j = 0; j < dim_; ++j) jac(i, j) = eval_poly(partials_[static_cast<std::size_t>(i * dim_ + j)], powers);
  }
}

Jacobian CompiledMap::jacobian(const Point& z) const {
  Point out;
  Jacobian jac;
  eval_with_jacobian(z, out, jac);
  return jac;
}

}  // namespace semidyn
