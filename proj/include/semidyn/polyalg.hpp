// Sparse multivariate polynomials over C, polynomial maps of C^k and their
// Jacobians, plus a univariate simultaneous root finder.
#pragma once

#include "semidyn/core.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace semidyn {

using Exponent = std::vector<std::uint16_t>;

/// Polynomial in `nvars` complex variables, stored as exponent -> coefficient.
/// Terms whose coefficient modulus is at most kZeroTolerance are never stored.
class MultiPoly {
 public:
  static constexpr double kZeroTolerance = 1e-14;

  explicit MultiPoly(int nvars);

  static MultiPoly constant(int nvars, Complex value);
  static MultiPoly variable(int nvars, int index);
  static MultiPoly monomial(int nvars, const Exponent& exponent, Complex coefficient);

  int nvars() const { return nvars_; }
  const std::map<Exponent, Complex>& terms() const { return terms_; }

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Complex constant_term() const;
  int total_degree() const;
  int degree_in(int var) const;
  /// Index of the only variable with positive degree, -1 if constant, -2 if several.
  int sole_variable() const;

  /// Adds c * x^exponent, dropping the term if it cancels.
  void add_term(const Exponent& exponent, Complex coefficient);

  /// Drops every term at or below the zero tolerance.
  MultiPoly canonical() const;

  template <typename Derived>
  Complex operator()(const Eigen::MatrixBase<Derived>& z) const;

  MultiPoly& operator+=(const MultiPoly& other);
  MultiPoly& operator-=(const MultiPoly& other);
  MultiPoly& operator*=(Complex scale);

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator-(MultiPoly a) { return a *= Complex(-1.0); }
  friend MultiPoly operator*(MultiPoly a, Complex s) { return a *= s; }
  friend MultiPoly operator*(Complex s, MultiPoly a) { return a *= s; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);

  friend bool operator==(const MultiPoly& a, const MultiPoly& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

  /// Renders in the expression grammar accepted by parse_poly; exact round trip.
  std::string to_string() const;

 private:
  int nvars_;
  std::map<Exponent, Complex> terms_;
};

MultiPoly pow(const MultiPoly& p, unsigned n);

/// Formal partial derivative d p / d z_var.
MultiPoly differentiate(const MultiPoly& p, int var);

/// p(q_1, ..., q_k): substitutes one polynomial per variable of p.
MultiPoly substitute(const MultiPoly& p, std::span<const MultiPoly> values);

/// Checked evaluation; throws DimensionMismatch.
Complex eval_poly(const MultiPoly& p, const Point& z);

/// A k-tuple of polynomials in k variables: one generator of a semigroup.
class PolyMap {
 public:
  PolyMap(std::vector<MultiPoly> components, std::string label = {});

  static PolyMap identity(int k, std::string label = "id");

  int dim() const { return static_cast<int>(components_.size()); }
  const std::vector<MultiPoly>& components() const { return components_; }
  const MultiPoly& operator[](int i) const { return components_[static_cast<std::size_t>(i)]; }
  const std::string& label() const { return label_; }
  int total_degree() const;

  /// True when component i only involves z_1..z_{i+1} (lower-triangular form).
  bool is_triangular() const;

  friend bool operator==(const PolyMap& a, const PolyMap& b) {
    return a.components_ == b.components_;
  }

 private:
  std::vector<MultiPoly> components_;
  std::string label_;
};

Point eval_map(const PolyMap& f, const Point& z);

/// Rectangular array of polynomials sharing one variable count.
class PolyMatrix {
 public:
  PolyMatrix(int rows, int cols, int nvars);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  MultiPoly& operator()(int i, int j) { return entries_[static_cast<std::size_t>(i * cols_ + j)]; }
  const MultiPoly& operator()(int i, int j) const {
    return entries_[static_cast<std::size_t>(i * cols_ + j)];
  }

  Jacobian evaluate(const Point& z) const;

 private:
  int rows_;
  int cols_;
  std::vector<MultiPoly> entries_;
};

PolyMatrix jacobian(const PolyMap& f);

/// Cofactor expansion; k <= 4.
MultiPoly determinant(const PolyMatrix& m);
MultiPoly jacobian_det(const PolyMap& f);

/// Constant Jacobian determinant of modulus within tol of one.
bool is_volume_preserving(const PolyMap& f, double tol = 1e-12);

inline constexpr int kMaxSymbolicDegree = 64;

/// outer o inner, refused when the result would exceed max_degree.
PolyMap compose(const PolyMap& outer, const PolyMap& inner, int max_degree = kMaxSymbolicDegree);

/// n-fold self composition f^n (n >= 1).
PolyMap power(const PolyMap& f, int n, int max_degree = kMaxSymbolicDegree);

/// All complex roots of sum_j coeffs[j] x^j by Aberth-Ehrlich iteration.
std::vector<Complex> roots_1d(std::span<const Complex> coeffs, double tol = 1e-12, int max_iter = 500);

/// Roots of a polynomial depending on at most one variable.
std::vector<Complex> roots_1d(const MultiPoly& p, double tol = 1e-12, int max_iter = 500);

/// Flattened evaluation form of a PolyMap and its Jacobian for hot loops.
class CompiledMap {
 public:
  explicit CompiledMap(const PolyMap& f);

  int dim() const { return dim_; }

  void eval(const Point& z, Point& out) const;
  Point operator()(const Point& z) const {
    Point out(dim_);
    eval(z, out);
    return out;
  }
  void eval_with_jacobian(const Point& z, Point& out, Jacobian& jac) const;
  Jacobian jacobian(const Point& z) const;

 private:
  struct Term {
    Complex coefficient;
    std::uint32_t first_factor;
    std::uint32_t factor_count;
  };
  struct Poly {
    std::uint32_t first_term = 0;
    std::uint32_t term_count = 0;
  };

  void append(const MultiPoly& p, std::vector<Poly>& into);
  void fill_powers(const Point& z, Complex* powers) const;
  Complex eval_poly(const Poly& p, const Complex* powers) const;

  int dim_;
  std::vector<int> max_exponent_;
  std::vector<std::uint32_t> power_offset_;
  std::uint32_t power_table_size_ = 0;
  std::vector<Term> terms_;
  std::vector<std::uint32_t> factors_;
  std::vector<Poly> values_;
  std::vector<Poly> partials_;  // row-major dim_ x dim_
};

template <typename Derived>
Complex MultiPoly::operator()(const Eigen::MatrixBase<Derived>& z) const {
  int max_exp = 0;
  for (const auto& [e, c] : terms_)
    for (auto v : e) max_exp = std::max<int>(max_exp, v);
  // powers[v * (max_exp + 1) + n] = z_v^n, memoised across terms
  std::vector<Complex> powers(static_cast<std::size_t>(nvars_ * (max_exp + 1)));
  for (int v = 0; v < nvars_; ++v) {
    Complex acc(1.0);
    for (int n = 0; n <= max_exp; ++n) {
      powers[static_cast<std::size_t>(v * (max_exp + 1) + n)] = acc;
      acc *= Complex(z[v]);
    }
  }
  Complex sum(0.0);
  for (const auto& [e, c] : terms_) {
    Complex t = c;
    for (int v = 0; v < nvars_; ++v)
      if (e[static_cast<std::size_t>(v)] != 0)
        t *= powers[static_cast<std::size_t>(v * (max_exp + 1) + e[static_cast<std::size_t>(v)])];
    sum += t;
  }
  return sum;
}

}  // namespace semidyn
