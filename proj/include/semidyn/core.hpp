// Shared scalar and vector types, error reporting.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace semidyn {

using Complex = std::complex<double>;

/// Largest ambient dimension supported; keeps points and Jacobians on the stack.
inline constexpr int kMaxDim = 4;

template <typename Scalar>
using VectorN = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

template <typename Scalar>
using MatrixN = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

using Point = VectorN<Complex>;
using Jacobian = MatrixN<Complex>;

enum class ErrorCode {
  DimensionMismatch,
  IndexOutOfRange,
  UnsupportedDimension,
  DegenerateLeadingCoefficient,
  NonConvergence,
  EmptyWord,
  BudgetExceeded,
  DegreeBudgetExceeded,
  GeometryMismatch,
  IoFailure,
  NotAFixedPoint,
  EmptyComponent,
  PreimageUnavailable,
  NotCommuting,
  NotVolumePreserving,
  ParseError,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Euclidean norm on C^k.
inline double norm(const Point& z) { return z.norm(); }

inline bool all_finite(const Point& z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i].real()) || !std::isfinite(z[i].imag())) return false;
  }
  return true;
}

/// Chordal distance on the one-point compactification of C^k.
inline double chordal_distance(const Point& a, const Point& b) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  return 2.0 * (a - b).norm() / std::sqrt((1.0 + na) * (1.0 + nb));
}

inline Point make_point(std::initializer_list<Complex> values) {
  Point p(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const Complex& v : values) p[i++] = v;
  return p;
}

/// SplitMix64 finaliser; the keyed counter streams below are built on it.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return mix64(seed ^ mix64(value + 0x632be59bd9b4e019ULL));
}

/// Counter-based random stream: the n-th output depends only on (key, n).
class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next() { return hash_combine(key_, counter_++); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    const unsigned __int128 wide = static_cast<unsigned __int128>(next()) * bound;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace semidyn
