// Finitely generated semigroups of polynomial maps, words and word sampling.
#pragma once

#include "semidyn/polyalg.hpp"

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace semidyn {

/// Element of G as a sequence of generator indices; indices[0] is the
/// outermost map, so the last index is applied first.
struct Word {
  std::vector<std::uint32_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  std::uint32_t operator[](std::size_t i) const { return indices[i]; }

  std::string to_string() const;  // "0,1,1"
  static Word parse(const std::string& text);

  friend auto operator<=>(const Word&, const Word&) = default;
  friend bool operator==(const Word&, const Word&) = default;
};

/// u o v
Word concat(const Word& u, const Word& v);

inline Word repeat_letter(std::uint32_t letter, std::size_t times) {
  return Word{std::vector<std::uint32_t>(times, letter)};
}

class Semigroup {
 public:
  explicit Semigroup(std::vector<PolyMap> generators, std::string name = {});

  int size() const { return static_cast<int>(generators_.size()); }
  int dim() const { return generators_.front().dim(); }
  const std::string& name() const { return name_; }
  const std::vector<PolyMap>& generators() const { return generators_; }
  const PolyMap& generator(int i) const { return generators_.at(static_cast<std::size_t>(i)); }
  const CompiledMap& compiled(int i) const { return compiled_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<PolyMap> generators_;
  std::vector<CompiledMap> compiled_;
  std::string name_;
};

inline constexpr double kOverflowGuard = 1e150;

/// phi_{w[0]}( ... phi_{w[last]}(z) ...); std::nullopt means an intermediate
/// norm exceeded kOverflowGuard (escaped to infinity). Throws EmptyWord.
std::optional<Point> eval_word(const Semigroup& g, const Word& w, const Point& z);

/// Jacobian of the word at z by the chain rule; nullopt on overflow.
std::optional<Jacobian> word_jacobian(const Semigroup& g, const Word& w, const Point& z);

/// Every word of exact length L over m letters in lexicographic order.
std::vector<Word> enumerate_words(int m, int length);

struct ExhaustiveSampler {
  int length = 1;
};

struct RandomSampler {
  int count = 200;
  int max_length = 12;
  std::uint64_t seed = 0;
};

using WordSampler = std::variant<ExhaustiveSampler, RandomSampler>;

/// The draw with the given index, keyed by (seed, index) only.
Word draw_word(int m, const RandomSampler& sampler, std::uint64_t index);

std::vector<Word> sample_words(const Semigroup& g, const WordSampler& sampler);

struct PowerTuple {
  std::vector<int> exponents;
};

/// <phi_1^{l_1}, ..., phi_m^{l_m}> by symbolic self composition.
Semigroup power_subsemigroup(const Semigroup& g, const PowerTuple& l);

struct OrbitRecord {
  std::vector<Point> trajectory;  // z, then the image after each applied letter
  std::optional<int> exit_step;   // letters applied when the norm first exceeded R
  bool completed = false;
  double max_norm = 0.0;
};

/// Partial-word images of z; records at most segment_limit trajectory points
/// (all when segment_limit < 0) but always reports exit and max norm.
OrbitRecord orbit(const Semigroup& g, const Word& w, const Point& z, double escape_radius, int segment_limit = -1);

/// A single generator or a word viewed as one map C^k -> C^k, with its Jacobian.
class MapView {
 public:
  explicit MapView(const PolyMap& f);
  MapView(const Semigroup& g, const Word& w);

  int dim() const { return dim_; }
  std::size_t letters() const { return order_.size(); }

  void eval(const Point& z, Point& out) const;
  Point operator()(const Point& z) const;
  void eval_with_jacobian(const Point& z, Point& out, Jacobian& jac) const;
  Jacobian jacobian(const Point& z) const;

  /// n-fold self composition.
  MapView power(int n) const;

 private:
  MapView() = default;
  std::shared_ptr<const std::vector<CompiledMap>> maps_;
  std::vector<std::uint32_t> order_;  // order of application
  int dim_ = 0;
};

/// T_0 = 1, T_1 = z, T_{n+1} = 2 z T_n - T_{n-1}.
std::vector<MultiPoly> chebyshev_polynomials(int count, int nvars, int var);

/// f_i(z1, z2) = (T_i(z1), z2^2) for i = 0..truncation.
std::vector<PolyMap> chebyshev_family(int truncation);

}  // namespace semidyn
