// Pointwise Fatou/Julia verdicts from sampled words.
//
// Every word is applied cyclically until at least `probe` letters have acted,
// and the centre is tracked together with companions at distance delta.
// Separation is measured in the chordal metric, so the ratio is a sampled
// spherical derivative (Marty's criterion). Besides the sampled words one
// "steered" word is added per point: a beam search over letters that maximises
// the spherical derivative, which finds the rare words exposing non-normality.
#pragma once

#include "semidyn/semigroup.hpp"

#include <optional>
#include <string>
#include <vector>

namespace semidyn {

enum class PointClass {
  FatouBounded,
  FatouEscaping,
  FatouMixed,  // each word uniform, but some words escape while others stay bounded
  JuliaCandidate,
  Undetermined,
};

const char* to_string(PointClass c);
std::optional<PointClass> point_class_from_string(const std::string& s);

inline bool is_fatou(PointClass c) {
  return c == PointClass::FatouBounded || c == PointClass::FatouEscaping || c == PointClass::FatouMixed;
}

enum class SamplerMode { Random, Exhaustive };

struct ClassifierConfig {
  double R = 1e6;
  int L = 12;
  int N = 200;
  double delta = 1e-4;
  double kappa = 1e3;
  std::uint64_t seed = 0;
  int n_companions = 8;
  SamplerMode sampler = SamplerMode::Random;  // Exhaustive: every word of length <= L
  int probe = 16;                             // minimum letters per cyclic probe
  int steer_beam = 8;
  int steer_depth = 24;
  /// Spatial scale of the verdict; the threshold becomes min(kappa, 1/resolution).
  /// 0 is pointwise, a negative value lets scans substitute their cell diagonal.
  double resolution = -1.0;

  double effective_kappa() const;
  /// Throws ConfigError when an invariant is broken.
  void validate() const;

  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

struct Evidence {
  int n_words = 0;  // words examined (fewer than the word set after an early Julia verdict)
  int n_escaping = 0;
  int n_bounded = 0;
  int n_nonuniform = 0;
  int n_slow = 0;
  double max_separation_ratio = 0.0;
  std::vector<Word> witnesses;  // up to 4
};

struct Classification {
  PointClass verdict = PointClass::Undetermined;
  Evidence evidence;
  double score = 0.0;  // max(0, log max_separation_ratio)
};

/// First number of letters after which the norm exceeds R, if any.
std::optional<int> escape_time(const Semigroup& g, const Word& w, const Point& z, double R);

/// Holds the word set, which depends on the seed only, so one instance can
/// classify many points from several threads.
class Classifier {
 public:
  Classifier(const Semigroup& g, const ClassifierConfig& cfg);

  const Semigroup& semigroup() const { return g_; }
  const ClassifierConfig& config() const { return cfg_; }
  const std::vector<Word>& words() const { return words_; }

  /// stop_early ends at the first Julia witness.
  Classification classify(const Point& z, bool stop_early = true) const;

  /// Spherical-derivative maximising word from z (indices[0] outermost), empty if none survives.
  Word steered_word(const Point& z) const;

 private:
  struct Probe;
  Probe run(const Word& w, const Point& z, const std::vector<Point>& companions, const std::vector<double>& base) const;

  const Semigroup& g_;
  ClassifierConfig cfg_;
  std::vector<Word> words_;
  // generators ignoring some variable can map overflowed points back to finite ones
  std::vector<char> collapsible_;
};

Classification classify_point(const Semigroup& g, const Point& z, const ClassifierConfig& cfg);

double normality_score(const Semigroup& g, const Point& z, const ClassifierConfig& cfg);

/// Shortest word u with w = u^n, rotated to its lexicographically least form.
Word cyclic_canonical(const Word& w);

/// Points at Euclidean distance delta around z: axis directions first, then seeded ones.
std::vector<Point> companion_points(const Point& z, double delta, int count, std::uint64_t seed);

}  // namespace semidyn
