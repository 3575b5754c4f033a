// Experiment configuration: a JSON document naming the generators, region,
// classifier settings and per-command options. Unknown keys are rejected and
// the seed is mandatory.
#pragma once

#include "semidyn/classify.hpp"
#include "semidyn/gridscan.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semidyn {

struct GeneratorSpec {
  std::string label;
  std::vector<std::string> components;  // expression strings in z1..zk
  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

// Indexed families expanded at load time; only "chebyshev" exists.
struct FamilySpec {
  std::string kind = "chebyshev";
  int truncation = 4;
  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

struct ReferenceSpec {
  std::string kind;  // example1 | single_squaring | chebyshev | custom
  double a = 2.0;    // example1 only
  ReferenceSet custom;
  ReferenceSet resolve() const;
  friend bool operator==(const ReferenceSpec&, const ReferenceSpec&) = default;
};

struct FixedPointSpec {
  std::vector<int> word{0};
  double radius = 2.0;
  int n_starts = 200;
  double tol = 1e-10;
  int max_iter = 100;
  friend bool operator==(const FixedPointSpec&, const FixedPointSpec&) = default;
};

struct OrbitSpec {
  std::vector<int> word;
  std::vector<Complex> point;
  double R = 1e6;  // escape radius
  friend bool operator==(const OrbitSpec&, const OrbitSpec&) = default;
};

struct RecurrenceSpec {
  std::vector<Complex> at;  // a point of the component; empty means use `component`
  int component = -1;
  int n_sequences = 12;
  std::vector<int> lengths{1, 2, 3, 4, 5, 6};
  int n_samples = 8;
  int min_return_lengths = 3;
  std::string raster_csv;  // labels come from this raster instead of a scan when set
  friend bool operator==(const RecurrenceSpec&, const RecurrenceSpec&) = default;
};

struct VerifySpec {
  std::vector<std::string> properties;
  std::vector<int> power_tuple;   // finite-index and first tuple of power-tuple
  std::vector<int> power_tuple2;  // second tuple of power-tuple
  double threshold = 0.05;
  double boundary_threshold = 0.1;
  int n_samples = 200;
  int n_boundary_cells = 200;
  std::vector<Complex> component_at;  // volume-divergence component
  friend bool operator==(const VerifySpec&, const VerifySpec&) = default;
};

struct OutputSpec {
  std::string dir = "out";
  std::string stem;  // defaults to the config name
  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ExperimentConfig {
  std::string name;
  int dimension = 2;
  std::vector<GeneratorSpec> generators;
  std::optional<FamilySpec> family;
  Region region;
  ClassifierConfig classifier;
  std::optional<ReferenceSpec> reference;
  double epsilon = 0.05;
  std::optional<FixedPointSpec> fixed_points;
  std::optional<OrbitSpec> orbit;
  std::optional<RecurrenceSpec> recurrence;
  std::optional<VerifySpec> verify;
  OutputSpec output;
  std::uint64_t seed = 0;

  /// Explicit generators followed by the expanded family.
  Semigroup semigroup() const;
  /// Overrides the seed everywhere it is used.
  void set_seed(std::uint64_t s);
  /// Caveats that belong in every manifest (family truncation, for now).
  std::vector<std::string> caveats() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// ConfigError for schema problems, ParseError for bad expressions.
ExperimentConfig parse_config(std::string_view json_text);
/// IoFailure if unreadable, otherwise as parse_config.
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON; parse_config(print_config(c)) == c.
std::string print_config(const ExperimentConfig& c);

/// Lossless text for a complex number accepted by parse_complex.
std::string format_complex(Complex c);

/// SHA-1 of "blob <size>\0" + bytes, as git computes object ids.
std::string git_blob_sha1(std::string_view bytes);
/// git_blob_sha1 of the canonical JSON.
std::string config_hash(const ExperimentConfig& c);

}  // namespace semidyn
