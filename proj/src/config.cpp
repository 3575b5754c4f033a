#include "semidyn/config.hpp"

#include "semidyn/expr.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace semidyn {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, where + ": " + what);
}

// Reads one JSON object, remembering which keys were consumed so the rest can
// be rejected as unknown.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string path(const char* key) const { return where_.empty() ? key : where_ + "." + key; }

  const Json& node(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  bool get(const char* key, T& out) {
    if (!j_.contains(key)) return false;
    convert(node(key), path(key), out);
    return true;
  }

  template <class T>
  void need(const char* key, T& out) {
    if (!get(key, out)) fail(path(key), "missing");
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(path(item.key().c_str()), "unknown key");
  }

  static void convert(const Json& v, const std::string& where, double& out) {
    if (!v.is_number()) fail(where, "expected a number");
    out = v.get<double>();
  }
  static void convert(const Json& v, const std::string& where, int& out) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    const auto x = v.get<long long>();
    if (x < INT32_MIN || x > INT32_MAX) fail(where, "integer out of range");
    out = static_cast<int>(x);
  }
  static void convert(const Json& v, const std::string& where, std::uint64_t& out) {
    if (!v.is_number_unsigned()) fail(where, "expected a nonnegative integer");
    out = v.get<std::uint64_t>();
  }
  static void convert(const Json& v, const std::string& where, std::string& out) {
    if (!v.is_string()) fail(where, "expected a string");
    out = v.get<std::string>();
  }
  static void convert(const Json& v, const std::string& where, Complex& out) {
    if (v.is_number()) {
      out = v.get<double>();
      return;
    }
    std::string s;
    convert(v, where, s);
    try {
      out = parse_complex(s);
    } catch (const Error& e) {
      fail(where, e.what());
    }
  }
  template <class T>
  static void convert(const Json& v, const std::string& where, std::vector<T>& out) {
    if (!v.is_array()) fail(where, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T x;
      convert(v[i], where + "[" + std::to_string(i) + "]", x);
      out.push_back(std::move(x));
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_pair(Reader& r, const char* key, double& lo, double& hi) {
  std::vector<double> v;
  if (!r.get(key, v)) return;
  if (v.size() != 2) fail(r.path(key), "expected [low, high]");
  lo = v[0], hi = v[1];
}

Point to_point(const std::vector<Complex>& v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i];
  return p;
}

std::vector<Complex> from_point(const Point& p) { return {p.data(), p.data() + p.size()}; }

Region read_region(const Json& j) {
  Reader r(j, "region");
  Region out;
  std::string mode = "modulus";
  r.get("mode", mode);
  if (mode == "modulus") out.mode = RegionMode::ModulusPlane;
  else if (mode == "slice") out.mode = RegionMode::ComplexSlice;
  else fail("region.mode", "expected \"modulus\" or \"slice\"");
  read_pair(r, "x", out.x_low, out.x_high);
  read_pair(r, "y", out.y_low, out.y_high);
  r.need("nx", out.nx);
  r.need("ny", out.ny);
  r.get("phase_samples", out.phase_samples);
  r.get("phase_offset", out.phase_offset);
  r.get("free_coordinate", out.free_coordinate);
  std::vector<Complex> fixture;
  if (r.get("fixture", fixture)) out.fixture = to_point(fixture);
  r.finish();
  return out;
}

ClassifierConfig read_classifier(const Json* classifier, const Json* sampler) {
  ClassifierConfig c;
  if (classifier) {
    Reader r(*classifier, "classifier");
    r.get("R", c.R);
    r.get("delta", c.delta);
    r.get("kappa", c.kappa);
    r.get("n_companions", c.n_companions);
    r.get("probe", c.probe);
    r.get("steer_beam", c.steer_beam);
    r.get("steer_depth", c.steer_depth);
    r.get("resolution", c.resolution);
    r.finish();
  }
  if (sampler) {
    Reader r(*sampler, "sampler");
    std::string mode = "random";
    r.get("mode", mode);
    if (mode == "random") c.sampler = SamplerMode::Random;
    else if (mode == "exhaustive") c.sampler = SamplerMode::Exhaustive;
    else fail("sampler.mode", "expected \"random\" or \"exhaustive\"");
    r.get("N", c.N);
    r.get("L", c.L);
    r.finish();
  }
  return c;
}

Factor read_factor(const Json& j, const std::string& where) {
  Reader r(j, where);
  std::string kind;
  r.need("kind", kind);
  Factor f;
  if (kind == "interval") f.kind = FactorKind::ModulusInterval;
  else if (kind == "circle") f.kind = FactorKind::ModulusCircle;
  else if (kind == "segment") f.kind = FactorKind::RealSegment;
  else if (kind == "disk") f.kind = FactorKind::Disk;
  else fail(where + ".kind", "unknown factor kind " + kind);
  r.need("a", f.a);
  f.b = f.a;
  r.get("b", f.b);
  r.finish();
  return f;
}

ReferenceSpec read_reference(const Json& j) {
  Reader r(j, "reference");
  ReferenceSpec out;
  r.need("kind", out.kind);
  if (out.kind == "example1") {
    r.get("a", out.a);
  } else if (out.kind == "custom") {
    const Json& terms = r.node("terms");
    if (!terms.is_array() || terms.empty()) fail("reference.terms", "expected a nonempty array");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string where = "reference.terms[" + std::to_string(t) + "]";
      if (!terms[t].is_array()) fail(where, "expected an array of factors");
      std::vector<Factor> term;
      for (std::size_t f = 0; f < terms[t].size(); ++f) term.push_back(read_factor(terms[t][f], where + "[" + std::to_string(f) + "]"));
      out.custom.terms.push_back(std::move(term));
    }
  } else if (out.kind != "single_squaring" && out.kind != "chebyshev") {
    fail("reference.kind", "unknown reference " + out.kind);
  }
  r.finish();
  return out;
}

const char* factor_kind_name(FactorKind k) {
  switch (k) {
    case FactorKind::ModulusInterval: return "interval";
    case FactorKind::ModulusCircle: return "circle";
    case FactorKind::RealSegment: return "segment";
    case FactorKind::Disk: return "disk";
  }
  return "disk";
}

Json complex_array(const std::vector<Complex>& v) {
  Json out = Json::array();
  for (Complex c : v) out.push_back(format_complex(c));
  return out;
}

}  // namespace

ReferenceSet ReferenceSpec::resolve() const {
  if (kind == "example1") return example1_reference(a);
  if (kind == "single_squaring") return single_squaring_reference();
  if (kind == "chebyshev") return chebyshev_reference();
  return custom;
}

Semigroup ExperimentConfig::semigroup() const {
  std::vector<PolyMap> maps;
  for (const auto& g : generators) {
    std::vector<MultiPoly> comps;
    for (const auto& c : g.components) comps.push_back(parse_poly(c, dimension));
    maps.emplace_back(std::move(comps), g.label);
  }
  if (family) {
    if (dimension != 2) throw Error(ErrorCode::ConfigError, "family: chebyshev maps live in dimension 2");
    for (auto& f : chebyshev_family(family->truncation)) maps.push_back(std::move(f));
  }
  if (maps.empty()) throw Error(ErrorCode::ConfigError, "no generators");
  return Semigroup(std::move(maps), name);
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  classifier.seed = s;
}

std::vector<std::string> ExperimentConfig::caveats() const {
  std::vector<std::string> out;
  if (family) {
    out.push_back("chebyshev family truncated to f_0..f_" + std::to_string(family->truncation) +
                  "; the full semigroup has infinitely many generators");
  }
  return out;
}

ExperimentConfig parse_config(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("json: ") + e.what());
  }
  Reader r(j, "");
  ExperimentConfig c;
  r.need("seed", c.seed);
  r.get("name", c.name);
  r.get("dimension", c.dimension);
  if (c.dimension < 1 || c.dimension > kMaxDim) fail("dimension", "must lie in 1.." + std::to_string(kMaxDim));

  if (r.has("generators")) {
    const Json& gens = r.node("generators");
    if (!gens.is_array()) fail("generators", "expected an array");
    for (std::size_t i = 0; i < gens.size(); ++i) {
      Reader g(gens[i], "generators[" + std::to_string(i) + "]");
      GeneratorSpec spec;
      g.get("label", spec.label);
      g.need("components", spec.components);
      g.finish();
      if (static_cast<int>(spec.components.size()) != c.dimension)
        fail("generators[" + std::to_string(i) + "].components", "expected one expression per coordinate");
      c.generators.push_back(std::move(spec));
    }
  }
  if (r.has("family")) {
    Reader f(r.node("family"), "family");
    FamilySpec spec;
    f.need("kind", spec.kind);
    if (spec.kind != "chebyshev") fail("family.kind", "only \"chebyshev\" is known");
    f.get("truncation", spec.truncation);
    if (spec.truncation < 0 || spec.truncation > 32) fail("family.truncation", "must lie in 0..32");
    f.finish();
    c.family = spec;
  }
  if (c.generators.empty() && !c.family) fail("generators", "at least one generator or a family is required");

  if (r.has("region")) c.region = read_region(r.node("region"));
  const Json* classifier = r.has("classifier") ? &r.node("classifier") : nullptr;
  const Json* sampler = r.has("sampler") ? &r.node("sampler") : nullptr;
  c.classifier = read_classifier(classifier, sampler);
  c.classifier.seed = c.seed;
  c.classifier.validate();
  if (r.has("reference")) c.reference = read_reference(r.node("reference"));
  r.get("epsilon", c.epsilon);

  if (r.has("fixed_points")) {
    Reader f(r.node("fixed_points"), "fixed_points");
    FixedPointSpec s;
    f.get("word", s.word);
    f.get("radius", s.radius);
    f.get("n_starts", s.n_starts);
    f.get("tol", s.tol);
    f.get("max_iter", s.max_iter);
    f.finish();
    c.fixed_points = s;
  }
  if (r.has("orbit")) {
    Reader o(r.node("orbit"), "orbit");
    OrbitSpec s;
    o.need("word", s.word);
    o.need("point", s.point);
    o.get("R", s.R);
    if (!(s.R > 0.0)) fail("orbit.R", "must be positive");
    o.finish();
    c.orbit = s;
  }
  if (r.has("recurrence")) {
    Reader o(r.node("recurrence"), "recurrence");
    RecurrenceSpec s;
    o.get("at", s.at);
    o.get("component", s.component);
    o.get("n_sequences", s.n_sequences);
    o.get("lengths", s.lengths);
    o.get("n_samples", s.n_samples);
    o.get("min_return_lengths", s.min_return_lengths);
    o.get("raster_csv", s.raster_csv);
    o.finish();
    c.recurrence = s;
  }
  if (r.has("verify")) {
    Reader o(r.node("verify"), "verify");
    VerifySpec s;
    o.get("properties", s.properties);
    o.get("power_tuple", s.power_tuple);
    o.get("power_tuple2", s.power_tuple2);
    o.get("threshold", s.threshold);
    o.get("boundary_threshold", s.boundary_threshold);
    o.get("n_samples", s.n_samples);
    o.get("n_boundary_cells", s.n_boundary_cells);
    o.get("component_at", s.component_at);
    o.finish();
    c.verify = s;
  }
  if (r.has("output")) {
    Reader o(r.node("output"), "output");
    o.get("dir", c.output.dir);
    o.get("stem", c.output.stem);
    o.finish();
  }
  r.finish();

  // expressions are checked now so a bad config fails before any work
  (void)c.semigroup();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string print_config(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["dimension"] = c.dimension;
  j["generators"] = Json::array();
  for (const auto& g : c.generators) j["generators"].push_back(Json{{"label", g.label}, {"components", g.components}});
  if (c.family) j["family"] = Json{{"kind", c.family->kind}, {"truncation", c.family->truncation}};

  const Region& rg = c.region;
  Json region{{"mode", rg.mode == RegionMode::ModulusPlane ? "modulus" : "slice"},
              {"x", {rg.x_low, rg.x_high}},
              {"y", {rg.y_low, rg.y_high}},
              {"nx", rg.nx},
              {"ny", rg.ny}};
  if (rg.mode == RegionMode::ModulusPlane) {
    region["phase_samples"] = rg.phase_samples;
    region["phase_offset"] = rg.phase_offset;
  } else {
    region["free_coordinate"] = rg.free_coordinate;
    region["fixture"] = complex_array(from_point(rg.fixture));
  }
  j["region"] = region;

  const ClassifierConfig& k = c.classifier;
  j["classifier"] = Json{{"R", k.R},         {"delta", k.delta},           {"kappa", k.kappa},
                         {"n_companions", k.n_companions}, {"probe", k.probe}, {"steer_beam", k.steer_beam},
                         {"steer_depth", k.steer_depth},   {"resolution", k.resolution}};
  j["sampler"] = Json{{"mode", k.sampler == SamplerMode::Random ? "random" : "exhaustive"}, {"N", k.N}, {"L", k.L}};

  if (c.reference) {
    Json ref{{"kind", c.reference->kind}};
    if (c.reference->kind == "example1") ref["a"] = c.reference->a;
    if (c.reference->kind == "custom") {
      Json terms = Json::array();
      for (const auto& term : c.reference->custom.terms) {
        Json t = Json::array();
        for (const Factor& f : term) t.push_back(Json{{"kind", factor_kind_name(f.kind)}, {"a", f.a}, {"b", f.b}});
        terms.push_back(t);
      }
      ref["terms"] = terms;
    }
    j["reference"] = ref;
  }
  j["epsilon"] = c.epsilon;
  if (c.fixed_points) {
    const auto& s = *c.fixed_points;
    j["fixed_points"] = Json{{"word", s.word}, {"radius", s.radius}, {"n_starts", s.n_starts}, {"tol", s.tol}, {"max_iter", s.max_iter}};
  }
  if (c.orbit) j["orbit"] = Json{{"word", c.orbit->word}, {"point", complex_array(c.orbit->point)}, {"R", c.orbit->R}};
  if (c.recurrence) {
    const auto& s = *c.recurrence;
    j["recurrence"] = Json{{"at", complex_array(s.at)},           {"component", s.component},
                           {"n_sequences", s.n_sequences},         {"lengths", s.lengths},
                           {"n_samples", s.n_samples},             {"min_return_lengths", s.min_return_lengths},
                           {"raster_csv", s.raster_csv}};
  }
  if (c.verify) {
    const auto& s = *c.verify;
    j["verify"] = Json{{"properties", s.properties},
                       {"power_tuple", s.power_tuple},
                       {"power_tuple2", s.power_tuple2},
                       {"threshold", s.threshold},
                       {"boundary_threshold", s.boundary_threshold},
                       {"n_samples", s.n_samples},
                       {"n_boundary_cells", s.n_boundary_cells},
                       {"component_at", complex_array(s.component_at)}};
  }
  j["output"] = Json{{"dir", c.output.dir}, {"stem", c.output.stem}};
  return j.dump(2) + "\n";
}

std::string format_complex(Complex c) {
  char buf[80];
  if (c.imag() == 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", c.real());
  } else {
    std::snprintf(buf, sizeof buf, "%.17g%c%.17gi", c.real(), std::signbit(c.imag()) ? '-' : '+', std::abs(c.imag()));
  }
  return buf;
}

std::string git_blob_sha1(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) && EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) && EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error(ErrorCode::IoFailure, "sha1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string config_hash(const ExperimentConfig& c) { return git_blob_sha1(print_config(c)); }

}  // namespace semidyn
