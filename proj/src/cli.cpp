#include "semidyn/cli.hpp"

#include "semidyn/components.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/fixedpoints.hpp"
#include "semidyn/properties.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace semidyn {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::ParseError:
    case ErrorCode::IoFailure:
      return kExitConfig;
    case ErrorCode::BudgetExceeded:
    case ErrorCode::DegreeBudgetExceeded:
      return kExitBudget;
    case ErrorCode::NotCommuting:
    case ErrorCode::NotVolumePreserving:
    case ErrorCode::PreimageUnavailable:
    case ErrorCode::EmptyComponent:
    case ErrorCode::NotAFixedPoint:
    case ErrorCode::EmptyWord:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::UnsupportedDimension:
    case ErrorCode::GeometryMismatch:
      return kExitPrecondition;
    default:
      return kExitFailure;
  }
}

std::string resolve_config_path(const std::string& name_or_path) {
  if (fs::exists(name_or_path)) return name_or_path;
  const fs::path bundled = fs::path(SEMIDYN_CONFIG_DIR) / (name_or_path + ".json");
  if (name_or_path.find('/') == std::string::npos && fs::exists(bundled)) return bundled.string();
  return name_or_path;
}

namespace {

std::string decimal(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json point_json(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(format_complex(p[i]));
  return a;
}

Json report_json(const PropertyReport& r) {
  Json w = Json::array();
  for (const Witness& x : r.witnesses) {
    Json j{{"point", point_json(x.point)}, {"generator", x.generator}};
    j["word"] = x.word ? Json(x.word->to_string()) : Json(nullptr);
    j["detail"] = x.detail;
    w.push_back(j);
  }
  return Json{{"name", r.name},
              {"applicable", r.applicable},
              {"n_checked", r.n_checked},
              {"n_violations", r.n_violations},
              {"n_excluded", r.n_excluded},
              {"threshold", r.threshold},
              {"violation_rate", r.violation_rate},
              {"pass", r.pass},
              {"seed", r.seed},
              {"witnesses", w},
              {"note", r.note}};
}

Json recurrence_json(const RecurrenceReport& r) {
  return Json{{"component", r.component},
              {"n_sequences", r.n_sequences},
              {"n_recurrent", r.n_recurrent},
              {"n_escaping", r.n_escaping},
              {"distinct_target_components", r.distinct_target_components},
              {"cumulative_targets", r.cumulative_targets},
              {"verdict", to_string(r.verdict)},
              {"note", r.note}};
}

Json fixed_point_json(const FixedPointRecord& f) {
  Json ev = Json::array();
  for (Complex c : f.eigenvalues) ev.push_back(format_complex(c));
  return Json{{"location", point_json(f.location)},
              {"residual", decimal(f.residual)},
              {"eigenvalues", ev},
              {"kind", to_string(f.kind)},
              {"jacobian_det_modulus", decimal(f.jacobian_det_modulus)}};
}

Json comparison_json(const ComparisonReport& c) {
  return Json{{"n_cells", c.n_cells},
              {"n_decided", c.n_decided},
              {"n_band_excluded", c.n_band_excluded},
              {"n_undetermined", c.n_undetermined},
              {"agreement", c.agreement ? Json(*c.agreement) : Json(nullptr)},
              {"julia_member", c.julia_member},
              {"julia_nonmember", c.julia_nonmember},
              {"fatou_member", c.fatou_member},
              {"fatou_nonmember", c.fatou_nonmember},
              {"epsilon", c.epsilon}};
}

std::vector<Complex> parse_point_text(const std::string& text) {
  std::vector<Complex> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_complex(part));
  return out;
}

Point to_point(const std::vector<Complex>& v, int k) {
  if (static_cast<int>(v.size()) != k) throw Error(ErrorCode::DimensionMismatch, "point needs " + std::to_string(k) + " coordinates");
  Point p(k);
  for (int i = 0; i < k; ++i) p[i] = v[static_cast<std::size_t>(i)];
  return p;
}

Word to_word(const std::vector<int>& v) {
  Word w;
  for (int i : v) {
    if (i < 0) throw Error(ErrorCode::IndexOutOfRange, "negative generator index");
    w.indices.push_back(static_cast<std::uint32_t>(i));
  }
  return w;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
  std::string word, point, raster, at;
  std::optional<int> component, sequences;
  std::vector<std::string> properties;
};

// Everything one command needs: the loaded config, its semigroup and output plumbing.
class Run {
 public:
  Run(const std::string& command, const Options& opt, std::ostream& out)
      : command_(command), opt_(opt), out_(out), config_(load(opt.config)), g_(config_.semigroup()) {
    if (opt.seed) config_.set_seed(*opt.seed);
    if (opt.workers < 1) throw Error(ErrorCode::ConfigError, "--workers must be at least 1");
    dir_ = opt.out.empty() ? fs::path(config_.output.dir) : fs::path(opt.out);
    stem_ = config_.output.stem.empty() ? (config_.name.empty() ? "run" : config_.name) : config_.output.stem;
  }

  const ExperimentConfig& config() const { return config_; }
  const Semigroup& g() const { return g_; }
  std::ostream& out() { return out_; }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_relative() && !fs::exists(path) ? config_dir_ / path : path;
  }

  const Raster& raster() {
    if (!raster_) {
      std::string csv = opt_.raster;
      if (csv.empty() && config_.recurrence && command_ == "recurrence") csv = config_.recurrence->raster_csv;
      if (!csv.empty()) {
        raster_ = read_csv(resolve(csv).string(), config_.region);
        raster_->config = config_.classifier;
      } else {
        raster_ = scan(g_, config_.region, config_.classifier, opt_.workers);
      }
    }
    return *raster_;
  }

  const ComponentLabeling& labeling() {
    if (!labeling_) labeling_ = label_components(raster());
    return *labeling_;
  }

  void emit(const std::string& suffix, const std::string& bytes) { files_.emplace_back(stem_ + suffix, bytes); }

  // Writes every emitted file plus a manifest of their fingerprints.
  void finish() {
    Json files = Json::array();
    for (const auto& [name, bytes] : files_) files.push_back(Json{{"name", name}, {"bytes", bytes.size()}, {"git_sha1", git_blob_sha1(bytes)}});
    Json manifest{{"command", command_},
                  {"config_name", config_.name},
                  {"config_hash", config_hash(config_)},
                  {"seed", config_.seed},
                  {"generator_fingerprint", generator_fingerprint(g_)},
                  {"generators", g_.size()},
                  {"files", files},
                  {"caveats", config_.caveats()}};
    if (raster_) manifest["raster_config_fingerprint"] = raster_->config_fingerprint;
    files_.emplace_back(stem_ + "." + command_ + ".manifest.json", manifest.dump(2) + "\n");
    std::error_code ec;
    fs::create_directories(dir_, ec);
    for (const auto& [name, bytes] : files_) {
      std::ofstream f(dir_ / name, std::ios::binary);
      if (!f.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
        throw Error(ErrorCode::IoFailure, "cannot write " + (dir_ / name).string());
    }
  }

 private:
  ExperimentConfig load(const std::string& name) {
    if (name.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
    const std::string path = resolve_config_path(name);
    config_dir_ = fs::path(path).parent_path();
    return load_config(path);
  }

  std::string command_;
  const Options& opt_;
  std::ostream& out_;
  fs::path config_dir_;
  ExperimentConfig config_;
  Semigroup g_;
  fs::path dir_;
  std::string stem_;
  std::optional<Raster> raster_;
  std::optional<ComponentLabeling> labeling_;
  std::vector<std::pair<std::string, std::string>> files_;
};

int cmd_scan(Run& run) {
  const Raster& r = run.raster();
  run.emit(".ppm", ppm_bytes(r));
  run.emit(".csv", csv_text(r));
  std::map<std::string, int> counts;
  for (PointClass c : r.cells) ++counts[to_string(c)];
  Json summary{{"cells", r.cells.size()}, {"counts", counts}};
  run.emit(".scan.json", summary.dump(2) + "\n");
  run.finish();
  run.out() << summary.dump() << "\n";
  return kExitOk;
}

int cmd_compare(Run& run) {
  if (!run.config().reference) throw Error(ErrorCode::ConfigError, "compare needs a reference in the config");
  const ComparisonReport rep = compare(run.raster(), run.config().reference->resolve(), run.config().epsilon);
  const Json j = comparison_json(rep);
  run.emit(".comparison.json", j.dump(2) + "\n");
  run.finish();
  run.out() << j.dump() << "\n";
  return kExitOk;
}

int cmd_fixed_points(Run& run, const Options& opt) {
  FixedPointSpec spec = run.config().fixed_points.value_or(FixedPointSpec{});
  if (!opt.word.empty()) {
    spec.word.clear();
    for (std::uint32_t i : Word::parse(opt.word).indices) spec.word.push_back(static_cast<int>(i));
  }
  const Word w = to_word(spec.word);
  for (std::uint32_t i : w.indices)
    if (static_cast<int>(i) >= run.g().size()) throw Error(ErrorCode::IndexOutOfRange, "generator " + std::to_string(i));
  NewtonOptions nopt;
  nopt.n_starts = spec.n_starts;
  nopt.tol = spec.tol;
  nopt.max_iter = spec.max_iter;
  nopt.seed = run.config().seed;
  const auto records = find_fixed_points(MapView(run.g(), w), Polydisc::around_origin(run.g().dim(), spec.radius), nopt);

  Json list = Json::array();
  std::string csv = "index,kind,residual";
  const int k = run.g().dim();
  for (int i = 0; i < k; ++i) csv += ",re_z" + std::to_string(i + 1) + ",im_z" + std::to_string(i + 1);
  for (int i = 0; i < k; ++i) csv += ",abs_lambda" + std::to_string(i + 1);
  csv += "\n";
  for (std::size_t n = 0; n < records.size(); ++n) {
    const auto& f = records[n];
    list.push_back(fixed_point_json(f));
    csv += std::to_string(n) + "," + to_string(f.kind) + "," + decimal(f.residual);
    for (int i = 0; i < k; ++i) csv += "," + decimal(f.location[i].real()) + "," + decimal(f.location[i].imag());
    for (Complex l : f.eigenvalues) csv += "," + decimal(std::abs(l));
    csv += "\n";
  }
  const Json j{{"word", w.to_string()}, {"radius", spec.radius}, {"fixed_points", list}};
  run.emit(".fixed_points.json", j.dump(2) + "\n");
  run.emit(".fixed_points.csv", csv);
  run.finish();
  run.out() << j.dump() << "\n";
  return kExitOk;
}

int cmd_orbit(Run& run, const Options& opt) {
  OrbitSpec spec = run.config().orbit.value_or(OrbitSpec{});
  Word w = to_word(spec.word);
  if (!opt.word.empty()) w = Word::parse(opt.word);
  std::vector<Complex> pt = spec.point;
  if (!opt.point.empty()) pt = parse_point_text(opt.point);
  if (w.empty()) throw Error(ErrorCode::EmptyWord, "orbit needs a word (--word or orbit.word)");
  const Point z = to_point(pt, run.g().dim());
  const OrbitRecord rec = orbit(run.g(), w, z, spec.R);

  std::string csv = "step";
  for (int i = 0; i < z.size(); ++i) csv += ",re_z" + std::to_string(i + 1) + ",im_z" + std::to_string(i + 1);
  csv += ",norm\n";
  for (std::size_t s = 0; s < rec.trajectory.size(); ++s) {
    const Point& p = rec.trajectory[s];
    csv += std::to_string(s);
    for (Eigen::Index i = 0; i < p.size(); ++i) csv += "," + decimal(p[i].real()) + "," + decimal(p[i].imag());
    csv += "," + decimal(p.norm()) + "\n";
  }
  run.emit(".orbit.csv", csv);
  run.finish();
  run.out() << csv;
  if (rec.exit_step) run.out() << "# left the ball of radius R after " << *rec.exit_step << " letters\n";
  return kExitOk;
}

int select_component(Run& run, const Options& opt, const std::vector<Complex>& at, int fallback) {
  const ComponentLabeling& lab = run.labeling();
  if (opt.component) return *opt.component;
  if (!opt.at.empty()) return lab.component_of(to_point(parse_point_text(opt.at), run.g().dim()));
  if (!at.empty()) return lab.component_of(to_point(at, run.g().dim()));
  return fallback;
}

int cmd_recurrence(Run& run, const Options& opt) {
  const RecurrenceSpec spec = run.config().recurrence.value_or(RecurrenceSpec{});
  const int component = select_component(run, opt, spec.at, spec.component);
  RecurrenceOptions ro;
  ro.lengths = spec.lengths;
  ro.n_samples = spec.n_samples;
  ro.min_return_lengths = spec.min_return_lengths;
  ro.R = run.config().classifier.R;
  ro.seed = run.config().seed;
  const auto rep = recurrence_test(run.g(), run.labeling(), component, opt.sequences.value_or(spec.n_sequences), ro);
  const Json j = recurrence_json(rep);
  run.emit(".recurrence.json", j.dump(2) + "\n");
  run.finish();
  run.out() << j.dump() << "\n";
  return kExitOk;
}

const std::vector<std::string> kAllProperties = {"forward-invariance", "backward-invariance", "local-boundedness",
                                                 "boundary-containment", "finite-index",     "commuting",
                                                 "power-tuple",          "volume-divergence"};

PropertyReport not_applicable(const std::string& name, const std::string& why) {
  PropertyReport r;
  r.name = name;
  r.applicable = false;
  r.note = why;
  r.finish();
  return r;
}

bool all_commute(const Semigroup& g, std::uint64_t seed, PropertyReport* rep = nullptr) {
  bool ok = true;
  for (int i = 0; i < g.size(); ++i)
    for (int j = i + 1; j < g.size(); ++j) {
      const bool c = check_commuting(g.generator(i), g.generator(j), 64, 1e-9, seed);
      ok = ok && c;
      if (rep) {
        ++rep->n_checked;
        if (!c) {
          ++rep->n_violations;
          if (rep->witnesses.size() < 8)
            rep->witnesses.push_back({Point(), i, std::nullopt, "generators " + std::to_string(i) + " and " + std::to_string(j) + " do not commute"});
        }
      }
    }
  return ok;
}

PropertyReport run_property(Run& run, const std::string& name, bool from_all) {
  const ExperimentConfig& c = run.config();
  const VerifySpec v = c.verify.value_or(VerifySpec{});
  const Semigroup& g = run.g();
  const std::uint64_t seed = c.seed;
  const int workers = 1;
  SampleOptions so{v.n_samples, c.epsilon, seed};
  auto tuple = [&](const std::vector<int>& given, int fill) {
    return PowerTuple{given.empty() ? std::vector<int>(static_cast<std::size_t>(g.size()), fill) : given};
  };

  if (name == "forward-invariance") return check_forward_invariance(g, run.raster(), v.threshold, so);
  if (name == "backward-invariance") return check_backward_invariance(g, run.raster(), v.threshold, so);
  if (name == "local-boundedness") return check_local_boundedness(g, run.labeling(), c.classifier, v.n_samples, seed);
  if (name == "boundary-containment")
    return check_boundary_containment(g, run.labeling(), v.n_boundary_cells, v.boundary_threshold, seed);
  if (name == "finite-index")
    return check_finite_index_equality(g, tuple(v.power_tuple, 2), c.region, c.classifier, c.epsilon, v.threshold, workers);
  if (name == "commuting") {
    PropertyReport r;
    r.name = "commuting";
    r.threshold = 0.0;
    r.seed = seed;
    all_commute(g, seed, &r);
    r.note = "pairwise commutators at seeded points of the unit polydisc";
    r.finish();
    return r;
  }
  if (name == "power-tuple") {
    if (from_all && !all_commute(g, seed)) return not_applicable(name, "NotCommuting: generators do not commute");
    return check_power_tuple_independence(g, tuple(v.power_tuple, 1), tuple(v.power_tuple2, 2), c.region, c.classifier,
                                          c.epsilon, v.threshold, workers);
  }
  if (name == "volume-divergence") {
    if (from_all) {
      for (const auto& f : g.generators())
        if (!is_volume_preserving(f)) return not_applicable(name, "NotVolumePreserving: some generator is not volume preserving");
    }
    const ComponentLabeling& lab = run.labeling();
    int component = -1;
    if (!v.component_at.empty()) {
      component = lab.component_of(to_point(v.component_at, g.dim()));
    } else {
      std::size_t best = 0;
      for (int i = 0; i < lab.count; ++i)
        if (lab.cells[static_cast<std::size_t>(i)].size() > best) best = lab.cells[static_cast<std::size_t>(i)].size(), component = i;
    }
    if (from_all && component < 0) return not_applicable(name, "EmptyComponent: no Fatou component in the raster");
    DivergenceOptions d;
    d.R = c.classifier.R;
    d.seed = seed;
    std::optional<RecurrenceReport> rec;
    if (component >= 0 && component < lab.count) {
      RecurrenceOptions ro;
      ro.R = c.classifier.R;
      ro.seed = seed;
      rec = recurrence_test(g, lab, component, 12, ro);
    }
    return check_volume_divergence(g, lab, component, rec, d);
  }
  throw Error(ErrorCode::ConfigError, "unknown property " + name);
}

int cmd_verify(Run& run, const Options& opt) {
  std::vector<std::string> names = opt.properties;
  if (names.empty() && run.config().verify) names = run.config().verify->properties;
  if (names.empty()) throw Error(ErrorCode::ConfigError, "no properties selected (--property NAME or verify.properties)");
  const bool all = std::find(names.begin(), names.end(), "all") != names.end();
  if (all) names = kAllProperties;
  for (const auto& n : names)
    if (std::find(kAllProperties.begin(), kAllProperties.end(), n) == kAllProperties.end())
      throw Error(ErrorCode::ConfigError, "unknown property " + n);

  Json reports = Json::array();
  bool ok = true;
  for (const auto& n : names) {
    const PropertyReport r = run_property(run, n, all);
    ok = ok && r.pass;
    reports.push_back(report_json(r));
    char line[200];
    std::snprintf(line, sizeof line, "%-22s %s  checked %d  violations %d  rate %.4f  threshold %.3g%s\n", n.c_str(),
                  !r.applicable ? "SKIP" : (r.pass ? "PASS" : "FAIL"), r.n_checked, r.n_violations, r.violation_rate,
                  r.threshold, r.applicable ? "" : ("  (" + r.note + ")").c_str());
    run.out() << line;
  }
  run.emit(".verify.json", Json{{"reports", reports}, {"pass", ok}}.dump(2) + "\n");
  run.finish();
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fatou and Julia sets of polynomial semigroups on C^k", "semidyn"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "config file or bundled config name")->required();
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--workers", opt.workers, "worker threads for scans")->capture_default_str();
    sub->add_option("--out", opt.out, "output directory (default from the config)");
  };
  auto* scan_cmd = app.add_subcommand("scan", "classify a grid and write PPM, CSV and a manifest");
  auto* compare_cmd = app.add_subcommand("compare", "scan and compare against the reference set");
  auto* fixed_cmd = app.add_subcommand("fixed-points", "fixed points of a word with eigenvalues and type");
  auto* orbit_cmd = app.add_subcommand("orbit", "trajectory of a point under a word");
  auto* verify_cmd = app.add_subcommand("verify", "run property checks");
  auto* rec_cmd = app.add_subcommand("recurrence", "recurrence test on one Fatou component");
  for (auto* s : {scan_cmd, compare_cmd, fixed_cmd, orbit_cmd, verify_cmd, rec_cmd}) common(s);
  compare_cmd->add_option("--raster", opt.raster, "compare this raster CSV instead of scanning");
  fixed_cmd->add_option("--word", opt.word, "comma separated generator indices, outermost first");
  orbit_cmd->add_option("--word", opt.word, "comma separated generator indices, outermost first");
  orbit_cmd->add_option("--point", opt.point, "comma separated complex coordinates");
  verify_cmd->add_option("--property", opt.properties, "property name or 'all' (repeatable)");
  rec_cmd->add_option("--component", opt.component, "component label");
  rec_cmd->add_option("--at", opt.at, "a point inside the component");
  rec_cmd->add_option("--raster", opt.raster, "label this raster CSV instead of scanning");
  rec_cmd->add_option("--sequences", opt.sequences, "number of word sequences");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "semidyn: " << e.what() << "\n";
    return kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    Run run(command, opt, out);
    if (command == "scan") return cmd_scan(run);
    if (command == "compare") return cmd_compare(run);
    if (command == "fixed-points") return cmd_fixed_points(run, opt);
    if (command == "orbit") return cmd_orbit(run, opt);
    if (command == "verify") return cmd_verify(run, opt);
    return cmd_recurrence(run, opt);
  } catch (const Error& e) {
    err << "semidyn " << command << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "semidyn " << command << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace semidyn
