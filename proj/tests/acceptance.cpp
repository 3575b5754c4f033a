// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "semidyn/cli.hpp"
#include "semidyn/components.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/fixedpoints.hpp"
#include "semidyn/properties.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace semidyn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

PolyMap map2(const char* a, const char* b) { return PolyMap({parse_poly(a, 2), parse_poly(b, 2)}); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int workers = 1;

struct Scanned {
  ExperimentConfig config;
  Raster raster;
};

Scanned scan_bundled(const std::string& name) {
  Scanned s{load_config(resolve_config_path(name)), {}};
  s.raster = scan(s.config.semigroup(), s.config.region, s.config.classifier, workers);
  return s;
}

std::optional<Scanned> example1;  // shared by criteria 1, 8 and 10

Outcome reference_agreement(const Scanned& s) {
  const ComparisonReport rep = compare(s.raster, s.config.reference->resolve(), s.config.epsilon);
  const double a = rep.agreement.value_or(0.0);
  return {a >= 0.90, fmt("agreement %.4f over %.0f decided cells (%.0f in band, %.0f undetermined)", a, rep.n_decided,
                         rep.n_band_excluded, rep.n_undetermined)};
}

Outcome criterion1() {
  example1 = scan_bundled("example1_a2");
  return reference_agreement(*example1);
}

Outcome criterion2() { return reference_agreement(scan_bundled("single_squaring")); }

Outcome criterion3() {
  const Scanned s = scan_bundled("chebyshev_N4");
  const Region& r = s.raster.region;
  auto dist = [](double u, double v) { return std::hypot(u - std::clamp(u, -1.0, 1.0), v); };
  int julia = 0, julia_near = 0, far = 0, far_fatou = 0;
  for (int iy = 0; iy < r.ny; ++iy)
    for (int ix = 0; ix < r.nx; ++ix) {
      const double d = dist(r.x_center(ix), r.y_center(iy));
      const PointClass c = s.raster.at(ix, iy);
      if (c == PointClass::JuliaCandidate) {
        ++julia;
        if (d <= 0.1) ++julia_near;
      }
      if (d > 0.15) {
        ++far;
        if (is_fatou(c)) ++far_fatou;
      }
    }
  const double p1 = julia ? static_cast<double>(julia_near) / julia : 0.0;
  const double p2 = far ? static_cast<double>(far_fatou) / far : 0.0;
  return {p1 >= 0.9 && p2 >= 0.9,
          fmt("Julia cells near [-1,1]: %.4f of %.0f; Fatou beyond 0.15: %.4f of %.0f", p1, julia, p2, far) +
              "; truncated family f_0..f_4"};
}

Outcome criterion4() {
  const PolyMap phi1 = map2("z2", "0.25*z1 - z2^2");
  const auto fps = find_fixed_points(MapView(phi1), Polydisc::around_origin(2, 2.0));
  if (fps.size() != 2) return {false, fmt("%.0f fixed points found", static_cast<double>(fps.size()))};
  const FixedPointRecord* origin = nullptr;
  const FixedPointRecord* other = nullptr;
  for (const auto& f : fps) (f.location.norm() < 1e-6 ? origin : other) = &f;
  if (!origin || !other) return {false, "origin or (-0.75,-0.75) missing"};
  const bool origin_ok = origin->kind == FixedPointKind::Attracting && std::abs(std::abs(origin->eigenvalues[0]) - 0.5) <= 1e-6 &&
                         std::abs(std::abs(origin->eigenvalues[1]) - 0.5) <= 1e-6;
  const double s = std::sqrt(1.5 * 1.5 + 1.0);
  const double r1 = (1.5 + s) / 2, r2 = (1.5 - s) / 2;
  const double e1 = std::abs(other->eigenvalues[0] - r1), e2 = std::abs(other->eigenvalues[1] - r2);
  const bool other_ok = other->kind == FixedPointKind::Saddle && (other->location - make_point({-0.75, -0.75})).norm() <= 1e-6 &&
                        e1 <= 1e-6 && e2 <= 1e-6;
  return {origin_ok && other_ok, fmt("origin |lambda| = %.8f, %.8f; saddle eigenvalue errors %.2e, %.2e", std::abs(origin->eigenvalues[0]),
                                     std::abs(origin->eigenvalues[1]), e1, e2)};
}

Outcome criterion5() {
  const PolyMap phi1 = map2("z2", "0.25*z1 - z2^2");
  const PolyMap phi2 = map2("z1*z2", "z2");
  const auto near2 = halton_points(Polydisc{make_point({0.1, 0.5}), 0.05}, 16, 1);
  const auto r2 = limit_rank(MapView(phi2), near2, 40);
  const auto m = estimate_limit_manifold(MapView(phi2), near2, 400);
  double worst = m.cloud.empty() ? 1.0 : 0.0;
  for (const Point& p : m.cloud) worst = std::max(worst, std::abs(p[0]));
  const auto r1 = limit_rank(MapView(phi1), halton_points(Polydisc::around_origin(2, 0.1), 16, 2), 40);

  const Scanned s = scan_bundled("recurrent_origin");
  const auto lab = label_components(s.raster);
  const RecurrenceSpec spec = *s.config.recurrence;
  const int origin = lab.component_of(make_point({spec.at[0], spec.at[1]}));
  RecurrenceOptions ro;
  ro.seed = s.config.seed;
  const auto rec = recurrence_test(s.config.semigroup(), lab, origin, spec.n_sequences, ro);
  const bool ok = r2.rank == 1 && worst <= 1e-6 && r1.rank == 0 && rec.verdict == RecurrenceVerdict::RecurrentLikely;
  return {ok, fmt("rank(phi2) %.0f, max |z| on cloud %.2e, rank(phi1) %.0f", r2.rank, worst, r1.rank) + ", origin component " +
                  to_string(rec.verdict)};
}

Outcome criterion6() {
  const ExperimentConfig c = load_config(resolve_config_path("single_squaring"));
  const auto rep = check_finite_index_equality(c.semigroup(), PowerTuple{{2}}, c.region, c.classifier, c.epsilon, 0.05, workers);
  return {rep.pass, fmt("disagreement %.4f over %.0f cells off band (limit 0.05)", rep.violation_rate, rep.n_checked)};
}

Outcome criterion7() {
  const ExperimentConfig c = load_config(resolve_config_path("commuting_pair"));
  const Semigroup g = c.semigroup();
  const bool commute = check_commuting(g.generator(0), g.generator(1), 64, 1e-9, c.seed);
  const auto rep = check_power_tuple_independence(g, PowerTuple{c.verify->power_tuple}, PowerTuple{c.verify->power_tuple2}, c.region,
                                                  c.classifier, c.epsilon, 0.05, workers);
  return {commute && rep.pass, fmt("commuting %.0f; disagreement %.4f over %.0f cells off band (limit 0.05)", commute,
                                   rep.violation_rate, rep.n_checked)};
}

Outcome criterion8() {
  if (!example1) example1 = scan_bundled("example1_a2");
  const Semigroup g = example1->config.semigroup();
  const SampleOptions so{200, example1->config.epsilon, example1->config.seed};
  const auto fwd = check_forward_invariance(g, example1->raster, 0.05, so);
  const auto bwd = check_backward_invariance(g, example1->raster, 0.05, so);
  return {fwd.pass && bwd.pass && fwd.n_checked > 0 && bwd.n_checked > 0,
          fmt("forward %.4f of %.0f, backward %.4f of %.0f (limit 0.05)", fwd.violation_rate, fwd.n_checked, bwd.violation_rate,
              bwd.n_checked)};
}

Outcome criterion9() {
  const Semigroup g({map2("z1^2", "z2^2"), map2("0.5*z1^2", "z2^2")});
  const ReferenceSet ref = example1_reference(2.0);
  Region plane;
  plane.x_high = 3, plane.y_high = 2;
  ClassifierConfig random_cfg;
  random_cfg.resolution = 0.0;
  random_cfg.seed = 9;
  ClassifierConfig exhaustive_cfg = random_cfg;
  exhaustive_cfg.sampler = SamplerMode::Exhaustive;
  exhaustive_cfg.L = 8;
  KeyedStream rng(0x9e37);
  int n = 0, agree = 0;
  while (n < 100) {
    const double u = 3.0 * rng.uniform(), v = 2.0 * rng.uniform();
    if (near_boundary(ref, plane, u, v, 0.05)) continue;
    const Point z = make_point({std::polar(u, 6.283185307179586 * rng.uniform()), std::polar(v, 6.283185307179586 * rng.uniform())});
    const PointClass a = classify_point(g, z, exhaustive_cfg).verdict;
    const PointClass b = classify_point(g, z, random_cfg).verdict;
    ++n;
    if (a == b) ++agree;
  }
  return {agree >= 95, fmt("%.0f of %.0f points agree", agree, n)};
}

Outcome criterion10() {
  if (!example1) example1 = scan_bundled("example1_a2");
  const fs::path dir = fs::temp_directory_path() / "semidyn_acceptance";
  fs::remove_all(dir);
  std::ostringstream out, err;
  std::vector<std::string> outputs;
  for (const char* w : {"4", "2"}) {
    const fs::path d = dir / w;
    if (run_cli({"scan", "--config", "example1_a2", "--workers", w, "--out", d.string()}, out, err) != 0) return {false, err.str()};
    outputs.push_back(slurp(d / "example1_a2.ppm") + slurp(d / "example1_a2.csv"));
  }
  const std::string library = ppm_bytes(example1->raster) + csv_text(example1->raster);
  const bool same = outputs[0] == outputs[1] && outputs[0] == library;
  return {same, std::string("PPM and CSV from 1, 2 and 4 workers ") + (same ? "byte-identical" : "differ") +
                    ", ppm sha1 " + git_blob_sha1(ppm_bytes(example1->raster)).substr(0, 12)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) workers = std::max(1, std::atoi(argv[1]));
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Example 1 raster vs closed form", criterion1},
      {"single squaring raster vs closed form", criterion2},
      {"Chebyshev slice z2 = 0.5", criterion3},
      {"fixed points of (w, 0.25z - w^2)", criterion4},
      {"limit ranks, limit manifold, recurrence", criterion5},
      {"finite-index equality", criterion6},
      {"power-tuple independence", criterion7},
      {"forward and backward invariance", criterion8},
      {"exhaustive vs random words", criterion9},
      {"scan determinism across workers", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %-40s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
