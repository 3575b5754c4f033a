#include "semidyn/gridscan.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace semidyn {

namespace {

int region_dim(const Region& r) { return r.mode == RegionMode::ModulusPlane ? 2 : static_cast<int>(r.fixture.size()); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string describe(const ClassifierConfig& c, const Region& r) {
  std::string s;
  for (double v : {c.R, c.delta, c.kappa, c.resolution}) s += fmt("%.17g;", v);
  for (long long v : {static_cast<long long>(c.L), static_cast<long long>(c.N), static_cast<long long>(c.n_companions),
                      static_cast<long long>(c.probe), static_cast<long long>(c.steer_beam),
                      static_cast<long long>(c.steer_depth), static_cast<long long>(c.sampler)})
    s += std::to_string(v) + ";";
  s += std::to_string(c.seed) + "|";
  s += std::to_string(static_cast<int>(r.mode)) + ";";
  for (double v : {r.x_low, r.x_high, r.y_low, r.y_high, r.phase_offset}) s += fmt("%.17g;", v);
  s += std::to_string(r.nx) + ";" + std::to_string(r.ny) + ";" + std::to_string(r.phase_samples) + ";" +
       std::to_string(r.free_coordinate) + ";";
  for (Eigen::Index i = 0; i < r.fixture.size(); ++i)
    s += fmt("%.17g,", r.fixture[i].real()) + fmt("%.17g;", r.fixture[i].imag());
  return s;
}

}  // namespace

void Region::validate(int k) const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, "region: " + m); };
  if (!(x_low < x_high) || !(y_low < y_high)) fail("bounds need low < high");
  if (nx < 2 || ny < 2) fail("resolution needs nx, ny >= 2");
  if (phase_samples < 1) fail("phase_samples must be at least 1");
  if (mode == RegionMode::ModulusPlane) {
    if (k != 2) throw Error(ErrorCode::UnsupportedDimension, "modulus plane regions need k = 2");
    if (x_low < 0.0 || y_low < 0.0) fail("moduli must be nonnegative");
  } else {
    if (fixture.size() != k) throw Error(ErrorCode::DimensionMismatch, "slice fixture needs one entry per coordinate");
    if (free_coordinate < 0 || free_coordinate >= k) fail("free coordinate out of range");
  }
}

Point Region::embed(double u, double v, int sample) const {
  if (mode == RegionMode::ModulusPlane) {
    const double step = 2.0 * std::numbers::pi / phase_samples;
    return make_point({std::polar(u, phase_offset + step * sample), std::polar(v, phase_offset + step * (sample + 0.5))});
  }
  Point z = fixture;
  z[free_coordinate] = Complex(u, v);
  return z;
}

std::vector<Point> Region::cell_points(int ix, int iy) const {
  std::vector<Point> pts;
  const int n = mode == RegionMode::ModulusPlane ? phase_samples : 1;
  for (int s = 0; s < n; ++s) pts.push_back(embed(x_center(ix), y_center(iy), s));
  return pts;
}

std::optional<std::pair<double, double>> Region::project(const Point& z, double slice_tol) const {
  if (mode == RegionMode::ModulusPlane) {
    if (z.size() != 2) return std::nullopt;
    return std::make_pair(std::abs(z[0]), std::abs(z[1]));
  }
  if (z.size() != fixture.size()) return std::nullopt;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (i != free_coordinate && std::abs(z[i] - fixture[i]) > slice_tol * (1.0 + std::abs(fixture[i]))) return std::nullopt;
  return std::make_pair(z[free_coordinate].real(), z[free_coordinate].imag());
}

std::optional<std::pair<int, int>> Region::locate(const Point& z, double slice_tol) const {
  const auto uv = project(z, slice_tol);
  if (!uv || !std::isfinite(uv->first) || !std::isfinite(uv->second)) return std::nullopt;
  const double fx = (uv->first - x_low) / dx(), fy = (uv->second - y_low) / dy();
  if (fx < 0.0 || fy < 0.0 || fx >= nx || fy >= ny) return std::nullopt;
  return std::make_pair(static_cast<int>(fx), static_cast<int>(fy));
}

bool operator==(const Region& a, const Region& b) {
  if (a.mode != b.mode || a.nx != b.nx || a.ny != b.ny || a.x_low != b.x_low || a.x_high != b.x_high ||
      a.y_low != b.y_low || a.y_high != b.y_high)
    return false;
  if (a.mode == RegionMode::ModulusPlane) return a.phase_samples == b.phase_samples && a.phase_offset == b.phase_offset;
  return a.free_coordinate == b.free_coordinate && a.fixture.size() == b.fixture.size() && a.fixture == b.fixture;
}

PointClass aggregate(const std::vector<PointClass>& samples) {
  if (samples.empty()) return PointClass::Undetermined;
  if (std::find(samples.begin(), samples.end(), PointClass::JuliaCandidate) != samples.end()) return PointClass::JuliaCandidate;
  for (auto c : samples)
    if (c != samples.front()) return PointClass::Undetermined;
  return samples.front();
}

std::string generator_fingerprint(const Semigroup& g) {
  std::string s;
  for (const auto& f : g.generators()) {
    for (const auto& c : f.components()) s += c.to_string() + ";";
    s += "|";
  }
  return hex64(fnv1a(s));
}

Raster scan(const Semigroup& g, const Region& region, const ClassifierConfig& cfg, int workers) {
  region.validate(g.dim());
  if (region.cell_count() > 10'000'000) throw Error(ErrorCode::BudgetExceeded, "scan exceeds 10^7 cells");
  Raster out;
  out.region = region;
  out.config = cfg;
  if (out.config.resolution < 0.0) out.config.resolution = region.cell_diagonal();
  const Classifier classifier(g, out.config);
  out.cells.assign(region.cell_count(), PointClass::Undetermined);
  out.scores.assign(region.cell_count(), 0.0);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  constexpr std::size_t kChunk = 16;
  auto work = [&]() {
    try {
      std::vector<PointClass> verdicts;
      for (;;) {
        const std::size_t start = next.fetch_add(kChunk);
        if (start >= out.cells.size()) return;
        const std::size_t stop = std::min(start + kChunk, out.cells.size());
        for (std::size_t idx = start; idx < stop; ++idx) {
          const int ix = static_cast<int>(idx % static_cast<std::size_t>(region.nx));
          const int iy = static_cast<int>(idx / static_cast<std::size_t>(region.nx));
          verdicts.clear();
          double score = 0.0;
          for (const Point& z : region.cell_points(ix, iy)) {
            const Classification c = classifier.classify(z);
            verdicts.push_back(c.verdict);
            score = std::max(score, c.score);
            if (c.verdict == PointClass::JuliaCandidate) break;
          }
          out.cells[idx] = aggregate(verdicts);
          out.scores[idx] = score;
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_lock);
      if (!failure) failure = std::current_exception();
      next.store(out.cells.size());
    }
  };
  const int n_threads = std::max(1, workers);
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  out.generator_fingerprint = generator_fingerprint(g);
  out.config_fingerprint = hex64(fnv1a(describe(out.config, region)));
  return out;
}

// ---------------------------------------------------------------------------
// reference sets

ReferenceSet example1_reference(double a) {
  return ReferenceSet{{{Factor::disk(1.0), Factor::circle(1.0)}, {Factor::interval(1.0, std::abs(a)), Factor::disk(1.0)}}};
}

ReferenceSet single_squaring_reference() {
  return ReferenceSet{{{Factor::circle(1.0), Factor::disk(1.0)}, {Factor::disk(1.0), Factor::circle(1.0)}}};
}

ReferenceSet chebyshev_reference() { return ReferenceSet{{{Factor::segment(-1.0, 1.0), Factor::disk(1.0)}}}; }

namespace {

constexpr double kMemberTol = 1e-12;

bool factor_contains(const Factor& f, Complex v) {
  const double m = std::abs(v);
  const double tol = kMemberTol * (1.0 + m);
  switch (f.kind) {
    case FactorKind::ModulusInterval: return m >= f.a - tol && m <= f.b + tol;
    case FactorKind::ModulusCircle: return std::abs(m - f.a) <= tol;
    case FactorKind::RealSegment: return std::abs(v.imag()) <= tol && v.real() >= f.a - tol && v.real() <= f.b + tol;
    case FactorKind::Disk: return m <= f.a + tol;
  }
  return false;
}

// distance from v to the factor; in the modulus plane v is a real modulus
double factor_distance(const Factor& f, Complex v) {
  const double m = std::abs(v);
  switch (f.kind) {
    case FactorKind::ModulusInterval: return std::max({0.0, f.a - m, m - f.b});
    case FactorKind::ModulusCircle: return std::abs(m - f.a);
    case FactorKind::Disk: return std::max(0.0, m - f.a);
    case FactorKind::RealSegment: {
      const double dx = std::max({f.a - v.real(), 0.0, v.real() - f.b});
      return std::hypot(dx, v.imag());
    }
  }
  return 0.0;
}

// distance from v to the complement of the factor (0 unless v is interior)
double factor_depth(const Factor& f, Complex v) {
  const double m = std::abs(v);
  switch (f.kind) {
    case FactorKind::ModulusInterval:
      if (m < f.a || m > f.b) return 0.0;
      return std::min(f.a > 0.0 ? m - f.a : std::numeric_limits<double>::infinity(), f.b - m);
    case FactorKind::Disk: return std::max(0.0, f.a - m);
    default: return 0.0;
  }
}

void check_geometry(const ReferenceSet& ref, const Region& region) {
  if (ref.dim() != region_dim(region)) throw Error(ErrorCode::GeometryMismatch, "reference set dimension differs from region");
  for (const auto& term : ref.terms) {
    if (static_cast<int>(term.size()) != ref.dim()) throw Error(ErrorCode::GeometryMismatch, "reference terms differ in dimension");
    if (region.mode == RegionMode::ModulusPlane)
      for (const auto& f : term)
        if (f.kind == FactorKind::RealSegment)
          throw Error(ErrorCode::GeometryMismatch, "real segments cannot be judged from moduli");
  }
}

struct TermProbe {
  double distance;  // infinity when the term misses the slice
  double depth;
};

TermProbe probe_term(const std::vector<Factor>& term, const Region& region, double u, double v) {
  if (region.mode == RegionMode::ModulusPlane) {
    const double d0 = factor_distance(term[0], Complex(u)), d1 = factor_distance(term[1], Complex(v));
    return {std::hypot(d0, d1), std::min(factor_depth(term[0], Complex(u)), factor_depth(term[1], Complex(v)))};
  }
  for (int i = 0; i < static_cast<int>(term.size()); ++i)
    if (i != region.free_coordinate && !factor_contains(term[static_cast<std::size_t>(i)], region.fixture[i]))
      return {std::numeric_limits<double>::infinity(), 0.0};
  const Factor& f = term[static_cast<std::size_t>(region.free_coordinate)];
  return {factor_distance(f, Complex(u, v)), factor_depth(f, Complex(u, v))};
}

bool inside_set(const ReferenceSet& ref, const Region& region, double u, double v) {
  for (const auto& term : ref.terms)
    if (probe_term(term, region, u, v).distance <= kMemberTol * (1.0 + std::hypot(u, v))) return true;
  return false;
}

}  // namespace

bool membership(const ReferenceSet& ref, const Point& z) {
  if (ref.dim() != z.size()) throw Error(ErrorCode::DimensionMismatch, "reference set dimension differs from point");
  for (const auto& term : ref.terms) {
    bool all = true;
    for (Eigen::Index i = 0; i < z.size() && all; ++i) all = factor_contains(term[static_cast<std::size_t>(i)], z[i]);
    if (all) return true;
  }
  return false;
}

bool membership_moduli(const ReferenceSet& ref, const std::vector<double>& moduli) {
  if (ref.dim() != static_cast<int>(moduli.size())) throw Error(ErrorCode::DimensionMismatch, "reference set dimension differs from point");
  for (const auto& term : ref.terms) {
    bool all = true;
    for (std::size_t i = 0; i < moduli.size() && all; ++i) {
      if (term[i].kind == FactorKind::RealSegment) throw Error(ErrorCode::GeometryMismatch, "real segments cannot be judged from moduli");
      all = factor_contains(term[i], Complex(moduli[i]));
    }
    if (all) return true;
  }
  return false;
}

double distance_to_set(const ReferenceSet& ref, const Region& region, double u, double v) {
  check_geometry(ref, region);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& term : ref.terms) best = std::min(best, probe_term(term, region, u, v).distance);
  return best;
}

bool near_boundary(const ReferenceSet& ref, const Region& region, double u, double v, double eps) {
  check_geometry(ref, region);
  if (!inside_set(ref, region, u, v)) return distance_to_set(ref, region, u, v) < eps;
  for (const auto& term : ref.terms)
    if (probe_term(term, region, u, v).depth >= eps) return false;
  // inside, but no single term holds the whole ball: look for an escape route
  constexpr int kRing = 48;
  for (double radius : {eps, 0.5 * eps, 0.25 * eps}) {
    for (int j = 0; j < kRing; ++j) {
      const double t = 2.0 * std::numbers::pi * j / kRing;
      if (!inside_set(ref, region, u + radius * std::cos(t), v + radius * std::sin(t))) return true;
    }
  }
  return false;
}

ComparisonReport compare(const Raster& raster, const ReferenceSet& ref, double eps) {
  check_geometry(ref, raster.region);
  const Region& r = raster.region;
  ComparisonReport rep;
  rep.epsilon = eps;
  rep.n_cells = static_cast<int>(raster.cells.size());
  for (int iy = 0; iy < r.ny; ++iy) {
    for (int ix = 0; ix < r.nx; ++ix) {
      const double u = r.x_center(ix), v = r.y_center(iy);
      if (near_boundary(ref, r, u, v, eps)) {
        ++rep.n_band_excluded;
        continue;
      }
      const PointClass c = raster.at(ix, iy);
      if (c == PointClass::Undetermined) {
        ++rep.n_undetermined;
        continue;
      }
      ++rep.n_decided;
      const bool member = inside_set(ref, r, u, v);
      const bool julia = c == PointClass::JuliaCandidate;
      if (julia && member) ++rep.julia_member;
      else if (julia) ++rep.julia_nonmember;
      else if (member) ++rep.fatou_member;
      else ++rep.fatou_nonmember;
    }
  }
  if (rep.n_decided > 0) rep.agreement = static_cast<double>(rep.julia_member + rep.fatou_nonmember) / rep.n_decided;
  return rep;
}

std::vector<bool> interface_band(const Raster& r, double eps) {
  const int nx = r.region.nx, ny = r.region.ny;
  const int rx = static_cast<int>(std::floor(eps / r.region.dx()));
  const int ry = static_cast<int>(std::floor(eps / r.region.dy()));
  // prefix sums of Julia and Fatou indicators
  std::vector<int> pj(static_cast<std::size_t>((nx + 1) * (ny + 1)), 0), pf(pj.size(), 0);
  auto at = [nx](int x, int y) { return static_cast<std::size_t>(y * (nx + 1) + x); };
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const PointClass c = r.at(x, y);
      pj[at(x + 1, y + 1)] = pj[at(x, y + 1)] + pj[at(x + 1, y)] - pj[at(x, y)] + (c == PointClass::JuliaCandidate);
      pf[at(x + 1, y + 1)] = pf[at(x, y + 1)] + pf[at(x + 1, y)] - pf[at(x, y)] + is_fatou(c);
    }
  auto window = [&](const std::vector<int>& p, int x0, int y0, int x1, int y1) {
    return p[at(x1, y1)] - p[at(x0, y1)] - p[at(x1, y0)] + p[at(x0, y0)];
  };
  std::vector<bool> band(r.cells.size(), false);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const int x0 = std::max(0, x - rx), x1 = std::min(nx, x + rx + 1);
      const int y0 = std::max(0, y - ry), y1 = std::min(ny, y + ry + 1);
      band[static_cast<std::size_t>(y * nx + x)] = window(pj, x0, y0, x1, y1) > 0 && window(pf, x0, y0, x1, y1) > 0;
    }
  return band;
}

RasterComparison compare_rasters(const Raster& a, const Raster& b, double eps) {
  if (!(a.region == b.region)) throw Error(ErrorCode::GeometryMismatch, "rasters cover different regions");
  RasterComparison rep;
  rep.epsilon = eps;
  rep.n_cells = static_cast<int>(a.cells.size());
  const auto band_a = interface_band(a, eps), band_b = interface_band(b, eps);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (band_a[i] || band_b[i]) {
      ++rep.n_band_excluded;
      continue;
    }
    if (a.cells[i] == PointClass::Undetermined || b.cells[i] == PointClass::Undetermined) {
      ++rep.n_undecided;
      continue;
    }
    ++rep.n_compared;
    if ((a.cells[i] == PointClass::JuliaCandidate) != (b.cells[i] == PointClass::JuliaCandidate)) ++rep.n_disagree;
  }
  if (rep.n_compared > 0) rep.disagreement = static_cast<double>(rep.n_disagree) / rep.n_compared;
  return rep;
}

// ---------------------------------------------------------------------------
// output

Rgb palette(PointClass c) {
  switch (c) {
    case PointClass::FatouBounded: return {0, 160, 0};
    case PointClass::FatouEscaping: return {0, 64, 224};
    case PointClass::FatouMixed: return {0, 160, 160};
    case PointClass::JuliaCandidate: return {0, 0, 0};
    case PointClass::Undetermined: return {128, 128, 128};
  }
  return {255, 0, 255};
}

std::string ppm_bytes(const Raster& raster) {
  const Region& r = raster.region;
  std::string out = "P6\n" + std::to_string(r.nx) + " " + std::to_string(r.ny) + "\n255\n";
  out.reserve(out.size() + raster.cells.size() * 3);
  // top row of the image is the largest y
  for (int iy = r.ny - 1; iy >= 0; --iy)
    for (int ix = 0; ix < r.nx; ++ix) {
      const Rgb p = palette(raster.at(ix, iy));
      out.push_back(static_cast<char>(p.r));
      out.push_back(static_cast<char>(p.g));
      out.push_back(static_cast<char>(p.b));
    }
  return out;
}

std::string csv_text(const Raster& raster) {
  const Region& r = raster.region;
  std::string out = "ix,iy,x_center,y_center,class,score\n";
  char buf[160];
  for (int iy = 0; iy < r.ny; ++iy)
    for (int ix = 0; ix < r.nx; ++ix) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%s,%.6f\n", ix, iy, r.x_center(ix), r.y_center(iy),
                    to_string(raster.at(ix, iy)), raster.scores[static_cast<std::size_t>(iy * r.nx + ix)]);
      out += buf;
    }
  return out;
}

namespace {

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
}

}  // namespace

void render_ppm(const Raster& raster, const std::string& path) { write_file(path, ppm_bytes(raster)); }

void write_csv(const Raster& raster, const std::string& path) { write_file(path, csv_text(raster)); }

Raster read_csv(const std::string& path, const Region& region) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  Raster out;
  out.region = region;
  out.cells.assign(region.cell_count(), PointClass::Undetermined);
  out.scores.assign(region.cell_count(), 0.0);
  std::vector<bool> seen(region.cell_count(), false);
  std::string line;
  std::getline(f, line);
  if (line != "ix,iy,x_center,y_center,class,score") throw Error(ErrorCode::IoFailure, path + ": unexpected CSV header");
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field[6];
    for (auto& s : field) std::getline(ss, s, ',');
    int ix = 0, iy = 0;
    try {
      ix = std::stoi(field[0]);
      iy = std::stoi(field[1]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::IoFailure, path + ": malformed row '" + line + "'");
    }
    const auto cls = point_class_from_string(field[4]);
    if (!cls || ix < 0 || iy < 0 || ix >= region.nx || iy >= region.ny)
      throw Error(ErrorCode::GeometryMismatch, path + ": row does not fit the region: '" + line + "'");
    const std::size_t idx = static_cast<std::size_t>(iy) * region.nx + ix;
    out.cells[idx] = *cls;
    out.scores[idx] = std::strtod(field[5].c_str(), nullptr);
    seen[idx] = true;
    ++rows;
  }
  if (rows != region.cell_count() || std::find(seen.begin(), seen.end(), false) != seen.end())
    throw Error(ErrorCode::GeometryMismatch, path + ": cell count differs from the region");
  return out;
}

}  // namespace semidyn
