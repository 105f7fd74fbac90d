#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavail/config.hpp"
#include "wavail/ctmc.hpp"
#include "wavail/error.hpp"
#include "wavail/geometry.hpp"
#include "wavail/parallel.hpp"
#include "wavail/radio.hpp"
#include "wavail/spatial.hpp"

namespace wavail {

inline constexpr const char* code_version = "0.1.0";

struct OutputFile {
  std::string name;
  std::string content;
};

struct ScenarioOutput {
  std::vector<OutputFile> files;
  std::vector<std::string> report;  // human-readable summary lines
};

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string checksum_string(std::string_view data) { return fmt::format("fnv1a64:{:016x}", fnv1a64(data)); }

inline std::string fmt12(double v) { return fmt::format("{:.12g}", v); }

// ---------------------------------------------------------------- region

struct RegionPair {
  double theta_db = 0.0;
  double alpha = 0.8;
};

inline std::vector<RegionPair> region_pairs(const ExperimentConfig& c) {
  const std::size_t n = std::max(c.theta_db.size(), c.alpha.size());
  std::vector<RegionPair> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({c.theta_db.size() == 1 ? c.theta_db[0] : c.theta_db[i], c.alpha.size() == 1 ? c.alpha[0] : c.alpha[i]});
  return out;
}

/// Deployment and AP shown by the region scenario: realization 0 of a sweep
/// seeded like the config, unless an explicit deployment file is given.
inline std::pair<Deployment, ApIndex> region_subject(const ExperimentConfig& c) {
  if (!c.deployment_path.empty()) {
    std::ifstream in(c.deployment_path);
    if (!in) throw ConfigError("config.deployment", "cannot open " + c.deployment_path);
    try {
      Deployment dep = read_deployment_csv(in, c.box, c.eta);
      return {dep, selected_ap(c.seed, 0, dep.size())};
    } catch (const InvalidArgument& e) {
      throw ConfigError("config.deployment", e.what());
    }
  }
  Deployment dep = generate_deployment(c.n_aps, c.box, c.eta, realization_seed(c.seed, 0));
  return {dep, selected_ap(c.seed, 0, c.n_aps)};
}

inline std::string region_tag(const RegionPair& p) { return fmt::format("t{:g}_a{:g}", p.theta_db, p.alpha); }

inline ScenarioOutput run_region(const ExperimentConfig& c) {
  const auto [dep, ap] = region_subject(c);
  const auto pairs = region_pairs(c);
  const VoronoiCell cell = voronoi_cell(dep, ap);

  struct PairResult {
    AvailabilityRegion region;
    std::vector<BoundaryPoint> boundary;
  };
  auto results = parallel_map(pairs.size(), [&](std::size_t i) {
    const RadioParams params{.theta_db = pairs[i].theta_db, .alpha = pairs[i].alpha, .eta = dep.eta};
    PairResult r{available_region(ap, dep, params, c.resolution),
                 region_boundary_radial(ap, dep, params, c.n_rays, c.ray_tol)};
    std::vector<Point2D> chain;
    for (const auto& b : r.boundary) chain.push_back(b.point);
    r.region.boundary_polylines.push_back(std::move(chain));
    return r;
  });

  ScenarioOutput out;
  std::ostringstream deployment_csv;
  write_deployment_csv(deployment_csv, dep);
  out.files.push_back({"region_deployment.csv", deployment_csv.str()});

  std::string voronoi = "x,y\n";
  for (const auto& v : cell.vertices) voronoi += fmt12(v.x) + "," + fmt12(v.y) + "\n";
  out.files.push_back({"region_voronoi.csv", voronoi});

  std::string summary = "theta_db,alpha,area_d,area_v,a_s\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& r = results[i];
    const std::string tag = region_tag(pairs[i]);
    std::ostringstream pbm, csv, boundary;
    write_region_pbm(pbm, r.region);
    write_region_csv(csv, r.region);
    write_boundary_csv(boundary, r.boundary);
    out.files.push_back({"region_" + tag + ".pbm", pbm.str()});
    out.files.push_back({"region_" + tag + ".csv", csv.str()});
    out.files.push_back({"region_" + tag + "_boundary.csv", boundary.str()});
    const double a_s = std::min(1.0, r.region.area / cell.area);
    summary += fmt::format("{},{},{},{},{}\n", fmt12(pairs[i].theta_db), fmt12(pairs[i].alpha), fmt12(r.region.area),
                           fmt12(cell.area), fmt12(a_s));
    out.report.push_back(fmt::format("AP {} theta={} dB alpha={}: |D|={:.4f} m^2 |V|={:.4f} m^2 A_s={:.4f}", ap,
                                     pairs[i].theta_db, pairs[i].alpha, r.region.area, cell.area, a_s));
  }
  out.files.push_back({"region_summary.csv", summary});
  return out;
}

// ---------------------------------------------------------- spatial sweeps

inline SweepRequest sweep_request(const ExperimentConfig& c, std::size_t n_aps) {
  return {.n_aps = n_aps, .box = c.box, .eta = c.eta, .thetas_db = c.theta_db, .alphas = c.alpha,
          .n_realizations = c.n_realizations, .resolution = c.resolution, .seed = c.seed, .workers = 0};
}

inline ScenarioOutput run_spatial_sweep(const ExperimentConfig& c) {
  const auto grid = mean_spatial_availability_grid(sweep_request(c, c.n_aps));
  ScenarioOutput out;
  std::string csv = "theta_db,alpha,mean_as,stderr\n";
  for (std::size_t t = 0; t < c.theta_db.size(); ++t)
    for (std::size_t a = 0; a < c.alpha.size(); ++a)
      csv += fmt::format("{},{},{},{}\n", fmt12(c.theta_db[t]), fmt12(c.alpha[a]), fmt12(grid[t][a].mean),
                         fmt12(grid[t][a].std_error));
  out.files.push_back({"spatial-sweep.csv", csv});
  for (std::size_t a = 0; a < c.alpha.size(); ++a) {
    std::string line = fmt::format("alpha={}:", c.alpha[a]);
    for (std::size_t t = 0; t < c.theta_db.size(); ++t) line += fmt::format(" {:.4f}", grid[t][a].mean);
    out.report.push_back(line);
  }
  return out;
}

struct DensificationPoint {
  std::size_t n = 0;
  double alpha = 0.0;
  MeanEstimate estimate;
};

inline std::vector<DensificationPoint> densification_points(const ExperimentConfig& c) {
  std::vector<DensificationPoint> out;
  for (std::size_t n : c.n_list) {
    SweepRequest req = sweep_request(c, n);
    req.thetas_db = {c.theta_db.front()};
    const auto grid = mean_spatial_availability_grid(req);
    for (std::size_t a = 0; a < c.alpha.size(); ++a) out.push_back({n, c.alpha[a], grid[0][a]});
  }
  return out;
}

inline ScenarioOutput run_densification(const ExperimentConfig& c) {
  ScenarioOutput out;
  std::string csv = "n,alpha,mean_as\n";
  for (const auto& p : densification_points(c)) {
    csv += fmt::format("{},{},{}\n", p.n, fmt12(p.alpha), fmt12(p.estimate.mean));
    out.report.push_back(
        fmt::format("N={} alpha={}: {:.4f} +/- {:.4f}", p.n, p.alpha, p.estimate.mean, p.estimate.std_error));
  }
  out.files.push_back({"densification.csv", csv});
  return out;
}

// ---------------------------------------------------------------- temporal

inline ErlangChainSpec chain_spec(const ExperimentConfig& c, double a_s, std::size_t m) {
  return {.partition = partition_channels(a_s, m), .lambda = c.lambda, .mu = c.mu, .initial_state = {},
          .split_arrivals = c.split_arrivals, .available_fraction = a_s};
}

inline TransientResult transient_result(const ExperimentConfig& c) {
  const ErlangChainSpec spec = chain_spec(c, c.a_s, c.m_total);
  const auto times = c.time_grid();
  TransientResult r = temporal_availability(spec, times, c.eps);
  if (r.tail_bound > c.eps)
    throw NumericalError(fmt::format("uniformization tail bound {} exceeds eps {}", r.tail_bound, c.eps));
  return r;
}

inline ScenarioOutput run_transient(const ExperimentConfig& c) {
  const TransientResult r = transient_result(c);
  ScenarioOutput out;
  std::ostringstream csv;
  write_transient_csv(csv, r);
  out.files.push_back({"transient.csv", csv.str()});
  const auto p = partition_channels(c.a_s, c.m_total);
  out.report.push_back(fmt::format("A_s={} M={} -> (M_a, M_n)=({}, {}); N_c<={}, tail<={:.3g}", c.a_s, c.m_total,
                                   p.m_a, p.m_n, r.truncation_level, r.tail_bound));
  return out;
}

/// Steady-state availability of both regions for one (A_s, M, rho).
struct SteadyPoint {
  ChannelPartition partition;
  double at_a = 0.0;
  double at_n = 0.0;
};

inline SteadyPoint steady_point(double a_s, std::size_t m, double rho, bool split_arrivals) {
  const ChannelPartition p = partition_channels(a_s, m);
  const double rho_a = split_arrivals ? rho * a_s : rho;
  const double rho_n = split_arrivals ? rho * (1.0 - a_s) : rho;
  auto avail = [](double r, std::size_t m_u) { return r > 0.0 ? steady_state_availability(r, m_u) : (m_u ? 1.0 : 0.0); };
  return {p, avail(rho_a, p.m_a), avail(rho_n, p.m_n)};
}

inline ScenarioOutput run_steady(const ExperimentConfig& c) {
  ScenarioOutput out;
  std::string csv = "rho,a_s,at_a,at_n\n";
  for (double a_s : c.a_s_list)
    for (double rho : c.rho_list) {
      const SteadyPoint s = steady_point(a_s, c.m_total, rho, c.split_arrivals);
      csv += fmt::format("{},{},{},{}\n", fmt12(rho), fmt12(a_s), fmt12(s.at_a), fmt12(s.at_n));
    }
  out.files.push_back({"steady.csv", csv});
  out.report.push_back(fmt::format("{} rho values x {} A_s values, M={}", c.rho_list.size(), c.a_s_list.size(), c.m_total));
  return out;
}

// ------------------------------------------------------------------- joint

struct AvailabilityBand {
  std::size_t m = 0;
  double target = 0.0;
  BandMethod method = BandMethod::interpolated;
  std::optional<std::pair<double, double>> band;  // empty when no A_s qualifies
};

/// Band from the curves sampled on `grid` and joined linearly: A_t^a rises
/// and A_t^n falls with A_s, so each edge is one linear crossing.
inline AvailabilityBand interpolated_band(std::span<const double> grid, std::span<const double> at_a,
                                          std::span<const double> at_n, std::size_t m, double target) {
  AvailabilityBand b{.m = m, .target = target, .method = BandMethod::interpolated, .band = std::nullopt};
  auto crossing = [&](std::size_t i, std::span<const double> f) {
    return grid[i - 1] + (grid[i] - grid[i - 1]) * (target - f[i - 1]) / (f[i] - f[i - 1]);
  };
  std::optional<double> low, high;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (at_a[i] >= target) {
      low = i == 0 ? grid[0] : crossing(i, at_a);
      break;
    }
  for (std::size_t i = grid.size(); i-- > 0;)
    if (at_n[i] >= target) {
      high = i + 1 == grid.size() ? grid[i] : crossing(i + 1, at_n);
      break;
    }
  if (low && high && *low <= *high) b.band = {*low, *high};
  return b;
}

/// Band on the exact step function: for continuous A_s the channel split is
/// round(A_s M), so feasibility only changes at rounding breakpoints (and,
/// with split arrivals, where the per-region load crosses the target). The
/// edges are bracketed on a fine scan and refined by bisection.
inline AvailabilityBand step_band(std::size_t m, double rho, double target, bool split_arrivals) {
  AvailabilityBand b{.m = m, .target = target, .method = BandMethod::step, .band = std::nullopt};
  auto feasible = [&](double a_s) {
    const SteadyPoint s = steady_point(a_s, m, rho, split_arrivals);
    return s.at_a >= target && s.at_n >= target;
  };
  constexpr std::size_t scan = 20000;
  auto at = [&](std::size_t i) { return static_cast<double>(i) / static_cast<double>(scan); };
  auto refine = [&](double lo, double hi, bool lo_value) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) == lo_value ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  std::optional<double> low, high;
  bool prev = feasible(0.0);
  if (prev) low = 0.0;
  for (std::size_t i = 1; i <= scan; ++i) {
    const bool cur = feasible(at(i));
    if (cur && !prev && !low) low = refine(at(i - 1), at(i), false);
    if (!cur && prev) high = refine(at(i - 1), at(i), true);
    prev = cur;
  }
  if (low && prev) high = 1.0;
  if (low && high) b.band = {*low, *high};
  return b;
}

struct JointResult {
  std::vector<double> grid;
  std::map<std::size_t, std::vector<SteadyPoint>> curves;  // by M
  std::vector<AvailabilityBand> bands;                     // both methods per M
};

inline JointResult joint_result(const ExperimentConfig& c) {
  JointResult r;
  r.grid = c.a_s_list;
  const double rho = c.lambda / c.mu;
  for (std::size_t m : c.m_list) {
    std::vector<SteadyPoint> pts;
    std::vector<double> at_a, at_n;
    for (double a_s : r.grid) {
      pts.push_back(steady_point(a_s, m, rho, c.split_arrivals));
      at_a.push_back(pts.back().at_a);
      at_n.push_back(pts.back().at_n);
    }
    r.curves[m] = pts;
    r.bands.push_back(interpolated_band(r.grid, at_a, at_n, m, c.target));
    r.bands.push_back(step_band(m, rho, c.target, c.split_arrivals));
  }
  return r;
}

inline ScenarioOutput run_joint(const ExperimentConfig& c) {
  const JointResult r = joint_result(c);
  ScenarioOutput out;
  std::string csv = "a_s,m,at_a,at_n\n";
  std::string partition_csv = "a_s,m,m_a,m_n,at_a,at_n\n";
  for (std::size_t m : c.m_list)
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
      const SteadyPoint& s = r.curves.at(m)[i];
      csv += fmt::format("{},{},{},{}\n", fmt12(r.grid[i]), m, fmt12(s.at_a), fmt12(s.at_n));
      partition_csv += fmt::format("{},{},{},{},{},{}\n", fmt12(r.grid[i]), m, s.partition.m_a, s.partition.m_n,
                                   fmt12(s.at_a), fmt12(s.at_n));
    }
  std::string band_csv = "m,target,method,as_low,as_high\n";
  for (const auto& b : r.bands) {
    const char* method = b.method == BandMethod::interpolated ? "interpolated" : "step";
    band_csv += fmt::format("{},{},{},{},{}\n", b.m, fmt12(b.target), method, b.band ? fmt12(b.band->first) : "nan",
                            b.band ? fmt12(b.band->second) : "nan");
    if (b.method == c.band_method)
      out.report.push_back(b.band ? fmt::format("M={} target={}: A_s in [{:.5f}, {:.5f}]", b.m, b.target,
                                                b.band->first, b.band->second)
                                  : fmt::format("M={} target={}: no A_s meets the target", b.m, b.target));
  }
  out.files.push_back({"joint.csv", csv});
  out.files.push_back({"joint_partition.csv", partition_csv});
  out.files.push_back({"joint_band.csv", band_csv});
  return out;
}

inline ScenarioOutput run_scenario(const ExperimentConfig& c) {
  validate_config(c);
  switch (c.scenario) {
    case Scenario::region: return run_region(c);
    case Scenario::spatial_sweep: return run_spatial_sweep(c);
    case Scenario::densification: return run_densification(c);
    case Scenario::transient: return run_transient(c);
    case Scenario::steady: return run_steady(c);
    case Scenario::joint: return run_joint(c);
  }
  throw ConfigError("scenario", "unknown scenario");
}

// ---------------------------------------------------------------- manifest

struct RunManifest {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string code_version;
  std::map<std::string, std::string> checksums;  // file name -> checksum
  double wall_clock_seconds = 0.0;

  nlohmann::json to_json() const {
    return {{"scenario", scenario}, {"config_hash", config_hash}, {"seed", seed},
            {"code_version", code_version}, {"outputs", checksums}, {"wall_clock_seconds", wall_clock_seconds}};
  }
};

inline std::string manifest_name(Scenario s) { return std::string(scenario_name(s)) + ".manifest.json"; }

inline RunManifest make_manifest(const ExperimentConfig& c, const ScenarioOutput& out, double wall_clock_seconds) {
  RunManifest m{.scenario = std::string(scenario_name(c.scenario)),
                .config_hash = checksum_string(canonical_config(c)),
                .seed = c.seed,
                .code_version = code_version,
                .checksums = {},
                .wall_clock_seconds = wall_clock_seconds};
  for (const auto& f : out.files) m.checksums[f.name] = checksum_string(f.content);
  return m;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Checks that the scenario's files in `dir` are exactly the manifest's
/// outputs and that each checksum matches. Returns the problems found.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir, Scenario s, const RunManifest& m) {
  namespace fs = std::filesystem;
  std::vector<std::string> problems;
  const std::string prefix(scenario_name(s));
  std::set<std::string> present;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with(prefix) && name != manifest_name(s)) present.insert(name);
  }
  for (const auto& [name, sum] : m.checksums) {
    if (!present.contains(name)) {
      problems.push_back("missing output " + name);
      continue;
    }
    if (checksum_string(read_file(dir / name)) != sum) problems.push_back("checksum mismatch for " + name);
  }
  for (const auto& name : present)
    if (!m.checksums.contains(name)) problems.push_back("unexpected file " + name);
  return problems;
}

/// Writes every output plus the manifest, then re-verifies the directory.
inline RunManifest write_outputs(const ExperimentConfig& c, const ScenarioOutput& out, double wall_clock_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  for (const auto& f : out.files) {
    std::ofstream os(dir / f.name, std::ios::binary | std::ios::trunc);
    os << f.content;
    if (!os) throw std::runtime_error("failed to write " + (dir / f.name).string());
  }
  const RunManifest m = make_manifest(c, out, wall_clock_seconds);
  {
    std::ofstream os(dir / manifest_name(c.scenario), std::ios::binary | std::ios::trunc);
    os << m.to_json().dump(2) << '\n';
  }
  if (const auto problems = verify_manifest(dir, c.scenario, m); !problems.empty()) {
    std::string msg = "manifest check failed:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw std::runtime_error(msg);
  }
  return m;
}

}  // namespace wavail
