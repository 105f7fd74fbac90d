#pragma once

#include <fmt/format.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavail/error.hpp"
#include "wavail/geometry.hpp"

namespace wavail {

enum class Scenario { region, spatial_sweep, densification, transient, steady, joint };

inline std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::region: return "region";
    case Scenario::spatial_sweep: return "spatial-sweep";
    case Scenario::densification: return "densification";
    case Scenario::transient: return "transient";
    case Scenario::steady: return "steady";
    case Scenario::joint: return "joint";
  }
  return "unknown";
}

inline std::optional<Scenario> parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::region, Scenario::spatial_sweep, Scenario::densification, Scenario::transient,
                     Scenario::steady, Scenario::joint})
    if (scenario_name(s) == name) return s;
  return std::nullopt;
}

enum class BandMethod { interpolated, step };

/// Every knob of every scenario. Defaults reproduce the reference setup:
/// 10 m x 10 m box, eta = 4, M = 10, lambda = 8, mu = 1, 10000 realizations.
struct ExperimentConfig {
  Scenario scenario = Scenario::joint;
  BoundingBox box{};
  std::size_t n_aps = 10;
  std::vector<std::size_t> n_list{20, 40, 60, 80, 100};
  double eta = 4.0;
  std::vector<double> theta_db;
  std::vector<double> alpha;
  std::size_t m_total = 10;
  std::vector<std::size_t> m_list{10, 20, 30};
  double a_s = 0.7;
  std::vector<double> a_s_list;
  double lambda = 8.0;
  double mu = 1.0;
  std::vector<double> rho_list;
  std::size_t n_realizations = 10000;
  double resolution = 0.05;
  std::uint64_t seed = 1;
  double t_max = 5.0;
  std::size_t t_points = 200;
  std::size_t n_rays = 360;
  double ray_tol = 1e-4;
  double eps = 1e-10;
  double target = 0.8;
  BandMethod band_method = BandMethod::interpolated;
  bool split_arrivals = false;
  std::string deployment_path;
  std::string output_dir = "out";

  std::vector<double> time_grid() const {
    std::vector<double> t(t_points);
    for (std::size_t i = 0; i < t_points; ++i)
      t[i] = t_points == 1 ? 0.0 : t_max * static_cast<double>(i) / static_cast<double>(t_points - 1);
    return t;
  }
};

/// Scenario-specific defaults for the list-valued parameters.
inline ExperimentConfig default_config(Scenario scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  switch (scenario) {
    case Scenario::region:
      c.theta_db = {0, 0, 0, -10, 10};
      c.alpha = {0.7, 0.8, 0.9, 0.8, 0.8};
      break;
    case Scenario::spatial_sweep:
      for (int t = -5; t <= 5; ++t) c.theta_db.push_back(t);
      c.alpha = {0.5, 0.7, 0.8, 0.9};
      break;
    case Scenario::densification:
      c.theta_db = {0};
      c.alpha = {0.7, 0.9};
      break;
    default:
      c.theta_db = {0};
      c.alpha = {0.8};
      break;
  }
  if (scenario == Scenario::joint)
    for (int i = 0; i <= 10; ++i) c.a_s_list.push_back(i / 10.0);
  else
    for (int i = 1; i <= 10; ++i) c.a_s_list.push_back(i / 10.0);
  for (int k = -8; k <= 24; ++k) c.rho_list.push_back(std::exp2(k / 4.0));
  return c;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline double parse_double(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(field, fmt::format("expected a number, got '{}'", v));
  }
}

inline std::uint64_t parse_unsigned(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::logic_error&) {
    throw ConfigError(field, fmt::format("expected a non-negative integer, got '{}'", v));
  }
}

inline bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(field, fmt::format("expected a boolean, got '{}'", v));
}

inline std::vector<double> parse_double_list(const std::string& field, const std::string& v) {
  std::vector<double> out;
  const auto items = split_list(v);
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back(parse_double(fmt::format("{}[{}]", field, i), items[i]));
  if (out.empty()) throw ConfigError(field, "list must not be empty");
  return out;
}

inline std::vector<std::size_t> parse_count_list(const std::string& field, const std::string& v) {
  std::vector<std::size_t> out;
  const auto items = split_list(v);
  for (std::size_t i = 0; i < items.size(); ++i)
    out.push_back(static_cast<std::size_t>(parse_unsigned(fmt::format("{}[{}]", field, i), items[i])));
  if (out.empty()) throw ConfigError(field, "list must not be empty");
  return out;
}

}  // namespace detail

/// Applies one `key = value` setting; unknown keys are rejected.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  const std::string field = "config." + key;
  if (key == "box_width") c.box.width = parse_double(field, value);
  else if (key == "box_height") c.box.height = parse_double(field, value);
  else if (key == "n_aps") c.n_aps = parse_unsigned(field, value);
  else if (key == "n_list") c.n_list = parse_count_list(field, value);
  else if (key == "eta") c.eta = parse_double(field, value);
  else if (key == "theta_db") c.theta_db = parse_double_list(field, value);
  else if (key == "alpha") c.alpha = parse_double_list(field, value);
  else if (key == "m_total") c.m_total = parse_unsigned(field, value);
  else if (key == "m_list") c.m_list = parse_count_list(field, value);
  else if (key == "a_s") c.a_s = parse_double(field, value);
  else if (key == "a_s_list") c.a_s_list = parse_double_list(field, value);
  else if (key == "lambda") c.lambda = parse_double(field, value);
  else if (key == "mu") c.mu = parse_double(field, value);
  else if (key == "rho_list") c.rho_list = parse_double_list(field, value);
  else if (key == "n_realizations") c.n_realizations = parse_unsigned(field, value);
  else if (key == "resolution") c.resolution = parse_double(field, value);
  else if (key == "seed") c.seed = parse_unsigned(field, value);
  else if (key == "t_max") c.t_max = parse_double(field, value);
  else if (key == "t_points") c.t_points = parse_unsigned(field, value);
  else if (key == "n_rays") c.n_rays = parse_unsigned(field, value);
  else if (key == "ray_tol") c.ray_tol = parse_double(field, value);
  else if (key == "eps") c.eps = parse_double(field, value);
  else if (key == "target") c.target = parse_double(field, value);
  else if (key == "band_method") {
    if (value == "interpolated") c.band_method = BandMethod::interpolated;
    else if (value == "step") c.band_method = BandMethod::step;
    else throw ConfigError(field, "expected 'interpolated' or 'step'");
  } else if (key == "split_arrivals") c.split_arrivals = parse_bool(field, value);
  else if (key == "deployment") c.deployment_path = value;
  else if (key == "output_dir") c.output_dir = value;
  else throw ConfigError(field, "unknown key");
}

/// Parses flat `key = value` text; `#` starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& is,
                                                                         const std::string& origin = "config") {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}", origin, lineno), "expected 'key = value'");
    out.emplace_back(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  return out;
}

/// Splits a `key=value` override.
inline std::pair<std::string, std::string> parse_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override", fmt::format("expected key=value, got '{}'", kv));
  return {detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1))};
}

/// Checks every module precondition the selected scenario depends on.
inline void validate_config(const ExperimentConfig& c) {
  auto require = [](bool ok, const char* field, const std::string& what) {
    if (!ok) throw ConfigError(std::string("config.") + field, what);
  };
  const bool spatial = c.scenario == Scenario::region || c.scenario == Scenario::spatial_sweep ||
                       c.scenario == Scenario::densification;
  if (spatial) {
    require(c.box.width > 0 && c.box.height > 0, "box_width", "box dimensions must be positive");
    require(c.eta > 2.0, "eta", "pathloss exponent must exceed 2");
    require(c.resolution > 0 && c.resolution <= std::min(c.box.width, c.box.height) / 4.0, "resolution",
            "must be positive and at most a quarter of the smaller box side");
    require(!c.theta_db.empty(), "theta_db", "must not be empty");
    require(!c.alpha.empty(), "alpha", "must not be empty");
    for (std::size_t i = 0; i < c.alpha.size(); ++i)
      require(c.alpha[i] > 0.0 && c.alpha[i] < 1.0, "alpha", fmt::format("entry {} must lie in (0,1)", i));
    require(c.n_realizations >= 1 || c.scenario == Scenario::region, "n_realizations", "must be at least 1");
    require(c.n_aps >= 1, "n_aps", "must be at least 1");
  }
  if (c.scenario == Scenario::region) {
    require(c.theta_db.size() == c.alpha.size() || c.theta_db.size() == 1 || c.alpha.size() == 1, "theta_db",
            "theta_db and alpha must have equal length or one of them a single value");
    require(c.n_rays >= 8, "n_rays", "must be at least 8");
    require(c.ray_tol > 0.0, "ray_tol", "must be positive");
  }
  if (c.scenario == Scenario::densification)
    for (std::size_t n : c.n_list) require(n >= 1, "n_list", "entries must be at least 1");
  if (c.scenario == Scenario::transient || c.scenario == Scenario::steady || c.scenario == Scenario::joint) {
    require(c.lambda > 0.0, "lambda", "must be positive");
    require(c.mu > 0.0, "mu", "must be positive");
    require(c.eps > 0.0, "eps", "must be positive");
    require(c.m_total >= 1, "m_total", "must be at least 1");
    for (double a : c.a_s_list) require(a >= 0.0 && a <= 1.0, "a_s_list", "entries must lie in [0,1]");
  }
  if (c.scenario == Scenario::transient) {
    require(c.a_s >= 0.0 && c.a_s <= 1.0, "a_s", "must lie in [0,1]");
    require(c.t_points >= 1, "t_points", "must be at least 1");
    require(c.t_max >= 0.0, "t_max", "must be non-negative");
  }
  if (c.scenario == Scenario::steady)
    for (double r : c.rho_list) require(r > 0.0, "rho_list", "entries must be positive");
  if (c.scenario == Scenario::joint) {
    require(c.target > 0.0 && c.target < 1.0, "target", "must lie in (0,1)");
    for (std::size_t m : c.m_list) require(m >= 1, "m_list", "entries must be at least 1");
    require(c.a_s_list.size() >= 2, "a_s_list", "joint grid needs at least two points");
  }
}

/// Canonical `key=value` lines (sorted by key) used for hashing.
inline std::string canonical_config(const ExperimentConfig& c) {
  auto num = [](double d) { return fmt::format("{:.17g}", d); };
  auto dlist = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
  };
  auto nlist = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  std::map<std::string, std::string> kv{
      {"scenario", std::string(scenario_name(c.scenario))},
      {"box_width", num(c.box.width)},
      {"box_height", num(c.box.height)},
      {"n_aps", std::to_string(c.n_aps)},
      {"n_list", nlist(c.n_list)},
      {"eta", num(c.eta)},
      {"theta_db", dlist(c.theta_db)},
      {"alpha", dlist(c.alpha)},
      {"m_total", std::to_string(c.m_total)},
      {"m_list", nlist(c.m_list)},
      {"a_s", num(c.a_s)},
      {"a_s_list", dlist(c.a_s_list)},
      {"lambda", num(c.lambda)},
      {"mu", num(c.mu)},
      {"rho_list", dlist(c.rho_list)},
      {"n_realizations", std::to_string(c.n_realizations)},
      {"resolution", num(c.resolution)},
      {"seed", std::to_string(c.seed)},
      {"t_max", num(c.t_max)},
      {"t_points", std::to_string(c.t_points)},
      {"n_rays", std::to_string(c.n_rays)},
      {"ray_tol", num(c.ray_tol)},
      {"eps", num(c.eps)},
      {"target", num(c.target)},
      {"band_method", c.band_method == BandMethod::interpolated ? "interpolated" : "step"},
      {"split_arrivals", c.split_arrivals ? "true" : "false"},
      {"deployment", c.deployment_path},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

}  // namespace wavail
