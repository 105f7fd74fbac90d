// wavail: runs one experiment scenario and writes its CSV outputs + manifest.
//
//   wavail <scenario> [--config PATH] [--seed N] [--out DIR] [--override key=value ...]
//
// Exit codes: 0 success, 1 I/O or internal error, 2 config error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "wavail/wavail.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

wavail::ExperimentConfig load_config(wavail::Scenario scenario, const std::string& path,
                                     const std::vector<std::string>& overrides) {
  wavail::ExperimentConfig cfg = wavail::default_config(scenario);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw wavail::ConfigError("--config", "cannot open " + path);
    for (const auto& [k, v] : wavail::parse_key_values(in, path)) wavail::apply_setting(cfg, k, v);
  }
  for (const auto& kv : overrides) {
    const auto [k, v] = wavail::parse_override(kv);
    wavail::apply_setting(cfg, k, v);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time availability and reliability experiments"};
  std::string scenario_arg;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  app.add_option("scenario", scenario_arg, "region | spatial-sweep | densification | transient | steady | joint")
      ->required();
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--override", overrides, "key=value setting, applied after the config file")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  try {
    const auto scenario = wavail::parse_scenario(scenario_arg);
    if (!scenario) throw wavail::ConfigError("scenario", "unknown scenario '" + scenario_arg + "'");
    wavail::ExperimentConfig cfg = load_config(*scenario, config_path, overrides);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    wavail::validate_config(cfg);

    const auto start = std::chrono::steady_clock::now();
    const wavail::ScenarioOutput result = wavail::run_scenario(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const wavail::RunManifest manifest = wavail::write_outputs(cfg, result, wall);

    for (const auto& line : result.report) std::cout << line << '\n';
    std::cout << "wrote " << manifest.checksums.size() << " file(s) to " << cfg.output_dir << " (" << wall << " s)\n";
    return 0;
  } catch (const wavail::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const wavail::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const wavail::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
