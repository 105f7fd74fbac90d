#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "wavail/wavail.hpp"

using namespace wavail;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wavail_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const OutputFile& file_named(const ScenarioOutput& out, const std::string& name) {
  for (const auto& f : out.files)
    if (f.name == name) return f;
  throw std::runtime_error("no output named " + name);
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    rows.push_back(cols);
  }
  return rows;
}

ExperimentConfig small_spatial(Scenario s) {
  ExperimentConfig c = default_config(s);
  c.n_realizations = 12;
  c.resolution = 0.25;
  c.n_list = {5, 15};
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WAVAIL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* key, const char* value) : key_(key) {
    if (const char* old = std::getenv(key)) old_ = old;
    ::setenv(key, value, 1);
  }
  ~ScopedEnv() {
    if (old_) ::setenv(key_, old_->c_str(), 1);
    else ::unsetenv(key_);
  }

 private:
  const char* key_;
  std::optional<std::string> old_;
};

}  // namespace

TEST(Config, DefaultsMatchReferenceSetup) {
  const ExperimentConfig c = default_config(Scenario::joint);
  EXPECT_EQ(c.box.area(), 100.0);
  EXPECT_EQ(c.eta, 4.0);
  EXPECT_EQ(c.m_total, 10u);
  EXPECT_EQ(c.lambda, 8.0);
  EXPECT_EQ(c.mu, 1.0);
  EXPECT_EQ(c.n_realizations, 10000u);
  EXPECT_EQ(c.a_s_list.size(), 11u);
  EXPECT_EQ(c.m_list, (std::vector<std::size_t>{10, 20, 30}));
  const ExperimentConfig sweep = default_config(Scenario::spatial_sweep);
  EXPECT_EQ(sweep.theta_db.size(), 11u);
  EXPECT_EQ(sweep.alpha, (std::vector<double>{0.5, 0.7, 0.8, 0.9}));
  const ExperimentConfig steady = default_config(Scenario::steady);
  EXPECT_DOUBLE_EQ(steady.rho_list.front(), 0.25);
  EXPECT_DOUBLE_EQ(steady.rho_list.back(), 64.0);
  const auto t = default_config(Scenario::transient).time_grid();
  EXPECT_EQ(t.size(), 200u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 5.0);
}

TEST(Config, ScenarioNamesRoundTrip) {
  for (Scenario s : {Scenario::region, Scenario::spatial_sweep, Scenario::densification, Scenario::transient,
                     Scenario::steady, Scenario::joint})
    EXPECT_EQ(parse_scenario(scenario_name(s)), s);
  EXPECT_FALSE(parse_scenario("nope").has_value());
}

TEST(Config, ParsesKeyValueText) {
  std::istringstream in("# comment\nseed = 42\n\ntheta_db = -10, 0 ,10   # trailing\nalpha=0.8\nsplit_arrivals = true\n");
  ExperimentConfig c = default_config(Scenario::region);
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(c, k, v);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.theta_db, (std::vector<double>{-10, 0, 10}));
  EXPECT_EQ(c.alpha, (std::vector<double>{0.8}));
  EXPECT_TRUE(c.split_arrivals);
  EXPECT_NO_THROW(validate_config(c));
  EXPECT_EQ(region_pairs(c).size(), 3u);
}

TEST(Config, ErrorsCarryFieldPath) {
  ExperimentConfig c = default_config(Scenario::joint);
  try {
    apply_setting(c, "lambada", "3");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "config.lambada");
  }
  try {
    apply_setting(c, "lambda", "fast");
    FAIL() << "bad number accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "config.lambda");
  }
  apply_setting(c, "target", "1.5");
  try {
    validate_config(c);
    FAIL() << "target outside (0,1) accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "config.target");
  }
  ExperimentConfig r = default_config(Scenario::region);
  apply_setting(r, "alpha", "0.5, 1.2, 0.3, 0.4, 0.6");
  try {
    validate_config(r);
    FAIL() << "alpha >= 1 accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "config.alpha");
  }
  std::istringstream bad("seed 3\n");
  EXPECT_THROW(parse_key_values(bad, "f.cfg"), ConfigError);
  EXPECT_THROW(parse_override("seed"), ConfigError);
}

TEST(Config, CanonicalTextIgnoresOutputDir) {
  ExperimentConfig a = default_config(Scenario::joint), b = a;
  b.output_dir = "elsewhere";
  EXPECT_EQ(canonical_config(a), canonical_config(b));
  b.seed = 2;
  EXPECT_NE(canonical_config(a), canonical_config(b));
}

TEST(Joint, BandsAndKnownValues) {
  const JointResult r = joint_result(default_config(Scenario::joint));
  const SteadyPoint& full = r.curves.at(10).back();
  EXPECT_NEAR(full.at_a, 0.878338935747049, 1e-12);
  EXPECT_EQ(full.at_n, 0.0);
  auto band_for = [&](std::size_t m, BandMethod method) {
    for (const auto& b : r.bands)
      if (b.m == m && b.method == method) return b;
    throw std::runtime_error("band missing");
  };
  const auto b20 = band_for(20, BandMethod::interpolated);
  ASSERT_TRUE(b20.band.has_value());
  EXPECT_NEAR(b20.band->first, 0.43123, 5e-3);
  EXPECT_NEAR(b20.band->second, 0.56877, 5e-3);
  const auto b30 = band_for(30, BandMethod::interpolated);
  ASSERT_TRUE(b30.band.has_value());
  EXPECT_NEAR(b30.band->first, 0.28765, 5e-3);
  EXPECT_NEAR(b30.band->second, 0.7124, 5e-3);
  EXPECT_FALSE(band_for(10, BandMethod::interpolated).band.has_value());
  EXPECT_FALSE(band_for(10, BandMethod::step).band.has_value());
  // step edges sit on rounding breakpoints
  const auto s20 = band_for(20, BandMethod::step);
  ASSERT_TRUE(s20.band.has_value());
  EXPECT_NEAR(s20.band->first, 0.425, 1e-9);
  EXPECT_NEAR(s20.band->second, 0.575, 1e-9);
}

TEST(Joint, CurvesMirrorAboutOneHalf) {
  const ExperimentConfig c = default_config(Scenario::joint);
  const JointResult r = joint_result(c);
  for (std::size_t m : c.m_list) {
    const auto& pts = r.curves.at(m);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& mirror = pts[pts.size() - 1 - i];
      EXPECT_EQ(pts[i].partition.m_a, mirror.partition.m_n);
      EXPECT_EQ(pts[i].at_a, mirror.at_n);
    }
  }
}

TEST(Joint, OutputSchemas) {
  const ScenarioOutput out = run_joint(default_config(Scenario::joint));
  const auto joint = csv_rows(file_named(out, "joint.csv").content);
  EXPECT_EQ(joint[0], (std::vector<std::string>{"a_s", "m", "at_a", "at_n"}));
  EXPECT_EQ(joint.size(), 1u + 33u);
  const auto part = csv_rows(file_named(out, "joint_partition.csv").content);
  EXPECT_EQ(part[0], (std::vector<std::string>{"a_s", "m", "m_a", "m_n", "at_a", "at_n"}));
  EXPECT_EQ(part[6], (std::vector<std::string>{"0.5", "10", "5", "5", "0.520991696878", "0.520991696878"}));
  const auto band = csv_rows(file_named(out, "joint_band.csv").content);
  EXPECT_EQ(band[0], (std::vector<std::string>{"m", "target", "method", "as_low", "as_high"}));
  EXPECT_EQ(band[1][3], "nan");
}

TEST(Steady, MonotoneInLoadAndShare) {
  const ExperimentConfig c = default_config(Scenario::steady);
  for (double a_s : c.a_s_list) {
    double prev = 2.0;
    for (double rho : c.rho_list) {
      const SteadyPoint s = steady_point(a_s, c.m_total, rho, false);
      EXPECT_LT(s.at_a, prev);
      prev = s.at_a;
    }
  }
  for (double rho : c.rho_list) {
    double prev = -1.0;
    for (double a_s : c.a_s_list) {
      const double at = steady_point(a_s, c.m_total, rho, false).at_a;
      EXPECT_GE(at, prev);
      prev = at;
    }
  }
  EXPECT_GT(steady_point(0.5, 10, 1e-6, false).at_a, 1.0 - 1e-12);
  const auto rows = csv_rows(file_named(run_steady(c), "steady.csv").content);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"rho", "a_s", "at_a", "at_n"}));
  EXPECT_EQ(rows.size(), 1u + c.a_s_list.size() * c.rho_list.size());
}

TEST(Transient, PropertiesOfDefaultRun) {
  const TransientResult r = transient_result(default_config(Scenario::transient));
  EXPECT_EQ(r.avail_a.front(), 1.0);
  EXPECT_EQ(r.rel_a.front(), 1.0);
  EXPECT_LE(r.tail_bound, 1e-10);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    EXPECT_GE(r.avail_a[i], r.avail_n[i]);
    EXPECT_LE(r.rel_a[i], r.avail_a[i] + 1e-12);
    EXPECT_LE(r.rel_n[i], r.avail_n[i] + 1e-12);
  }
  EXPECT_NEAR(r.avail_a.back(), steady_state_availability(8.0, 7), 1e-4);
}

TEST(Region, NestedBoundariesAndRasters) {
  ExperimentConfig c = default_config(Scenario::region);
  c.resolution = 0.1;
  c.n_rays = 64;
  const auto [dep, ap] = region_subject(c);
  // theta = 0 dB with increasing alpha, then alpha = 0.8 with increasing theta
  std::vector<AvailabilityRegion> by_alpha, by_theta;
  for (double a : {0.7, 0.8, 0.9}) by_alpha.push_back(available_region(ap, dep, {.theta_db = 0, .alpha = a}, 0.1));
  for (double t : {-10.0, 0.0, 10.0}) by_theta.push_back(available_region(ap, dep, {.theta_db = t, .alpha = 0.8}, 0.1));
  for (const auto* seq : {&by_alpha, &by_theta})
    for (std::size_t k = 1; k < seq->size(); ++k)
      for (std::size_t i = 0; i < (*seq)[k].membership.size(); ++i)
        EXPECT_LE((*seq)[k].membership[i], (*seq)[k - 1].membership[i]);

  const auto inner = region_boundary_radial(ap, dep, {.theta_db = 0, .alpha = 0.9}, 64, 1e-5);
  const auto outer = region_boundary_radial(ap, dep, {.theta_db = 0, .alpha = 0.7}, 64, 1e-5);
  std::size_t compared = 0;
  for (const auto& p : inner)
    for (const auto& q : outer)
      if (p.angle_rad == q.angle_rad) {
        ++compared;
        EXPECT_LE(distance(p.point, dep.aps[ap]), distance(q.point, dep.aps[ap]) + 1e-12);
      }
  EXPECT_GT(compared, 0u);
}

TEST(Region, OutputsAndRerunAreIdentical) {
  ExperimentConfig c = default_config(Scenario::region);
  c.resolution = 0.2;
  c.n_rays = 32;
  const ScenarioOutput a = run_region(c);
  const ScenarioOutput b = run_region(c);
  ASSERT_EQ(a.files.size(), 3u + 3u * 5u);
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].name, b.files[i].name);
    EXPECT_EQ(a.files[i].content, b.files[i].content) << a.files[i].name;
  }
  EXPECT_EQ(file_named(a, "region_deployment.csv").content.substr(0, 13), "ap_index,x,y\n");
  EXPECT_EQ(file_named(a, "region_t-10_a0.8.pbm").content.substr(0, 9), "P1\n50 50\n");
  EXPECT_EQ(csv_rows(file_named(a, "region_summary.csv").content)[0],
            (std::vector<std::string>{"theta_db", "alpha", "area_d", "area_v", "a_s"}));
  EXPECT_EQ(file_named(a, "region_t0_a0.7_boundary.csv").content.substr(0, 14), "angle_rad,x,y\n");
}

TEST(Region, ReadsDeploymentFile) {
  const fs::path dir = scratch_dir("deployment");
  const Deployment d{.aps = {{2.5, 5.0}, {7.5, 5.0}}, .box = {}, .eta = 4.0, .seed = 0};
  {
    std::ofstream os(dir / "dep.csv");
    write_deployment_csv(os, d);
  }
  ExperimentConfig c = default_config(Scenario::region);
  c.deployment_path = (dir / "dep.csv").string();
  c.theta_db = {0};
  c.alpha = {0.5};
  c.resolution = 0.1;
  c.n_rays = 16;
  const auto rows = csv_rows(file_named(run_region(c), "region_summary.csv").content);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"0", "0.5", "50", "50", "1"}));
  c.deployment_path = (dir / "missing.csv").string();
  EXPECT_THROW(run_region(c), ConfigError);
}

TEST(SpatialSweep, ShapeAndMonotonicity) {
  const ScenarioOutput out = run_spatial_sweep(small_spatial(Scenario::spatial_sweep));
  const auto rows = csv_rows(file_named(out, "spatial-sweep.csv").content);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"theta_db", "alpha", "mean_as", "stderr"}));
  ASSERT_EQ(rows.size(), 1u + 11u * 4u);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t t = 1; t < 11; ++t)
      EXPECT_LE(std::stod(rows[1 + t * 4 + a][2]), std::stod(rows[1 + (t - 1) * 4 + a][2]));
}

TEST(Densification, Shape) {
  const ScenarioOutput out = run_densification(small_spatial(Scenario::densification));
  const auto rows = csv_rows(file_named(out, "densification.csv").content);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "alpha", "mean_as"}));
  ASSERT_EQ(rows.size(), 1u + 2u * 2u);
  EXPECT_EQ(rows[1][0], "5");
  EXPECT_EQ(rows[4][1], "0.9");
}

TEST(Determinism, SweepIndependentOfThreadSetting) {
  const ExperimentConfig c = small_spatial(Scenario::spatial_sweep);
  std::string reference;
  for (const char* threads : {"1", "2", "5", "0"}) {
    ScopedEnv env("WAVAIL_THREADS", threads);
    const std::string csv = file_named(run_spatial_sweep(c), "spatial-sweep.csv").content;
    if (reference.empty()) reference = csv;
    EXPECT_EQ(csv, reference) << "WAVAIL_THREADS=" << threads;
  }
}

TEST(Manifest, VerifiesWrittenOutputs) {
  const fs::path dir = scratch_dir("manifest");
  ExperimentConfig c = default_config(Scenario::joint);
  c.output_dir = dir.string();
  const RunManifest m = write_outputs(c, run_joint(c), 0.1);
  EXPECT_EQ(m.checksums.size(), 3u);
  EXPECT_TRUE(verify_manifest(dir, c.scenario, m).empty());
  EXPECT_TRUE(fs::exists(dir / "joint.manifest.json"));
  const auto json = nlohmann::json::parse(read_file(dir / "joint.manifest.json"));
  EXPECT_EQ(json["scenario"], "joint");
  EXPECT_EQ(json["seed"], 1);
  EXPECT_EQ(json["outputs"].size(), 3u);

  {
    std::ofstream os(dir / "joint_extra.csv");
    os << "x\n";
  }
  auto problems = verify_manifest(dir, c.scenario, m);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("joint_extra.csv"), std::string::npos);
  fs::remove(dir / "joint_extra.csv");

  {
    std::ofstream os(dir / "joint.csv", std::ios::app);
    os << "tampered\n";
  }
  problems = verify_manifest(dir, c.scenario, m);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("checksum mismatch"), std::string::npos);

  fs::remove(dir / "joint_band.csv");
  EXPECT_EQ(verify_manifest(dir, c.scenario, m).size(), 2u);
}

TEST(Manifest, SameConfigSameChecksums) {
  ExperimentConfig c = default_config(Scenario::transient);
  c.t_points = 20;
  const RunManifest a = make_manifest(c, run_transient(c), 0.0);
  const RunManifest b = make_manifest(c, run_transient(c), 5.0);
  EXPECT_EQ(a.checksums, b.checksums);
  EXPECT_EQ(a.config_hash, b.config_hash);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(checksum_string("a"), "fnv1a64:af63dc4c8601ec8c");
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  EXPECT_EQ(run_cli("joint --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "joint_band.csv"));
  EXPECT_EQ(run_cli("steady --out " + dir.string() + " --override m_total=20"), 0);
  EXPECT_EQ(run_cli("bogus --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("joint --out " + dir.string() + " --override nonsense=1"), 2);
  EXPECT_EQ(run_cli("joint --out " + dir.string() + " --override target=2"), 2);
  EXPECT_EQ(run_cli("joint --config " + (dir / "absent.cfg").string()), 2);
  EXPECT_EQ(run_cli("transient --out " + dir.string() + " --override t_max=1e9 --override t_points=2"), 3);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, ConfigFileAndSeedFlag) {
  const fs::path dir = scratch_dir("cli_config");
  {
    std::ofstream os(dir / "t.cfg");
    os << "# short run\nt_points = 11\nt_max = 2\n";
  }
  ASSERT_EQ(run_cli("transient --config " + (dir / "t.cfg").string() + " --seed 9 --out " + dir.string()), 0);
  const auto rows = csv_rows(read_file(dir / "transient.csv"));
  EXPECT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows.back()[0], "2");
  const auto json = nlohmann::json::parse(read_file(dir / "transient.manifest.json"));
  EXPECT_EQ(json["seed"], 9);
}
