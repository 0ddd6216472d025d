#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "vreflab/cli.hpp"

using namespace vreflab;
using vreflab::testing::shipped_config;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err, VREFLAB_DEFAULT_CONFIG);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("vreflab_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content = "") const {
    const auto p = path_ / name;
    if (!content.empty()) std::ofstream(p) << content;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Value of "# key=value" in a CSV summary block.
double summary(const std::string& csv, const std::string& key) {
  const std::string tag = "# " + key + "=";
  const auto pos = csv.find(tag);
  if (pos == std::string::npos) {
    ADD_FAILURE() << "missing " << key;
    return std::nan("");
  }
  return std::stod(csv.substr(pos + tag.size()));
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t data_rows(const std::string& csv) {
  std::size_t n = 0;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++n;
  }
  return n;
}

}  // namespace

TEST(CliOp, DefaultConfig) {
  const CliRun r = run({"op"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("v_ref_v = ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(r.out.substr(pos + 10)), 0.2055, 1e-3);
  EXPECT_EQ(first_line(r.out), "temp_c = 27");
}

TEST(CliOp, JsonAndOverrides) {
  const CliRun r = run({"op", "--json", "--temp", "85", "--vdd", "1.8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("temp_c").get<double>(), 85.0);
  EXPECT_EQ(j.at("vdd_v").get<double>(), 1.8);
  const double no_comp = nlohmann::json::parse(run({"op", "--json", "--no-comp"}).out)["i_comp_a"];
  EXPECT_EQ(no_comp, 0.0);
}

TEST(CliOp, UsageErrors) {
  EXPECT_EQ(run({"op", "--vdd", "0"}).code, 1);
  EXPECT_EQ(run({"op", "--temp", "-300"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"op", "--vdd", "abc"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliOp, NumericalFailureExitsTwo) {
  const CliRun r = run({"op", "--vdd", "0.05"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("NonPhysicalOperatingPoint"), std::string::npos);
}

TEST(CliConfig, MalformedJsonNamesFile) {
  TempDir tmp;
  const std::string bad = tmp.file("bad.json", "{ not json");
  const CliRun r = run({"op", "--config", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(bad + ": malformed JSON"), std::string::npos) << r.err;
  const std::string typo = tmp.file("typo.json", R"({"schema_version":1,"design":{"r5":1}})");
  const CliRun t = run({"op", "--config", typo});
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.err.find("design.r5: unknown key"), std::string::npos) << t.err;
  EXPECT_EQ(run({"op", "--config", tmp.file("missing.json")}).code, 1);
}

TEST(CliSweepTemp, HeaderAndSummary) {
  const CliRun r = run({"sweep-temp"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(r.out), "temp_c,v_ref_v,i_ptat_a,i_ctat_a,i_comp_a,i_ref_a,power_w");
  EXPECT_EQ(data_rows(r.out), 171u);
  EXPECT_LE(summary(r.out, "tc_ppm_per_c"), 20.0);
  EXPECT_NEAR(summary(r.out, "v_ref_nominal_v"), 0.2055, 1e-3);
  for (const char* key : {"v_ref_min_v", "t_at_min_c", "v_ref_max_v", "t_at_max_c",
                          "max_deviation_v", "slope_ptat_a_per_c", "slope_ctat_a_per_c",
                          "slope_comp_a_per_c", "slope_net_a_per_c"}) {
    EXPECT_TRUE(std::isfinite(summary(r.out, key))) << key;
  }
}

TEST(CliSweepTemp, NoCompAndOptions) {
  const CliRun nc = run({"sweep-temp", "--no-comp"});
  ASSERT_EQ(nc.code, 0);
  EXPECT_GE(summary(nc.out, "tc_ppm_per_c"), 100.0);
  const CliRun two = run({"sweep-temp", "--tmin", "0", "--tmax", "10", "--step", "50"});
  ASSERT_EQ(two.code, 0);
  EXPECT_EQ(data_rows(two.out), 2u);
  EXPECT_EQ(run({"sweep-temp", "--tmin", "10", "--tmax", "10"}).code, 1);
  EXPECT_EQ(run({"sweep-temp", "--step", "0"}).code, 1);
  EXPECT_EQ(run({"sweep-temp", "--format", "xml"}).code, 1);
}

TEST(CliSweepTemp, JsonAndFileOutput) {
  TempDir tmp;
  const std::string path = tmp.file("t.json");
  const CliRun r = run({"sweep-temp", "--format", "json", "--out", path, "--step", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto j = nlohmann::json::parse(read_file(path));
  EXPECT_EQ(j.at("temp_c").size(), 35u);
  EXPECT_TRUE(j.at("summary").contains("tc_ppm_per_c"));
}

TEST(CliSweepTemp, FailingPointsAreListed) {
  const CliRun r = run({"sweep-temp", "--vdd", "0.1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("171 grid point(s) failed"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("temp_c=-40"), std::string::npos);
  EXPECT_NE(r.err.find("temp_c=130"), std::string::npos);
}

TEST(CliSweepVdd, LineSensitivity) {
  const CliRun r = run({"sweep-vdd"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(r.out), "vdd_v,v_ref_v,i_quiescent_a,power_w");
  EXPECT_EQ(data_rows(r.out), 57u);
  const double ls = summary(r.out, "line_sensitivity_pct_per_v");
  EXPECT_NEAR(ls, 1.65, 0.15);
  EXPECT_NEAR(summary(r.out, "psrr_dc_db"), -50.0, 1.5);
  const CliRun s = run({"sweep-vdd", "--simple-mirror"});
  ASSERT_EQ(s.code, 0);
  EXPECT_GE(summary(s.out, "line_sensitivity_pct_per_v"), 5.0 * ls);
  EXPECT_EQ(run({"sweep-vdd", "--vmin", "1", "--vmax", "1"}).code, 1);
  EXPECT_EQ(run({"sweep-vdd", "--vmin", "0"}).code, 1);
}

TEST(CliMc, ReproducibleOutput) {
  const CliRun a = run({"mc", "--samples", "20", "--seed", "9"});
  const CliRun b = run({"mc", "--samples", "20", "--seed", "9"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(first_line(a.out), "sample_id,v_ref_v,tc_ppm,ls_pct_per_v");
  EXPECT_NE(a.out.find("# stat,v_ref_v,tc_ppm,ls_pct_per_v\n# mean,"), std::string::npos);
  EXPECT_NE(a.out.find("# samples=20\n# seed=9\n# failures=0\n"), std::string::npos);
  EXPECT_NE(run({"mc", "--samples", "20", "--seed", "10"}).out, a.out);
  EXPECT_EQ(run({"mc", "--samples", "0"}).code, 1);
}

TEST(CliMc, ZeroSigmasGiveZeroSpread) {
  TempDir tmp;
  RunConfig cfg = shipped_config();
  cfg.process.mc_sigmas = McSigmas{};
  const std::string path = tmp.file("flat.json", to_json(cfg).dump());
  const CliRun r = run({"mc", "--config", path, "--samples", "5", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["summary"]["v_ref_v"]["sigma"].get<double>(), 0.0);
  EXPECT_EQ(j["summary"]["tc_ppm"]["sigma"].get<double>(), 0.0);
}

TEST(CliMc, ShippedStatistics) {
  const CliRun r = run({"mc", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["summary"]["samples"].get<int>(), 100);
  EXPECT_EQ(j["summary"]["failures"].get<int>(), 0);
  EXPECT_NEAR(j["summary"]["v_ref_v"]["mean"].get<double>(), 0.20485, 3e-3);
  EXPECT_NEAR(j["summary"]["tc_ppm"]["mean"].get<double>(), 16.28, 5.0);
  EXPECT_GT(j["summary"]["v_ref_v"]["sigma"].get<double>(), 0.0);
}

TEST(CliCalibrate, BudgetOneEchoesStart) {
  TempDir tmp;
  const std::string out = tmp.file("cal.json");
  const CliRun r = run({"calibrate", "--budget", "1", "--out", out});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_run_config(out), shipped_config());
  EXPECT_NE(r.out.find("objective = "), std::string::npos);
  EXPECT_NE(r.out.find("evaluations = 1"), std::string::npos);
  EXPECT_EQ(first_line(r.out).substr(0, 6), "metric");
}

TEST(CliCalibrate, UnsatisfiedTargetsExitThree) {
  TempDir tmp;
  const std::string targets =
      tmp.file("t.json", R"({"targets":[{"metric":"v_ref_nominal","value":0.5,"tolerance":0.01}]})");
  const CliRun r = run({"calibrate", "--budget", "1", "--targets", targets, "--out", tmp.file("o.json")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("MISS"), std::string::npos);
}

TEST(CliCalibrate, BadSpaceNamesParameter) {
  TempDir tmp;
  const std::string space =
      tmp.file("s.json", R"({"parameters":[{"name":"r3","lo":2e5,"hi":1e5}]})");
  const CliRun r = run({"calibrate", "--space", space, "--out", tmp.file("o.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("parameter 'r3'"), std::string::npos) << r.err;
  EXPECT_EQ(run({"calibrate"}).code, 1);  // --out is required
  EXPECT_EQ(run({"calibrate", "--budget", "0", "--out", tmp.file("p.json")}).code, 1);
}

TEST(CliOptimize, SpaceFileDrivesSearch) {
  TempDir tmp;
  const RunConfig& cfg = shipped_config();
  nlohmann::json spec = {
      {"parameters",
       {{{"name", "r3"}, {"lo", cfg.design.r3 * 0.9}, {"hi", cfg.design.r3 * 1.1}, {"log", true}}}},
      {"targets", {{{"metric", "v_ref_nominal"}, {"value", 0.2}, {"tolerance", 0.002}}}}};
  const std::string space = tmp.file("space.json", spec.dump());
  const std::string out = tmp.file("opt.json");
  const CliRun r = run({"optimize", "--space", space, "--budget", "40", "--out", out});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const RunConfig res = load_run_config(out);
  EXPECT_NE(res.design.r3, cfg.design.r3);
  EXPECT_EQ(res.design.r1, cfg.design.r1);
  EXPECT_EQ(run({"optimize", "--out", out}).code, 1);
}
