#pragma once

// JSON run configs plus the target-set and search-space files.
// Parsing is strict: anything unexpected is rejected with a message that
// names the offending path. Missing keys keep
// their struct defaults, except schema_version which is required.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vreflab/analyses.hpp"
#include "vreflab/circuit_blocks.hpp"
#include "vreflab/device_physics.hpp"
#include "vreflab/error.hpp"
#include "vreflab/optimize.hpp"

namespace vreflab {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  int schema_version = kSchemaVersion;
  ProcessParams process;
  CircuitDesign design;
  AnalysisSettings analysis;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void bad(const std::string& path, const std::string& msg) {
  fail(ErrorCode::ConfigError, (path.empty() ? std::string("<root>") : path) + ": " + msg);
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) bad(join(path, item.key()), "unknown key");
  }
}

inline void read(const json& obj, const char* key, const std::string& path, double& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) bad(join(path, key), "expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) bad(join(path, key), "expected a finite number");
}

inline void read(const json& obj, const char* key, const std::string& path, bool& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad(join(path, key), "expected true or false");
  out = v.get<bool>();
}

inline void read(const json& obj, const char* key, const std::string& path, int& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(join(path, key), "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    bad(join(path, key), "integer out of range");
  }
  out = static_cast<int>(x);
}

inline void read(const json& obj, const char* key, const std::string& path, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) bad(join(path, key), "expected a non-negative integer");
  out = v.get<std::uint64_t>();
}

inline void read(const json& obj, const char* key, const std::string& path, std::string& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_string()) bad(join(path, key), "expected a string");
  out = v.get<std::string>();
}

inline DeviceGeometry parse_geometry(const json& j, const std::string& path) {
  check_keys(j, path, {"w_over_l", "multiplier", "vth_offset"});
  DeviceGeometry g;
  read(j, "w_over_l", path, g.w_over_l);
  read(j, "multiplier", path, g.multiplier);
  read(j, "vth_offset", path, g.vth_offset);
  return g;
}

inline json geometry_json(const DeviceGeometry& g) {
  return json{{"w_over_l", g.w_over_l}, {"multiplier", g.multiplier}, {"vth_offset", g.vth_offset}};
}

}  // namespace config_detail

inline ProcessParams parse_process(const nlohmann::json& j, const std::string& path = "process") {
  using namespace config_detail;
  check_keys(j, path,
             {"mu_cox_ref", "mobility_exponent", "vth0_ref", "vth_tempco", "slope_factor",
              "swing_coeff", "t_ref", "lambda_simple", "lambda_cascode", "resistor_tempco",
              "mc_sigmas"});
  ProcessParams p;
  read(j, "mu_cox_ref", path, p.mu_cox_ref);
  read(j, "mobility_exponent", path, p.mobility_exponent);
  read(j, "vth0_ref", path, p.vth0_ref);
  read(j, "vth_tempco", path, p.vth_tempco);
  read(j, "slope_factor", path, p.slope_factor);
  read(j, "swing_coeff", path, p.swing_coeff);
  read(j, "t_ref", path, p.t_ref);
  read(j, "lambda_simple", path, p.lambda_simple);
  read(j, "lambda_cascode", path, p.lambda_cascode);
  read(j, "resistor_tempco", path, p.resistor_tempco);
  if (j.contains("mc_sigmas")) {
    const std::string sp = join(path, "mc_sigmas");
    const auto& s = j.at("mc_sigmas");
    check_keys(s, sp, {"vth0_ref", "mu_cox_ref", "resistors", "mirror_ratios"});
    read(s, "vth0_ref", sp, p.mc_sigmas.vth0_ref);
    read(s, "mu_cox_ref", sp, p.mc_sigmas.mu_cox_ref);
    read(s, "resistors", sp, p.mc_sigmas.resistors);
    read(s, "mirror_ratios", sp, p.mc_sigmas.mirror_ratios);
  }
  if (const auto err = validation_error(p); !err.empty()) bad(path, err);
  return p;
}

inline CircuitDesign parse_design(const nlohmann::json& j, const std::string& path = "design") {
  using namespace config_detail;
  check_keys(j, path,
             {"r1", "r2", "r3", "np", "nc", "alpha_p", "alpha_c", "m0_geom", "m7_geom", "m1_geom",
              "cascode", "compensation_enabled", "vdd_nominal"});
  CircuitDesign d;
  read(j, "r1", path, d.r1);
  read(j, "r2", path, d.r2);
  read(j, "r3", path, d.r3);
  read(j, "np", path, d.np);
  read(j, "nc", path, d.nc);
  read(j, "alpha_p", path, d.alpha_p);
  read(j, "alpha_c", path, d.alpha_c);
  if (j.contains("m0_geom")) d.m0_geom = parse_geometry(j.at("m0_geom"), join(path, "m0_geom"));
  if (j.contains("m7_geom")) d.m7_geom = parse_geometry(j.at("m7_geom"), join(path, "m7_geom"));
  if (j.contains("m1_geom")) d.m1_geom = parse_geometry(j.at("m1_geom"), join(path, "m1_geom"));
  read(j, "cascode", path, d.cascode);
  read(j, "compensation_enabled", path, d.compensation_enabled);
  read(j, "vdd_nominal", path, d.vdd_nominal);
  if (const auto err = validation_error(d); !err.empty()) bad(path, err);
  return d;
}

/// Empty when valid.
inline std::string validation_error(const AnalysisSettings& s) {
  if (!(s.vdd > 0.0)) return "vdd must be > 0";
  if (!(s.t_min < s.t_max)) return "t_min must be < t_max";
  if (!(s.t_step > 0.0)) return "t_step must be > 0";
  if (!(s.t_min + constants::celsius_offset > 0.0)) return "t_min must be above absolute zero";
  if (!(s.t_nominal + constants::celsius_offset > 0.0)) return "t_nominal must be above absolute zero";
  if (!(s.v_min > 0.0)) return "v_min must be > 0";
  if (!(s.v_min < s.v_max)) return "v_min must be < v_max";
  if (!(s.v_step > 0.0)) return "v_step must be > 0";
  if (!(s.psrr_delta > 0.0)) return "psrr_delta must be > 0";
  if (!(s.vdd - s.psrr_delta > 0.0)) return "psrr_delta must be smaller than vdd";
  for (double v : s.power_supplies) {
    if (!(v > 0.0)) return "power_supplies entries must be > 0";
  }
  if (s.mc_samples < 1) return "mc_samples must be >= 1";
  return {};
}

inline AnalysisSettings parse_analysis(const nlohmann::json& j, const std::string& path = "analysis") {
  using namespace config_detail;
  check_keys(j, path,
             {"vdd", "t_min", "t_max", "t_step", "t_nominal", "v_min", "v_max", "v_step",
              "psrr_delta", "power_supplies", "mc_samples", "seed"});
  AnalysisSettings s;
  read(j, "vdd", path, s.vdd);
  read(j, "t_min", path, s.t_min);
  read(j, "t_max", path, s.t_max);
  read(j, "t_step", path, s.t_step);
  read(j, "t_nominal", path, s.t_nominal);
  read(j, "v_min", path, s.v_min);
  read(j, "v_max", path, s.v_max);
  read(j, "v_step", path, s.v_step);
  read(j, "psrr_delta", path, s.psrr_delta);
  if (j.contains("power_supplies")) {
    const auto& arr = j.at("power_supplies");
    const std::string ap = join(path, "power_supplies");
    if (!arr.is_array()) bad(ap, "expected an array of numbers");
    s.power_supplies.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) bad(ap + "[" + std::to_string(i) + "]", "expected a number");
      s.power_supplies.push_back(arr[i].get<double>());
    }
  }
  read(j, "mc_samples", path, s.mc_samples);
  read(j, "seed", path, s.seed);
  if (const auto err = validation_error(s); !err.empty()) bad(path, err);
  return s;
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using namespace config_detail;
  check_keys(j, "", {"schema_version", "process", "design", "analysis"});
  if (!j.contains("schema_version")) bad("schema_version", "missing (required)");
  RunConfig c;
  read(j, "schema_version", "", c.schema_version);
  if (c.schema_version != kSchemaVersion) {
    bad("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                              " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (j.contains("process")) c.process = parse_process(j.at("process"));
  if (j.contains("design")) c.design = parse_design(j.at("design"));
  if (j.contains("analysis")) c.analysis = parse_analysis(j.at("analysis"));
  return c;
}

/// Parses JSON text; `source` names the input in diagnostics.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ConfigError, source + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

inline nlohmann::json load_json_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::ConfigError, file.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), file.string());
}

/// Loads and validates a run config. Errors are prefixed with the file name.
inline RunConfig load_run_config(const std::filesystem::path& file) {
  const auto j = load_json_file(file);
  try {
    return parse_run_config(j);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, file.string() + ": " + e.detail());
  }
}

inline nlohmann::json to_json(const RunConfig& c) {
  using config_detail::geometry_json;
  using nlohmann::json;
  const ProcessParams& p = c.process;
  const CircuitDesign& d = c.design;
  const AnalysisSettings& a = c.analysis;
  json j;
  j["schema_version"] = c.schema_version;
  j["process"] = {
      {"mu_cox_ref", p.mu_cox_ref},
      {"mobility_exponent", p.mobility_exponent},
      {"vth0_ref", p.vth0_ref},
      {"vth_tempco", p.vth_tempco},
      {"slope_factor", p.slope_factor},
      {"swing_coeff", p.swing_coeff},
      {"t_ref", p.t_ref},
      {"lambda_simple", p.lambda_simple},
      {"lambda_cascode", p.lambda_cascode},
      {"resistor_tempco", p.resistor_tempco},
      {"mc_sigmas",
       {{"vth0_ref", p.mc_sigmas.vth0_ref},
        {"mu_cox_ref", p.mc_sigmas.mu_cox_ref},
        {"resistors", p.mc_sigmas.resistors},
        {"mirror_ratios", p.mc_sigmas.mirror_ratios}}},
  };
  j["design"] = {
      {"r1", d.r1},
      {"r2", d.r2},
      {"r3", d.r3},
      {"np", d.np},
      {"nc", d.nc},
      {"alpha_p", d.alpha_p},
      {"alpha_c", d.alpha_c},
      {"m0_geom", geometry_json(d.m0_geom)},
      {"m7_geom", geometry_json(d.m7_geom)},
      {"m1_geom", geometry_json(d.m1_geom)},
      {"cascode", d.cascode},
      {"compensation_enabled", d.compensation_enabled},
      {"vdd_nominal", d.vdd_nominal},
  };
  j["analysis"] = {
      {"vdd", a.vdd},
      {"t_min", a.t_min},
      {"t_max", a.t_max},
      {"t_step", a.t_step},
      {"t_nominal", a.t_nominal},
      {"v_min", a.v_min},
      {"v_max", a.v_max},
      {"v_step", a.v_step},
      {"psrr_delta", a.psrr_delta},
      {"power_supplies", a.power_supplies},
      {"mc_samples", a.mc_samples},
      {"seed", a.seed},
  };
  return j;
}

// ---------------------------------------------------------------------------
// Target sets: {"targets": [{"metric", "value", "weight", "tolerance", "mode"}]}

inline TargetSet parse_target_set(const nlohmann::json& j) {
  using namespace config_detail;
  check_keys(j, "", {"targets"});
  if (!j.contains("targets") || !j.at("targets").is_array()) bad("targets", "expected an array");
  TargetSet ts;
  const auto& arr = j.at("targets");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "targets[" + std::to_string(i) + "]";
    check_keys(arr[i], path, {"metric", "value", "weight", "tolerance", "mode"});
    if (!arr[i].contains("metric")) bad(join(path, "metric"), "missing (required)");
    if (!arr[i].contains("value")) bad(join(path, "value"), "missing (required)");
    Target t;
    read(arr[i], "metric", path, t.metric);
    read(arr[i], "value", path, t.value);
    read(arr[i], "weight", path, t.weight);
    read(arr[i], "tolerance", path, t.tolerance);
    std::string mode = to_string(t.mode);
    read(arr[i], "mode", path, mode);
    const auto m = parse_target_mode(mode);
    if (!m) bad(join(path, "mode"), "unknown mode '" + mode + "'");
    t.mode = *m;
    if (!parse_metric_name(t.metric)) bad(join(path, "metric"), "unknown metric '" + t.metric + "'");
    if (!(t.weight > 0.0)) bad(join(path, "weight"), "must be > 0");
    if (t.value == 0.0) bad(join(path, "value"), "must be non-zero (errors are relative)");
    if (!(t.tolerance >= 0.0)) bad(join(path, "tolerance"), "must be >= 0");
    ts.targets.push_back(t);
  }
  if (ts.targets.empty()) bad("targets", "at least one target is required");
  return ts;
}

inline nlohmann::json to_json(const TargetSet& ts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : ts.targets) {
    arr.push_back({{"metric", t.metric},
                   {"value", t.value},
                   {"weight", t.weight},
                   {"tolerance", t.tolerance},
                   {"mode", to_string(t.mode)}});
  }
  return {{"targets", arr}};
}

// ---------------------------------------------------------------------------
// Search spaces: {"parameters": [{"name", "lo", "hi", "log"}], "targets": [...]}
// The optional targets array overrides the default optimization goal.

struct SearchSpec {
  SearchSpace space;
  std::optional<TargetSet> targets;
};

inline SearchSpec parse_search_spec(const nlohmann::json& j) {
  using namespace config_detail;
  check_keys(j, "", {"parameters", "targets"});
  if (!j.contains("parameters") || !j.at("parameters").is_array()) {
    bad("parameters", "expected an array");
  }
  SearchSpec spec;
  const auto& arr = j.at("parameters");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "parameters[" + std::to_string(i) + "]";
    check_keys(arr[i], path, {"name", "lo", "hi", "log"});
    for (const char* k : {"name", "lo", "hi"}) {
      if (!arr[i].contains(k)) bad(join(path, k), "missing (required)");
    }
    ParamBound b;
    read(arr[i], "name", path, b.name);
    read(arr[i], "lo", path, b.lo);
    read(arr[i], "hi", path, b.hi);
    read(arr[i], "log", path, b.log_scale);
    if (!(b.lo < b.hi)) bad(path, "parameter '" + b.name + "': lo must be < hi");
    spec.space.params.push_back(b);
  }
  if (const auto err = validation_error(spec.space); !err.empty()) bad("parameters", err);
  if (j.contains("targets")) spec.targets = parse_target_set(nlohmann::json{{"targets", j.at("targets")}});
  return spec;
}

}  // namespace vreflab
