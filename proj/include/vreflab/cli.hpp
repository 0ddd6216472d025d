#pragma once

// Command-line front end. run_cli() takes the arguments after the program
// name and writes to the given streams, so tests drive it in-process.
//
// Exit codes: 0 success, 1 bad input, 2 numerical failure, 3 targets missed.

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vreflab/analyses.hpp"
#include "vreflab/config.hpp"
#include "vreflab/optimize.hpp"
#include "vreflab/report.hpp"

namespace vreflab {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitSolver = 2, kExitUnsatisfied = 3 };

namespace cli_detail {

/// Signals a usage problem detected after argument parsing.
struct UsageError {
  std::string message;
};

inline RunConfig load_config_or_default(const std::string& path) {
  return load_run_config(std::filesystem::path(path));
}

inline void write_output(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::ConfigError, out_path + ": cannot open for writing");
  f << text;
  if (!f) fail(ErrorCode::ConfigError, out_path + ": write failed");
}

inline std::string render(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void check_format(const std::string& format) {
  if (format != "csv" && format != "json") throw UsageError{"--format must be csv or json"};
}

inline void report_sweep_failures(const SweepError& e, const char* axis_name, std::ostream& err) {
  err << "error: " << e.failures().size() << " grid point(s) failed\n";
  for (const auto& f : e.failures()) {
    err << "  " << axis_name << "=" << fmt_num(f.axis_value) << ": " << f.message << "\n";
  }
}

inline TargetSet default_optimize_targets() {
  return TargetSet{{
      {"tc_ppm", 16.28, 1.0, 0.2, TargetMode::Minimize},
      {"v_ref_nominal", 0.2055, 10.0, 0.0048, TargetMode::Equal},
  }};
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   const std::string& default_config) {
  using namespace cli_detail;
  CLI::App app{"Behavioral model and analysis tool for a subthreshold voltage reference", "vreflab"};
  app.require_subcommand(1);

  std::string config_path = default_config;
  std::string out_path;
  std::string format = "csv";

  // op
  auto* op = app.add_subcommand("op", "Solve one operating point");
  std::optional<double> op_temp, op_vdd;
  bool op_no_comp = false, op_simple = false, op_json = false;
  op->add_option("--config", config_path, "Run config JSON");
  op->add_option("--temp", op_temp, "Temperature (degC)");
  op->add_option("--vdd", op_vdd, "Supply (V)");
  op->add_flag("--no-comp", op_no_comp, "Disable curvature compensation");
  op->add_flag("--simple-mirror", op_simple, "Use simple instead of cascode mirrors");
  op->add_flag("--json", op_json, "Print JSON instead of key = value lines");

  // sweep-temp
  auto* st = app.add_subcommand("sweep-temp", "Sweep temperature at fixed supply");
  std::optional<double> st_vdd, st_tmin, st_tmax, st_step;
  bool st_no_comp = false, st_simple = false;
  st->add_option("--config", config_path, "Run config JSON");
  st->add_option("--vdd", st_vdd, "Supply (V)");
  st->add_option("--tmin", st_tmin, "Lowest temperature (degC)");
  st->add_option("--tmax", st_tmax, "Highest temperature (degC)");
  st->add_option("--step", st_step, "Temperature step (degC)");
  st->add_flag("--no-comp", st_no_comp, "Disable curvature compensation");
  st->add_flag("--simple-mirror", st_simple, "Use simple instead of cascode mirrors");
  st->add_option("--out", out_path, "Output file (default stdout)");
  st->add_option("--format", format, "csv or json");

  // sweep-vdd
  auto* sv = app.add_subcommand("sweep-vdd", "Sweep supply at fixed temperature");
  std::optional<double> sv_temp, sv_vmin, sv_vmax, sv_step;
  bool sv_no_comp = false, sv_simple = false;
  sv->add_option("--config", config_path, "Run config JSON");
  sv->add_option("--temp", sv_temp, "Temperature (degC)");
  sv->add_option("--vmin", sv_vmin, "Lowest supply (V)");
  sv->add_option("--vmax", sv_vmax, "Highest supply (V)");
  sv->add_option("--step", sv_step, "Supply step (V)");
  sv->add_flag("--no-comp", sv_no_comp, "Disable curvature compensation");
  sv->add_flag("--simple-mirror", sv_simple, "Use simple instead of cascode mirrors");
  sv->add_option("--out", out_path, "Output file (default stdout)");
  sv->add_option("--format", format, "csv or json");

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo over process and mismatch sigmas");
  std::optional<long long> mc_samples;
  std::optional<std::uint64_t> mc_seed;
  mc->add_option("--config", config_path, "Run config JSON");
  mc->add_option("--samples", mc_samples, "Number of samples");
  mc->add_option("--seed", mc_seed, "Random seed");
  mc->add_option("--out", out_path, "Output file (default stdout)");
  mc->add_option("--format", format, "csv or json");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit the design to a target set");
  std::string cal_targets = "builtin";
  std::string cal_space;
  int budget = 5000;
  cal->add_option("--config", config_path, "Starting run config JSON");
  cal->add_option("--targets", cal_targets, "Target set JSON, or 'builtin'");
  cal->add_option("--space", cal_space, "Search space JSON (default: built-in bounds)");
  cal->add_option("--budget", budget, "Objective evaluations");
  cal->add_option("--out", out_path, "Where to write the calibrated config")->required();

  // optimize
  auto* opt = app.add_subcommand("optimize", "Minimize TC at a v_ref target over a search space");
  std::string opt_space;
  std::string opt_targets;
  opt->add_option("--config", config_path, "Starting run config JSON");
  opt->add_option("--space", opt_space, "Search space JSON")->required();
  opt->add_option("--targets", opt_targets, "Target set JSON (overrides the space file)");
  opt->add_option("--budget", budget, "Objective evaluations");
  opt->add_option("--out", out_path, "Where to write the optimized config")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = load_config_or_default(config_path);
    const std::size_t threads = default_thread_count();
    AnalysisSettings& a = cfg.analysis;

    if (op->parsed()) {
      const double t_c = op_temp.value_or(a.t_nominal);
      const double vdd = op_vdd.value_or(a.vdd);
      if (!(vdd > 0.0)) throw UsageError{"--vdd must be > 0"};
      if (!(t_c > -constants::celsius_offset)) throw UsageError{"--temp must be above absolute zero"};
      if (op_no_comp) cfg.design.compensation_enabled = false;
      if (op_simple) cfg.design.cascode = false;
      const OperatingPoint p =
          solve_operating_point(cfg.design, cfg.process, Temperature::from_celsius(t_c), vdd);
      out << (op_json ? render(operating_point_json(p)) : operating_point_text(p));
      return kExitOk;
    }

    if (st->parsed()) {
      check_format(format);
      const double vdd = st_vdd.value_or(a.vdd);
      const double lo = st_tmin.value_or(a.t_min);
      const double hi = st_tmax.value_or(a.t_max);
      const double step = st_step.value_or(a.t_step);
      if (!(vdd > 0.0)) throw UsageError{"--vdd must be > 0"};
      if (!(lo < hi)) throw UsageError{"--tmin must be < --tmax"};
      if (!(step > 0.0)) throw UsageError{"--step must be > 0"};
      if (st_no_comp) cfg.design.compensation_enabled = false;
      if (st_simple) cfg.design.cascode = false;
      try {
        const SweepResult r = sweep_temperature(cfg.design, cfg.process, vdd, lo, hi, step, threads);
        write_output(format == "csv" ? temperature_csv(r, a.t_nominal)
                                     : render(temperature_json(r, a.t_nominal)),
                     out_path, out);
      } catch (const SweepError& e) {
        report_sweep_failures(e, "temp_c", err);
        return kExitSolver;
      }
      return kExitOk;
    }

    if (sv->parsed()) {
      check_format(format);
      const double t_c = sv_temp.value_or(a.t_nominal);
      const double lo = sv_vmin.value_or(a.v_min);
      const double hi = sv_vmax.value_or(a.v_max);
      const double step = sv_step.value_or(a.v_step);
      if (!(lo > 0.0)) throw UsageError{"--vmin must be > 0"};
      if (!(lo < hi)) throw UsageError{"--vmin must be < --vmax"};
      if (!(step > 0.0)) throw UsageError{"--step must be > 0"};
      if (!(t_c > -constants::celsius_offset)) throw UsageError{"--temp must be above absolute zero"};
      if (sv_no_comp) cfg.design.compensation_enabled = false;
      if (sv_simple) cfg.design.cascode = false;
      try {
        const SweepResult r = sweep_supply(cfg.design, cfg.process, t_c, lo, hi, step, threads);
        const double psrr =
            psrr_dc(cfg.design, cfg.process, t_c, cfg.design.vdd_nominal, a.psrr_delta);
        write_output(format == "csv" ? supply_csv(r, psrr) : render(supply_json(r, psrr)), out_path,
                     out);
      } catch (const SweepError& e) {
        report_sweep_failures(e, "vdd_v", err);
        return kExitSolver;
      }
      return kExitOk;
    }

    if (mc->parsed()) {
      check_format(format);
      const long long n = mc_samples.value_or(a.mc_samples);
      if (n < 1) throw UsageError{"--samples must be >= 1"};
      const std::uint64_t seed = mc_seed.value_or(a.seed);
      const McResult r = monte_carlo(cfg.design, cfg.process, a, static_cast<std::size_t>(n), seed,
                                     threads);
      write_output(format == "csv" ? mc_csv(r) : render(mc_json(r)), out_path, out);
      if (r.failures == r.n_samples) {
        err << "error: all " << r.n_samples << " samples failed; first: "
            << r.per_sample.front().error << "\n";
        return kExitSolver;
      }
      return kExitOk;
    }

    if (cal->parsed() || opt->parsed()) {
      if (budget < 1) throw UsageError{"--budget must be >= 1"};
      TargetSet targets;
      SearchSpace space;
      if (cal->parsed()) {
        targets = cal_targets == "builtin" ? builtin_targets()
                                           : parse_target_set(load_json_file(cal_targets));
        space = cal_space.empty() ? builtin_search_space(cfg.design, cfg.process)
                                  : parse_search_spec(load_json_file(cal_space)).space;
      } else {
        const SearchSpec spec = parse_search_spec(load_json_file(opt_space));
        space = spec.space;
        targets = !opt_targets.empty() ? parse_target_set(load_json_file(opt_targets))
                                       : spec.targets.value_or(default_optimize_targets());
      }
      const MinimizeResult r = minimize(space, cfg.process, cfg.design, targets, budget, a);
      RunConfig result = cfg;
      result.design = r.design;
      result.process = r.params;
      write_output(render(to_json(result)), out_path, out);
      out << target_table(r.report);
      out << "evaluations = " << r.evaluations << (r.budget_exhausted ? " (budget exhausted)" : "")
          << "\n";
      if (!r.report.all_satisfied()) {
        err << "calibration unsatisfied: at least one target misses its tolerance\n";
        return kExitUnsatisfied;
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.message << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_numerical() && e.code() != ErrorCode::DegenerateRange ? kExitSolver : kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace vreflab
