#pragma once

// Renderings of analysis results for people and for scripts. Numbers use a
// fixed printf format so output is byte-stable from run to run.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "vreflab/analyses.hpp"
#include "vreflab/optimize.hpp"

namespace vreflab {

/// Shortest-ish stable rendering: ten significant digits.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// JSON has no infinities or NaN; they become null.
inline nlohmann::json json_num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

namespace report_detail {

inline std::string csv_row(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += fmt_num(values[i]);
  }
  return s + "\n";
}

inline std::string csv_header(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) s += ',';
    s += cols[i];
  }
  return s + "\n";
}

struct SummaryEntry {
  std::string key;
  double value;
};

inline std::string csv_summary(const std::vector<SummaryEntry>& entries) {
  std::string s;
  for (const auto& e : entries) s += "# " + e.key + "=" + fmt_num(e.value) + "\n";
  return s;
}

inline nlohmann::json json_summary(const std::vector<SummaryEntry>& entries) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : entries) j[e.key] = json_num(e.value);
  return j;
}

}  // namespace report_detail

// ---------------------------------------------------------------------------
// Operating point.

inline std::vector<std::pair<std::string, double>> operating_point_fields(const OperatingPoint& op) {
  return {{"temp_c", op.t.celsius()},         {"vdd_v", op.vdd},
          {"i_ptat_a", op.i_ptat},            {"i_ctat_a", op.i_ctat},
          {"i_ptat_out_a", op.i_ptat_out},    {"i_ctat_out_a", op.i_ctat_out},
          {"i_comp_a", op.i_comp},            {"i_ref_a", op.i_ref},
          {"v_ctat_v", op.v_ctat},            {"v_ref_v", op.v_ref},
          {"i_quiescent_a", op.i_quiescent},  {"power_w", op.power}};
}

inline std::string operating_point_text(const OperatingPoint& op) {
  std::string s;
  for (const auto& [k, v] : operating_point_fields(op)) s += k + " = " + fmt_num(v) + "\n";
  return s;
}

inline nlohmann::json operating_point_json(const OperatingPoint& op) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : operating_point_fields(op)) j[k] = json_num(v);
  return j;
}

// ---------------------------------------------------------------------------
// Temperature sweep.

inline const std::vector<std::string>& temperature_columns() {
  static const std::vector<std::string> cols{"temp_c",   "v_ref_v", "i_ptat_a", "i_ctat_a",
                                             "i_comp_a", "i_ref_a", "power_w"};
  return cols;
}

inline std::vector<report_detail::SummaryEntry> temperature_summary(const SweepResult& sweep,
                                                                    double t_nominal) {
  const auto v = sweep.v_ref();
  const TemperatureStats ts = temperature_stats(sweep.axis, v, t_nominal);
  const BranchSlopes sl = branch_slopes(sweep);
  return {{"tc_ppm_per_c", ts.tc_ppm},
          {"v_ref_nominal_v", ts.v_ref_nominal},
          {"v_ref_min_v", ts.v_ref_min},
          {"t_at_min_c", ts.t_at_min},
          {"v_ref_max_v", ts.v_ref_max},
          {"t_at_max_c", ts.t_at_max},
          {"max_deviation_v", ts.max_deviation},
          {"slope_ptat_a_per_c", sl.ptat},
          {"slope_ctat_a_per_c", sl.ctat},
          {"slope_comp_a_per_c", sl.comp},
          {"slope_net_a_per_c", sl.net}};
}

// Branch currents are output-referred, so i_ref = i_ptat + i_ctat - i_comp
// holds row by row.
inline std::vector<double> temperature_row(double t, const OperatingPoint& op) {
  return {t, op.v_ref, op.i_ptat_out, op.i_ctat_out, op.i_comp, op.i_ref, op.power};
}

inline std::string temperature_csv(const SweepResult& sweep, double t_nominal) {
  std::string s = report_detail::csv_header(temperature_columns());
  for (std::size_t i = 0; i < sweep.axis.size(); ++i) {
    s += report_detail::csv_row(temperature_row(sweep.axis[i], sweep.points[i]));
  }
  return s + report_detail::csv_summary(temperature_summary(sweep, t_nominal));
}

inline nlohmann::json columns_json(const std::vector<std::string>& cols,
                                   const std::vector<std::vector<double>>& rows) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(json_num(r[c]));
    j[cols[c]] = arr;
  }
  return j;
}

inline nlohmann::json temperature_json(const SweepResult& sweep, double t_nominal) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < sweep.axis.size(); ++i) {
    rows.push_back(temperature_row(sweep.axis[i], sweep.points[i]));
  }
  nlohmann::json j = columns_json(temperature_columns(), rows);
  j["summary"] = report_detail::json_summary(temperature_summary(sweep, t_nominal));
  return j;
}

// ---------------------------------------------------------------------------
// Supply sweep.

inline const std::vector<std::string>& supply_columns() {
  static const std::vector<std::string> cols{"vdd_v", "v_ref_v", "i_quiescent_a", "power_w"};
  return cols;
}

inline std::vector<double> supply_row(double vdd, const OperatingPoint& op) {
  return {vdd, op.v_ref, op.i_quiescent, op.power};
}

inline std::vector<report_detail::SummaryEntry> supply_summary(const SweepResult& sweep,
                                                               double psrr_db) {
  const auto v = sweep.v_ref();
  return {{"line_sensitivity_pct_per_v", line_sensitivity(sweep)},
          {"psrr_dc_db", psrr_db},
          {"v_ref_min_v", *std::min_element(v.begin(), v.end())},
          {"v_ref_max_v", *std::max_element(v.begin(), v.end())}};
}

inline std::string supply_csv(const SweepResult& sweep, double psrr_db) {
  std::string s = report_detail::csv_header(supply_columns());
  for (std::size_t i = 0; i < sweep.axis.size(); ++i) {
    s += report_detail::csv_row(supply_row(sweep.axis[i], sweep.points[i]));
  }
  return s + report_detail::csv_summary(supply_summary(sweep, psrr_db));
}

inline nlohmann::json supply_json(const SweepResult& sweep, double psrr_db) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < sweep.axis.size(); ++i) {
    rows.push_back(supply_row(sweep.axis[i], sweep.points[i]));
  }
  nlohmann::json j = columns_json(supply_columns(), rows);
  j["summary"] = report_detail::json_summary(supply_summary(sweep, psrr_db));
  return j;
}

// ---------------------------------------------------------------------------
// Monte Carlo.

inline const std::vector<std::string>& mc_columns() {
  static const std::vector<std::string> cols{"sample_id", "v_ref_v", "tc_ppm", "ls_pct_per_v"};
  return cols;
}

// Failed samples keep their row with NaN metrics so ids stay contiguous.
inline std::vector<double> mc_row(const McSample& s) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!s.ok) return {static_cast<double>(s.id), nan, nan, nan};
  return {static_cast<double>(s.id), s.metrics.v_ref_nominal, s.metrics.tc_ppm,
          s.metrics.line_sensitivity};
}

inline std::string mc_csv(const McResult& r) {
  std::string s = report_detail::csv_header(mc_columns());
  for (const auto& smp : r.per_sample) s += report_detail::csv_row(mc_row(smp));
  const McSummary& m = r.summary;
  auto line = [&](const char* stat, double a, double b, double c) {
    s += std::string("# ") + stat + "," + fmt_num(a) + "," + fmt_num(b) + "," + fmt_num(c) + "\n";
  };
  s += "# stat,v_ref_v,tc_ppm,ls_pct_per_v\n";
  line("mean", m.v_ref_nominal.mean, m.tc_ppm.mean, m.line_sensitivity.mean);
  line("sigma", m.v_ref_nominal.sigma, m.tc_ppm.sigma, m.line_sensitivity.sigma);
  line("min", m.v_ref_nominal.min, m.tc_ppm.min, m.line_sensitivity.min);
  line("max", m.v_ref_nominal.max, m.tc_ppm.max, m.line_sensitivity.max);
  s += "# samples=" + std::to_string(r.n_samples) + "\n";
  s += "# seed=" + std::to_string(r.seed) + "\n";
  s += "# failures=" + std::to_string(r.failures) + "\n";
  return s;
}

inline nlohmann::json stats_json(const SummaryStats& st) {
  return {{"mean", json_num(st.mean)},
          {"sigma", json_num(st.sigma)},
          {"min", json_num(st.min)},
          {"max", json_num(st.max)}};
}

inline nlohmann::json mc_json(const McResult& r) {
  std::vector<std::vector<double>> rows;
  for (const auto& smp : r.per_sample) rows.push_back(mc_row(smp));
  nlohmann::json j = columns_json(mc_columns(), rows);
  j["summary"] = {{"v_ref_v", stats_json(r.summary.v_ref_nominal)},
                  {"tc_ppm", stats_json(r.summary.tc_ppm)},
                  {"ls_pct_per_v", stats_json(r.summary.line_sensitivity)},
                  {"samples", r.n_samples},
                  {"seed", r.seed},
                  {"failures", r.failures}};
  return j;
}

// ---------------------------------------------------------------------------
// Calibration table.

inline std::string target_table(const ObjectiveReport& r) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-26s %-9s %16s %16s %9s  %s\n", "metric", "mode", "target",
                "achieved", "tol", "status");
  s += buf;
  for (const auto& o : r.outcomes) {
    std::snprintf(buf, sizeof buf, "%-26s %-9s %16s %16s %9s  %s\n", o.target.metric.c_str(),
                  to_string(o.target.mode).c_str(), fmt_num(o.target.value).c_str(),
                  fmt_num(o.achieved).c_str(), fmt_num(o.target.tolerance).c_str(),
                  o.satisfied ? "ok" : "MISS");
    s += buf;
  }
  s += "objective = " + fmt_num(r.value) + "\n";
  s += "failed_points = " + std::to_string(r.failures) + "\n";
  return s;
}

}  // namespace vreflab
