#pragma once

// Derivative-free calibration and design optimization.
//
// Candidates live in a unit box: each searched parameter is normalized to
// [0, 1] by its bounds (optionally on a log scale) and every trial point is
// clipped back into the box before evaluation. The search is a Nelder-Mead
// simplex that restarts around the incumbent at 10% scale when it stalls.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "vreflab/analyses.hpp"
#include "vreflab/circuit_blocks.hpp"
#include "vreflab/device_physics.hpp"
#include "vreflab/error.hpp"

namespace vreflab {

// ---------------------------------------------------------------------------
// Generic bounded simplex search.

struct NelderMeadOptions {
  double initial_step = 0.1;   // simplex edge in normalized units
  double restart_scale = 0.1;  // edge used when reinitializing around the best point
  double f_tol = 1e-12;        // relative spread of simplex values that counts as a stall
  double x_tol = 1e-10;        // simplex diameter that counts as a stall
  int max_idle_restarts = 3;   // consecutive restarts without improvement before stopping
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int restarts = 0;
  bool budget_exhausted = false;
  std::vector<double> best_history;  // running best after every evaluation
};

/// Minimizes fn over [0,1]^d starting from x0 (which is evaluated first).
/// At most `budget` evaluations; the returned point is never worse than x0.
inline NelderMeadResult nelder_mead_unit_box(
    const std::function<double(const std::vector<double>&)>& fn, std::vector<double> x0,
    int budget, const NelderMeadOptions& opt = {}) {
  if (budget < 1) fail(ErrorCode::InvalidArgument, "budget must be >= 1");
  const std::size_t d = x0.size();
  for (double& v : x0) v = std::clamp(v, 0.0, 1.0);

  NelderMeadResult res;
  auto eval = [&](std::vector<double> x) -> std::optional<double> {
    if (res.evaluations >= budget) {
      res.budget_exhausted = true;
      return std::nullopt;
    }
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    double f = fn(x);
    if (std::isnan(f)) f = std::numeric_limits<double>::infinity();
    ++res.evaluations;
    if (f < res.f) {  // strict: the first point found wins ties
      res.f = f;
      res.x = x;
    }
    res.best_history.push_back(res.f);
    return f;
  };

  res.x = x0;
  if (!eval(x0)) return res;
  if (d == 0) return res;

  struct Vertex {
    std::vector<double> x;
    double f;
  };

  // Builds a simplex around `center`; steps that would leave the box are
  // taken in the opposite direction.
  auto build_simplex = [&](const std::vector<double>& center, double fc,
                           double step) -> std::optional<std::vector<Vertex>> {
    std::vector<Vertex> s{{center, fc}};
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<double> x = center;
      x[k] = x[k] + step <= 1.0 ? x[k] + step : x[k] - step;
      x[k] = std::clamp(x[k], 0.0, 1.0);
      const auto f = eval(x);
      if (!f) return std::nullopt;
      s.push_back({x, *f});
    }
    return s;
  };

  auto clipped = [](std::vector<double> x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return x;
  };

  double step = opt.initial_step;
  int idle_restarts = 0;
  while (true) {
    const double best_before = res.f;
    auto built = build_simplex(res.x, res.f, step);
    if (!built) return res;
    std::vector<Vertex> s = std::move(*built);

    while (true) {
      std::stable_sort(s.begin(), s.end(),
                       [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
      const double fb = s.front().f;
      const double fw = s.back().f;
      double diameter = 0.0;
      for (std::size_t i = 1; i <= d; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
          diameter = std::max(diameter, std::abs(s[i].x[k] - s[0].x[k]));
        }
      }
      const bool flat = std::isfinite(fw) && fw - fb <= opt.f_tol * std::max(1.0, std::abs(fb));
      if (flat || diameter <= opt.x_tol) break;

      std::vector<double> centroid(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < d; ++k) centroid[k] += s[i].x[k] / static_cast<double>(d);
      }
      auto along = [&](double coef) {
        std::vector<double> x(d);
        for (std::size_t k = 0; k < d; ++k) x[k] = centroid[k] + coef * (s[d].x[k] - centroid[k]);
        return clipped(x);
      };

      const auto xr = along(-1.0);
      const auto fr = eval(xr);
      if (!fr) return res;
      if (*fr < s[0].f) {
        const auto xe = along(-2.0);
        const auto fe = eval(xe);
        if (!fe) return res;
        s[d] = *fe < *fr ? Vertex{xe, *fe} : Vertex{xr, *fr};
        continue;
      }
      if (*fr < s[d - 1].f) {
        s[d] = {xr, *fr};
        continue;
      }
      const bool outside = *fr < s[d].f;
      const auto xc = along(outside ? -0.5 : 0.5);
      const auto fc = eval(xc);
      if (!fc) return res;
      if (*fc < (outside ? *fr : s[d].f)) {
        s[d] = {xc, *fc};
        continue;
      }
      // Shrink towards the best vertex.
      for (std::size_t i = 1; i <= d; ++i) {
        for (std::size_t k = 0; k < d; ++k) s[i].x[k] = s[0].x[k] + 0.5 * (s[i].x[k] - s[0].x[k]);
        const auto f = eval(s[i].x);
        if (!f) return res;
        s[i].f = *f;
      }
    }

    // Stalled: restart around the incumbent.
    idle_restarts = res.f < best_before ? 0 : idle_restarts + 1;
    if (idle_restarts >= opt.max_idle_restarts) return res;
    ++res.restarts;
    step = opt.restart_scale;
  }
}

// ---------------------------------------------------------------------------
// Targets and metric lookup.

enum class TargetMode { Equal, AtLeast, AtMost, Minimize };

inline std::string to_string(TargetMode m) {
  switch (m) {
    case TargetMode::Equal: return "equal";
    case TargetMode::AtLeast: return "at_least";
    case TargetMode::AtMost: return "at_most";
    case TargetMode::Minimize: return "minimize";
  }
  return "equal";
}

inline std::optional<TargetMode> parse_target_mode(const std::string& s) {
  if (s == "equal") return TargetMode::Equal;
  if (s == "at_least") return TargetMode::AtLeast;
  if (s == "at_most") return TargetMode::AtMost;
  if (s == "minimize") return TargetMode::Minimize;
  return std::nullopt;
}

/// One term of the objective. For Equal the term is
/// weight * ((m - value) / |value|)^2 and the target is met when
/// |m - value| <= tolerance * |value|. AtLeast / AtMost only penalize the
/// violating side. Minimize uses weight * (m / value)^2 with value as the scale
/// and is met when m <= value * (1 + tolerance).
struct Target {
  std::string metric;
  double value = 0.0;
  double weight = 1.0;
  double tolerance = 0.1;
  TargetMode mode = TargetMode::Equal;
};

struct TargetSet {
  std::vector<Target> targets;
};

inline std::string validation_error(const TargetSet& ts) {
  if (ts.targets.empty()) return "target set must contain at least one target";
  for (const auto& t : ts.targets) {
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) return "target '" + t.metric + "': weight must be > 0";
    if (!(t.value != 0.0) || !std::isfinite(t.value)) return "target '" + t.metric + "': value must be finite and non-zero";
    if (!(t.tolerance >= 0.0)) return "target '" + t.metric + "': tolerance must be >= 0";
  }
  return {};
}

enum class MetricVariant { Nominal, NoCompensation, SimpleMirror };

struct MetricName {
  std::string base;
  MetricVariant variant = MetricVariant::Nominal;
  bool monte_carlo = false;
  double supply = 0.0;  // for power_at:<V> and i_quiescent_at:<V>
};

inline const std::vector<std::string>& scalar_metric_names() {
  static const std::vector<std::string> names{
      "tc_ppm",     "v_ref_nominal", "v_ref_min",  "v_ref_max",   "t_at_min",
      "t_at_max",   "max_deviation", "line_sensitivity", "psrr_dc_db", "slope_ptat",
      "slope_ctat", "slope_comp",    "slope_net",  "slope_net_abs"};
  return names;
}

inline const std::vector<std::string>& mc_metric_names() {
  static const std::vector<std::string> names{
      "mc_v_ref_mean", "mc_v_ref_sigma", "mc_tc_mean", "mc_tc_sigma",
      "mc_ls_mean",    "mc_ls_sigma",    "mc_ls_min",  "mc_tc_min", "mc_failures"};
  return names;
}

/// Parses names such as "tc_ppm", "tc_ppm_no_comp", "line_sensitivity_simple",
/// "power_at:0.5" or "mc_tc_mean".
inline std::optional<MetricName> parse_metric_name(const std::string& name) {
  MetricName m;
  if (std::find(mc_metric_names().begin(), mc_metric_names().end(), name) !=
      mc_metric_names().end()) {
    m.base = name;
    m.monte_carlo = true;
    return m;
  }
  std::string base = name;
  auto strip = [&](const std::string& suffix, MetricVariant v) {
    if (base.size() > suffix.size() &&
        base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
      base.resize(base.size() - suffix.size());
      m.variant = v;
      return true;
    }
    return false;
  };
  if (!strip("_no_comp", MetricVariant::NoCompensation)) strip("_simple", MetricVariant::SimpleMirror);

  for (const std::string prefix : {"power_at:", "i_quiescent_at:"}) {
    if (base.rfind(prefix, 0) == 0) {
      const std::string num = base.substr(prefix.size());
      char* end = nullptr;
      const double v = std::strtod(num.c_str(), &end);
      if (num.empty() || *end != '\0' || !(v > 0.0)) return std::nullopt;
      m.base = prefix.substr(0, prefix.size() - 1);
      m.supply = v;
      return m;
    }
  }
  if (std::find(scalar_metric_names().begin(), scalar_metric_names().end(), base) ==
      scalar_metric_names().end()) {
    return std::nullopt;
  }
  m.base = base;
  return m;
}

inline double scalar_metric(const Metrics& m, const std::string& base) {
  if (base == "tc_ppm") return m.tc_ppm;
  if (base == "v_ref_nominal") return m.v_ref_nominal;
  if (base == "v_ref_min") return m.v_ref_min;
  if (base == "v_ref_max") return m.v_ref_max;
  if (base == "t_at_min") return m.t_at_min;
  if (base == "t_at_max") return m.t_at_max;
  if (base == "max_deviation") return m.max_deviation;
  if (base == "line_sensitivity") return m.line_sensitivity;
  if (base == "psrr_dc_db") return m.psrr_dc_db;
  if (base == "slope_ptat") return m.slopes.ptat;
  if (base == "slope_ctat") return m.slopes.ctat;
  if (base == "slope_comp") return m.slopes.comp;
  if (base == "slope_net") return m.slopes.net;
  if (base == "slope_net_abs") return std::abs(m.slopes.net);
  fail(ErrorCode::InvalidArgument, "unknown metric '" + base + "'");
}

/// Lazily evaluates whatever the requested metrics need for one candidate.
class MetricEvaluator {
 public:
  MetricEvaluator(const CircuitDesign& design, const ProcessParams& p, const AnalysisSettings& s,
                  std::size_t threads)
      : design_(design), params_(p), settings_(s), threads_(threads) {}

  /// Returns the metric, or nullopt when the underlying analysis failed. The
  /// number of failed operating points is accumulated in failures().
  std::optional<double> value(const MetricName& name) {
    if (name.monte_carlo) return mc_value(name.base);
    const CircuitDesign d = variant_design(name.variant);
    if (name.base == "power_at" || name.base == "i_quiescent_at") {
      const auto op = point(d, name.variant, name.supply);
      if (!op) return std::nullopt;
      return name.base == "power_at" ? op->power : op->i_quiescent;
    }
    const Metrics* m = metrics(name.variant);
    if (m == nullptr) return std::nullopt;
    return scalar_metric(*m, name.base);
  }

  std::size_t failures() const noexcept { return failures_; }

  const Metrics* nominal_metrics() { return metrics(MetricVariant::Nominal); }

 private:
  CircuitDesign variant_design(MetricVariant v) const {
    CircuitDesign d = design_;
    if (v == MetricVariant::NoCompensation) d.compensation_enabled = false;
    if (v == MetricVariant::SimpleMirror) d.cascode = false;
    return d;
  }

  void record_failure(const Error& e) {
    if (const auto* se = dynamic_cast<const SweepError*>(&e)) {
      failures_ += se->failures().size();
    } else {
      failures_ += 1;
    }
  }

  const Metrics* metrics(MetricVariant v) {
    auto it = metrics_.find(v);
    if (it == metrics_.end()) {
      std::optional<Metrics> m;
      try {
        m = evaluate_metrics(variant_design(v), params_, settings_, threads_);
      } catch (const Error& e) {
        record_failure(e);
      }
      it = metrics_.emplace(v, std::move(m)).first;
    }
    return it->second ? &*it->second : nullptr;
  }

  std::optional<OperatingPoint> point(const CircuitDesign& d, MetricVariant v, double vdd) {
    const auto key = std::make_pair(v, vdd);
    auto it = points_.find(key);
    if (it == points_.end()) {
      std::optional<OperatingPoint> op;
      try {
        op = solve_operating_point(d, params_, Temperature::from_celsius(settings_.t_nominal), vdd);
      } catch (const Error& e) {
        record_failure(e);
      }
      it = points_.emplace(key, op).first;
    }
    return it->second;
  }

  std::optional<double> mc_value(const std::string& base) {
    if (!mc_) {
      mc_ = monte_carlo(design_, params_, settings_,
                        static_cast<std::size_t>(std::max(1, settings_.mc_samples)), settings_.seed,
                        threads_);
      failures_ += mc_->failures;
    }
    const McSummary& s = mc_->summary;
    if (base == "mc_failures") return static_cast<double>(mc_->failures);
    const SummaryStats* st = nullptr;
    bool sigma = false;
    bool minimum = false;
    if (base == "mc_v_ref_mean") st = &s.v_ref_nominal;
    if (base == "mc_v_ref_sigma") st = &s.v_ref_nominal, sigma = true;
    if (base == "mc_tc_mean") st = &s.tc_ppm;
    if (base == "mc_tc_sigma") st = &s.tc_ppm, sigma = true;
    if (base == "mc_tc_min") st = &s.tc_ppm, minimum = true;
    if (base == "mc_ls_mean") st = &s.line_sensitivity;
    if (base == "mc_ls_sigma") st = &s.line_sensitivity, sigma = true;
    if (base == "mc_ls_min") st = &s.line_sensitivity, minimum = true;
    if (st == nullptr || st->count == 0) return std::nullopt;
    return sigma ? st->sigma : (minimum ? st->min : st->mean);
  }

  CircuitDesign design_;
  ProcessParams params_;
  AnalysisSettings settings_;
  std::size_t threads_;
  std::size_t failures_ = 0;
  std::map<MetricVariant, std::optional<Metrics>> metrics_;
  std::map<std::pair<MetricVariant, double>, std::optional<OperatingPoint>> points_;
  std::optional<McResult> mc_;
};

// ---------------------------------------------------------------------------
// Objective.

inline constexpr double kFailurePenalty = 1e6;

struct TargetOutcome {
  Target target;
  double achieved = std::numeric_limits<double>::quiet_NaN();
  double term = 0.0;
  bool satisfied = false;
};

struct ObjectiveReport {
  double value = 0.0;
  std::size_t failures = 0;
  std::vector<TargetOutcome> outcomes;

  bool all_satisfied() const {
    return failures == 0 &&
           std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.satisfied; });
  }
};

inline TargetOutcome score_target(const Target& t, double m) {
  TargetOutcome o{t, m, 0.0, false};
  const double scale = std::abs(t.value);
  switch (t.mode) {
    case TargetMode::Equal: {
      const double e = (m - t.value) / scale;
      o.term = t.weight * e * e;
      o.satisfied = std::abs(m - t.value) <= t.tolerance * scale;
      break;
    }
    case TargetMode::AtLeast: {
      const double e = std::max(0.0, t.value - m) / scale;
      o.term = t.weight * e * e;
      o.satisfied = m >= t.value - t.tolerance * scale;
      break;
    }
    case TargetMode::AtMost: {
      const double e = std::max(0.0, m - t.value) / scale;
      o.term = t.weight * e * e;
      o.satisfied = m <= t.value + t.tolerance * scale;
      break;
    }
    case TargetMode::Minimize: {
      const double e = m / t.value;
      o.term = t.weight * e * e;
      o.satisfied = m <= t.value * (1.0 + t.tolerance);
      break;
    }
  }
  if (!std::isfinite(o.term)) {
    o.term = kFailurePenalty;
    o.satisfied = false;
  }
  return o;
}

/// Weighted sum of squared relative errors plus kFailurePenalty per failed
/// operating point. Always finite.
inline ObjectiveReport evaluate_objective(const CircuitDesign& design, const ProcessParams& p,
                                          const TargetSet& targets,
                                          const AnalysisSettings& settings = {},
                                          std::size_t threads = 1) {
  ObjectiveReport r;
  std::vector<MetricName> names;
  for (const auto& t : targets.targets) {
    const auto n = parse_metric_name(t.metric);
    if (!n) fail(ErrorCode::InvalidArgument, "unknown metric '" + t.metric + "'");
    names.push_back(*n);
  }
  const std::string bad = validation_error(design).empty() ? validation_error(p)
                                                           : validation_error(design);
  if (!bad.empty()) {
    r.failures = 1;
    for (const auto& t : targets.targets) r.outcomes.push_back({t});
    r.value = kFailurePenalty;
    return r;
  }
  MetricEvaluator ev(design, p, settings, threads);
  for (std::size_t i = 0; i < targets.targets.size(); ++i) {
    const auto m = ev.value(names[i]);
    if (!m) {
      r.outcomes.push_back({targets.targets[i]});
      continue;
    }
    r.outcomes.push_back(score_target(targets.targets[i], *m));
    r.value += r.outcomes.back().term;
  }
  r.failures = ev.failures();
  r.value += kFailurePenalty * static_cast<double>(r.failures);
  return r;
}

inline double objective(const CircuitDesign& design, const ProcessParams& p,
                        const TargetSet& targets, const AnalysisSettings& settings = {}) {
  return evaluate_objective(design, p, targets, settings).value;
}

// ---------------------------------------------------------------------------
// Search space.

struct ParamBound {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
};

struct SearchSpace {
  std::vector<ParamBound> params;
};

namespace optimize_detail {

struct Accessor {
  std::function<double(const CircuitDesign&, const ProcessParams&)> get;
  std::function<void(CircuitDesign&, ProcessParams&, double)> set;
};

inline const std::map<std::string, Accessor>& accessors() {
  using D = CircuitDesign;
  using P = ProcessParams;
#define VREFLAB_DESIGN_FIELD(NAME, EXPR)                                         \
  {                                                                              \
    NAME, Accessor {                                                             \
      [](const D& d, const P&) { return d.EXPR; }, [](D& d, P&, double v) { d.EXPR = v; } \
    }                                                                            \
  }
#define VREFLAB_PROCESS_FIELD(NAME, EXPR)                                        \
  {                                                                              \
    NAME, Accessor {                                                             \
      [](const D&, const P& p) { return p.EXPR; }, [](D&, P& p, double v) { p.EXPR = v; } \
    }                                                                            \
  }
  static const std::map<std::string, Accessor> table{
      VREFLAB_DESIGN_FIELD("r1", r1),
      VREFLAB_DESIGN_FIELD("r2", r2),
      VREFLAB_DESIGN_FIELD("r3", r3),
      VREFLAB_DESIGN_FIELD("np", np),
      VREFLAB_DESIGN_FIELD("nc", nc),
      VREFLAB_DESIGN_FIELD("alpha_p", alpha_p),
      VREFLAB_DESIGN_FIELD("alpha_c", alpha_c),
      VREFLAB_DESIGN_FIELD("m0_w_over_l", m0_geom.w_over_l),
      VREFLAB_DESIGN_FIELD("m7_w_over_l", m7_geom.w_over_l),
      VREFLAB_DESIGN_FIELD("m1_w_over_l", m1_geom.w_over_l),
      VREFLAB_DESIGN_FIELD("m0_vth_offset", m0_geom.vth_offset),
      VREFLAB_DESIGN_FIELD("m7_vth_offset", m7_geom.vth_offset),
      VREFLAB_PROCESS_FIELD("mu_cox_ref", mu_cox_ref),
      VREFLAB_PROCESS_FIELD("mobility_exponent", mobility_exponent),
      VREFLAB_PROCESS_FIELD("vth0_ref", vth0_ref),
      VREFLAB_PROCESS_FIELD("slope_factor", slope_factor),
      VREFLAB_PROCESS_FIELD("swing_coeff", swing_coeff),
      VREFLAB_PROCESS_FIELD("lambda_simple", lambda_simple),
      VREFLAB_PROCESS_FIELD("lambda_cascode", lambda_cascode),
      VREFLAB_PROCESS_FIELD("sigma_vth0_ref", mc_sigmas.vth0_ref),
      VREFLAB_PROCESS_FIELD("sigma_mu_cox_ref", mc_sigmas.mu_cox_ref),
      VREFLAB_PROCESS_FIELD("sigma_resistors", mc_sigmas.resistors),
      VREFLAB_PROCESS_FIELD("sigma_mirror_ratios", mc_sigmas.mirror_ratios),
  };
#undef VREFLAB_DESIGN_FIELD
#undef VREFLAB_PROCESS_FIELD
  return table;
}

}  // namespace optimize_detail

inline std::vector<std::string> searchable_parameters() {
  std::vector<std::string> out;
  for (const auto& [name, acc] : optimize_detail::accessors()) out.push_back(name);
  return out;
}

inline double get_parameter(const std::string& name, const CircuitDesign& d, const ProcessParams& p) {
  const auto& table = optimize_detail::accessors();
  const auto it = table.find(name);
  if (it == table.end()) fail(ErrorCode::InvalidArgument, "unknown search parameter '" + name + "'");
  return it->second.get(d, p);
}

inline void set_parameter(const std::string& name, CircuitDesign& d, ProcessParams& p, double v) {
  const auto& table = optimize_detail::accessors();
  const auto it = table.find(name);
  if (it == table.end()) fail(ErrorCode::InvalidArgument, "unknown search parameter '" + name + "'");
  it->second.set(d, p, v);
}

/// Empty when valid, otherwise the offending parameter and reason.
inline std::string validation_error(const SearchSpace& space) {
  std::vector<std::string> seen;
  for (const auto& b : space.params) {
    if (!optimize_detail::accessors().contains(b.name)) return "unknown search parameter '" + b.name + "'";
    if (std::find(seen.begin(), seen.end(), b.name) != seen.end()) return "parameter '" + b.name + "' listed twice";
    seen.push_back(b.name);
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
      return "parameter '" + b.name + "': bounds require lo < hi";
    }
    if (b.log_scale && !(b.lo > 0.0)) return "parameter '" + b.name + "': log scale requires lo > 0";
  }
  return {};
}

inline double to_unit(const ParamBound& b, double v) {
  if (b.log_scale) return (std::log(v) - std::log(b.lo)) / (std::log(b.hi) - std::log(b.lo));
  return (v - b.lo) / (b.hi - b.lo);
}

inline double from_unit(const ParamBound& b, double z) {
  z = std::clamp(z, 0.0, 1.0);
  if (b.log_scale) return std::exp(std::log(b.lo) + z * (std::log(b.hi) - std::log(b.lo)));
  return b.lo + z * (b.hi - b.lo);
}

// ---------------------------------------------------------------------------
// Minimize / calibrate.

struct MinimizeResult {
  CircuitDesign design;
  ProcessParams params;
  ObjectiveReport report;
  std::optional<Metrics> metrics;
  int evaluations = 0;
  int restarts = 0;
  bool budget_exhausted = false;
  std::vector<double> best_history;
};

inline MinimizeResult minimize(const SearchSpace& space, const ProcessParams& p,
                               const CircuitDesign& design0, const TargetSet& targets, int budget,
                               const AnalysisSettings& settings = {},
                               const NelderMeadOptions& options = {}) {
  if (const auto bad = validation_error(space); !bad.empty()) fail(ErrorCode::InvalidArgument, bad);
  if (const auto bad = validation_error(targets); !bad.empty()) fail(ErrorCode::InvalidArgument, bad);
  if (budget < 1) fail(ErrorCode::InvalidArgument, "budget must be >= 1");

  std::vector<double> z0;
  for (const auto& b : space.params) {
    const double v = get_parameter(b.name, design0, p);
    if (!(v >= b.lo && v <= b.hi)) {
      fail(ErrorCode::InvalidArgument, "start value of '" + b.name + "' lies outside its bounds");
    }
    z0.push_back(to_unit(b, v));
  }

  auto materialize = [&](const std::vector<double>& z) {
    CircuitDesign d = design0;
    ProcessParams pp = p;
    for (std::size_t k = 0; k < space.params.size(); ++k) {
      set_parameter(space.params[k].name, d, pp, from_unit(space.params[k], z[k]));
    }
    return std::make_pair(d, pp);
  };

  // The start point is evaluated with its exact values rather than the
  // round-tripped unit coordinates.
  bool first = true;
  auto fn = [&](const std::vector<double>& z) {
    if (first) {
      first = false;
      return objective(design0, p, targets, settings);
    }
    const auto [d, pp] = materialize(z);
    return objective(d, pp, targets, settings);
  };
  const NelderMeadResult nm = nelder_mead_unit_box(fn, z0, budget, options);

  MinimizeResult out;
  if (nm.x == z0 || nm.evaluations <= 1 || nm.best_history.front() == nm.f) {
    out.design = design0;
    out.params = p;
  } else {
    std::tie(out.design, out.params) = materialize(nm.x);
  }
  out.report = evaluate_objective(out.design, out.params, targets, settings);
  MetricEvaluator ev(out.design, out.params, settings, 0);
  if (const Metrics* m = ev.nominal_metrics()) out.metrics = *m;
  out.evaluations = nm.evaluations;
  out.restarts = nm.restarts;
  out.budget_exhausted = nm.budget_exhausted;
  out.best_history = nm.best_history;
  return out;
}

/// Measured figures of merit used as the built-in calibration targets. Tolerances are
/// relative to |value|.
inline TargetSet builtin_targets() {
  TargetSet t;
  auto add = [&](std::string metric, double value, double weight, double tol,
                 TargetMode mode = TargetMode::Equal) {
    t.targets.push_back({std::move(metric), value, weight, tol, mode});
  };
  add("v_ref_nominal", 0.2055, 10.0, 0.0048);
  add("tc_ppm", 16.28, 1.0, 0.2);
  add("max_deviation", 0.57e-3, 1.0, 0.4);
  add("tc_ppm_no_comp", 137.0, 1.0, 0.27, TargetMode::AtLeast);
  add("max_deviation_no_comp", 4.69e-3, 1.0, 0.25, TargetMode::AtLeast);
  add("line_sensitivity", 1.65, 1.0, 0.09);
  add("power_at:0.5", 0.67e-6, 1.0, 0.15);
  add("power_at:3.3", 4.3e-6, 1.0, 0.2);
  add("slope_ptat", 0.731e-9, 1.0, 0.2);
  add("slope_ctat", -0.549e-9, 1.0, 0.2);
  add("slope_comp", 0.194e-9, 1.0, 0.2);
  add("slope_net_abs", 11e-12, 0.1, 1.7, TargetMode::AtMost);
  add("psrr_dc_db", -50.0, 1.0, 0.03);
  add("psrr_dc_db_simple", -30.0, 1.0, 0.1);
  // Location of the v_ref minimum, +-15 degC. Lightly weighted: the grid
  // argmin is piecewise constant, so it only steers between flat regions.
  add("t_at_min", 8.0, 0.05, 1.875);
  return t;
}

/// Bounds around a starting point for the built-in calibration.
inline SearchSpace builtin_search_space(const CircuitDesign& d, const ProcessParams& p) {
  SearchSpace s;
  auto rel = [&](std::string name, double v, double lo_factor, double hi_factor) {
    s.params.push_back({std::move(name), v * lo_factor, v * hi_factor, true});
  };
  auto abs = [&](std::string name, double v, double half_width) {
    s.params.push_back({std::move(name), v - half_width, v + half_width, false});
  };
  rel("r1", d.r1, 0.5, 2.0);
  rel("r2", d.r2, 0.5, 2.0);
  rel("r3", d.r3, 0.5, 2.0);
  rel("alpha_p", d.alpha_p, 0.5, 2.0);
  rel("alpha_c", d.alpha_c, 0.5, 2.0);
  rel("m0_w_over_l", d.m0_geom.w_over_l, 0.25, 4.0);
  rel("m7_w_over_l", d.m7_geom.w_over_l, 0.05, 20.0);
  abs("m7_vth_offset", d.m7_geom.vth_offset, 0.1);
  s.params.push_back({"swing_coeff", std::max(1.1, p.swing_coeff - 1.0), p.swing_coeff + 1.0, false});
  rel("lambda_cascode", p.lambda_cascode, 0.5, 2.0);
  rel("lambda_simple", p.lambda_simple, 0.5, 2.0);
  abs("mobility_exponent", p.mobility_exponent, 0.5);
  return s;
}

struct CalibrationResult {
  MinimizeResult result;
  bool satisfied = false;
};

inline CalibrationResult calibrate(const SearchSpace& space, const ProcessParams& p0,
                                   const CircuitDesign& design0, const TargetSet& targets,
                                   int budget, const AnalysisSettings& settings = {}) {
  CalibrationResult c;
  c.result = minimize(space, p0, design0, targets, budget, settings);
  c.satisfied = c.result.report.all_satisfied();
  return c;
}

inline CalibrationResult calibrate_builtin(const ProcessParams& p0, const CircuitDesign& design0,
                                            int budget, const AnalysisSettings& settings = {}) {
  return calibrate(builtin_search_space(design0, p0), p0, design0, builtin_targets(), budget, settings);
}

}  // namespace vreflab
