#pragma once

// Measurement suite. Sweeps over temperature or supply feed the figures of
// merit; Monte Carlo repeats them over perturbed inputs.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vreflab/circuit_blocks.hpp"
#include "vreflab/device_physics.hpp"
#include "vreflab/error.hpp"
#include "vreflab/parallel.hpp"
#include "vreflab/random.hpp"

namespace vreflab {

struct AnalysisSettings {
  double vdd = 1.0;  // supply for temperature sweeps
  double t_min = -40.0;
  double t_max = 130.0;
  double t_step = 1.0;
  double t_nominal = 27.0;
  double v_min = 0.5;
  double v_max = 3.3;
  double v_step = 0.05;
  double psrr_delta = 0.01;
  std::vector<double> power_supplies{0.5, 3.3};
  int mc_samples = 100;
  std::uint64_t seed = 42;

  friend bool operator==(const AnalysisSettings&, const AnalysisSettings&) = default;
};

enum class SweepKind { Temperature, Supply };

struct SweepMeta {
  SweepKind kind = SweepKind::Temperature;
  double fixed = 0.0;        // vdd for temperature sweeps, degC for supply sweeps
  double vdd_nominal = 1.0;  // supply where the mirrors are exact
  std::uint64_t design_hash = 0;
  std::uint64_t params_hash = 0;
};

struct SweepResult {
  std::vector<double> axis;  // degC or V, strictly increasing
  std::vector<OperatingPoint> points;
  SweepMeta meta;

  std::vector<double> v_ref() const {
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& op : points) v.push_back(op.v_ref);
    return v;
  }
};

struct SweepFailure {
  double axis_value = 0.0;
  ErrorCode code = ErrorCode::SolverDivergence;
  std::string message;
};

/// Raised when one or more grid points fail; carries every failing point.
class SweepError : public Error {
 public:
  explicit SweepError(std::vector<SweepFailure> failures)
      : Error(failures.front().code, summarize(failures)), failures_(std::move(failures)) {}

  const std::vector<SweepFailure>& failures() const noexcept { return failures_; }

 private:
  static std::string summarize(const std::vector<SweepFailure>& f) {
    return std::to_string(f.size()) + " grid point(s) failed; first at " +
           std::to_string(f.front().axis_value) + ": " + f.front().message;
  }

  std::vector<SweepFailure> failures_;
};

// ---------------------------------------------------------------------------
// Hashing of inputs, recorded in sweep metadata.

namespace analyses_detail {

class Fnv1a {
 public:
  Fnv1a& add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
    for (int k = 0; k < 8; ++k) {
      state_ ^= (bits >> (8 * k)) & 0xFFU;
      state_ *= 0x100000001B3ULL;
    }
    return *this;
  }
  Fnv1a& add(const DeviceGeometry& g) {
    return add(g.w_over_l).add(static_cast<double>(g.multiplier)).add(g.vth_offset);
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

}  // namespace analyses_detail

inline std::uint64_t design_hash(const CircuitDesign& d) {
  analyses_detail::Fnv1a h;
  h.add(d.r1).add(d.r2).add(d.r3).add(d.np).add(d.nc).add(d.alpha_p).add(d.alpha_c);
  h.add(d.m0_geom).add(d.m7_geom).add(d.m1_geom);
  h.add(d.cascode ? 1.0 : 0.0).add(d.compensation_enabled ? 1.0 : 0.0).add(d.vdd_nominal);
  return h.value();
}

inline std::uint64_t params_hash(const ProcessParams& p) {
  analyses_detail::Fnv1a h;
  h.add(p.mu_cox_ref).add(p.mobility_exponent).add(p.vth0_ref).add(p.vth_tempco);
  h.add(p.slope_factor).add(p.swing_coeff).add(p.t_ref).add(p.lambda_simple);
  h.add(p.lambda_cascode).add(p.resistor_tempco);
  h.add(p.mc_sigmas.vth0_ref).add(p.mc_sigmas.mu_cox_ref).add(p.mc_sigmas.resistors);
  h.add(p.mc_sigmas.mirror_ratios);
  return h.value();
}

// ---------------------------------------------------------------------------
// Grids and sweeps.

/// Inclusive grid lo, lo+step, ..., hi. The last interval is shortened when
/// step does not divide the range.
inline std::vector<double> make_grid(double lo, double hi, double step) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    fail(ErrorCode::DegenerateRange, "grid requires lo < hi");
  }
  if (!(step > 0.0) || !std::isfinite(step)) fail(ErrorCode::InvalidArgument, "step must be > 0");
  const double span = hi - lo;
  const auto intervals = static_cast<std::size_t>(std::max(1.0, std::ceil(span / step - 1e-9)));
  std::vector<double> grid;
  grid.reserve(intervals + 1);
  for (std::size_t k = 0; k < intervals; ++k) grid.push_back(lo + static_cast<double>(k) * step);
  grid.push_back(hi);
  return grid;
}

namespace analyses_detail {

template <typename Eval>
SweepResult run_sweep(std::vector<double> axis, SweepMeta meta, Eval&& eval, std::size_t threads) {
  SweepResult out;
  out.meta = meta;
  out.points.resize(axis.size());
  std::vector<std::optional<SweepFailure>> errors(axis.size());
  parallel_for(
      axis.size(),
      [&](std::size_t i) {
        try {
          out.points[i] = eval(axis[i]);
        } catch (const Error& e) {
          errors[i] = SweepFailure{axis[i], e.code(), e.what()};
        }
      },
      threads);
  std::vector<SweepFailure> failures;
  for (auto& e : errors) {
    if (e) failures.push_back(std::move(*e));
  }
  if (!failures.empty()) throw SweepError(std::move(failures));
  out.axis = std::move(axis);
  return out;
}

}  // namespace analyses_detail

inline SweepResult sweep_temperature(const CircuitDesign& design, const ProcessParams& p,
                                     double vdd, double t_min, double t_max, double step,
                                     std::size_t threads = 0) {
  if (!(t_min < t_max)) fail(ErrorCode::DegenerateRange, "t_min must be < t_max");
  if (!(t_min > -constants::celsius_offset)) {
    fail(ErrorCode::InvalidArgument, "t_min must be above absolute zero");
  }
  check_resistance_range(design.r1, p, Temperature::from_celsius(t_min),
                         Temperature::from_celsius(t_max));
  check_resistance_range(design.r2, p, Temperature::from_celsius(t_min),
                         Temperature::from_celsius(t_max));
  check_resistance_range(design.r3, p, Temperature::from_celsius(t_min),
                         Temperature::from_celsius(t_max));
  SweepMeta meta{SweepKind::Temperature, vdd, design.vdd_nominal, design_hash(design),
                 params_hash(p)};
  return analyses_detail::run_sweep(
      make_grid(t_min, t_max, step), meta,
      [&](double t_c) {
        return solve_operating_point(design, p, Temperature::from_celsius(t_c), vdd);
      },
      threads);
}

inline SweepResult sweep_supply(const CircuitDesign& design, const ProcessParams& p, double t_c,
                                double v_min, double v_max, double step,
                                std::size_t threads = 0) {
  if (!(v_min > 0.0)) fail(ErrorCode::InvalidArgument, "v_min must be > 0");
  if (!(v_min < v_max)) fail(ErrorCode::DegenerateRange, "v_min must be < v_max");
  const Temperature t = Temperature::from_celsius(t_c);
  SweepMeta meta{SweepKind::Supply, t_c, design.vdd_nominal, design_hash(design), params_hash(p)};
  return analyses_detail::run_sweep(
      make_grid(v_min, v_max, step), meta,
      [&](double vdd) { return solve_operating_point(design, p, t, vdd); }, threads);
}

// ---------------------------------------------------------------------------
// Figures of merit.

inline std::size_t nearest_index(std::span<const double> axis, double target) {
  if (axis.empty()) fail(ErrorCode::DegenerateRange, "empty axis");
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (std::abs(axis[i] - target) < std::abs(axis[best] - target)) best = i;
  }
  return best;
}

struct TemperatureStats {
  double tc_ppm = 0.0;
  double v_ref_nominal = 0.0;
  double v_ref_min = 0.0;
  double t_at_min = 0.0;
  double v_ref_max = 0.0;
  double t_at_max = 0.0;
  double max_deviation = 0.0;
};

/// Box-method statistics of a v_ref(T) series; the nominal value is the
/// sample nearest t_nominal.
inline TemperatureStats temperature_stats(std::span<const double> temps_c,
                                          std::span<const double> v_ref,
                                          double t_nominal = 27.0) {
  if (temps_c.size() != v_ref.size() || temps_c.size() < 2) {
    fail(ErrorCode::DegenerateRange, "temperature series needs >= 2 matching samples");
  }
  const double range = temps_c.back() - temps_c.front();
  if (!(range > 0.0)) fail(ErrorCode::DegenerateRange, "temperature span must be > 0");
  TemperatureStats s;
  const auto [lo, hi] = std::minmax_element(v_ref.begin(), v_ref.end());
  s.v_ref_min = *lo;
  s.v_ref_max = *hi;
  s.t_at_min = temps_c[static_cast<std::size_t>(lo - v_ref.begin())];
  s.t_at_max = temps_c[static_cast<std::size_t>(hi - v_ref.begin())];
  s.v_ref_nominal = v_ref[nearest_index(temps_c, t_nominal)];
  s.max_deviation = s.v_ref_max - s.v_ref_min;
  s.tc_ppm = s.max_deviation / (s.v_ref_nominal * range) * 1e6;
  return s;
}

inline double temp_coefficient(std::span<const double> temps_c, std::span<const double> v_ref,
                               double t_nominal = 27.0) {
  return temperature_stats(temps_c, v_ref, t_nominal).tc_ppm;
}

inline double temp_coefficient(const SweepResult& sweep, double t_nominal = 27.0) {
  const auto v = sweep.v_ref();
  return temp_coefficient(sweep.axis, v, t_nominal);
}

/// Relative end-to-end change of v_ref per volt of supply, in %/V.
inline double line_sensitivity(std::span<const double> vdd, std::span<const double> v_ref,
                               double vdd_nominal) {
  if (vdd.size() != v_ref.size() || vdd.size() < 2) {
    fail(ErrorCode::DegenerateRange, "supply series needs >= 2 matching samples");
  }
  const double range = vdd.back() - vdd.front();
  if (!(range > 0.0)) fail(ErrorCode::DegenerateRange, "supply span must be > 0");
  const double nominal = v_ref[nearest_index(vdd, vdd_nominal)];
  return (v_ref.back() - v_ref.front()) / (nominal * range) * 100.0;
}

inline double line_sensitivity(const SweepResult& sweep) {
  const auto v = sweep.v_ref();
  return line_sensitivity(sweep.axis, v, sweep.meta.vdd_nominal);
}

/// 20 log10 |dv_ref / dvdd| from a central difference. An exactly flat
/// response returns -infinity.
inline double psrr_from_samples(double v_ref_low, double v_ref_high, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::InvalidArgument, "delta must be > 0");
  const double gain = std::abs(v_ref_high - v_ref_low) / (2.0 * delta);
  if (gain == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(gain);
}

inline double psrr_dc(const CircuitDesign& design, const ProcessParams& p, double t_c, double vdd,
                      double delta = 0.01) {
  if (!(delta > 0.0)) fail(ErrorCode::InvalidArgument, "delta must be > 0");
  if (!(vdd - delta > 0.0)) fail(ErrorCode::InvalidArgument, "vdd - delta must be > 0");
  const Temperature t = Temperature::from_celsius(t_c);
  const double lo = solve_operating_point(design, p, t, vdd - delta).v_ref;
  const double hi = solve_operating_point(design, p, t, vdd + delta).v_ref;
  return psrr_from_samples(lo, hi, delta);
}

/// Ordinary least-squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    fail(ErrorCode::DegenerateRange, "slope fit needs >= 2 matching samples");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::DegenerateRange, "slope fit needs distinct x values");
  return sxy / sxx;
}

/// Least-squares slopes (A/degC) of the output-referred branch currents.
struct BranchSlopes {
  double ptat = 0.0;
  double ctat = 0.0;
  double comp = 0.0;
  double net = 0.0;
};

inline BranchSlopes branch_slopes(const SweepResult& sweep) {
  std::vector<double> ptat, ctat, comp, net;
  for (const auto& op : sweep.points) {
    ptat.push_back(op.i_ptat_out);
    ctat.push_back(op.i_ctat_out);
    comp.push_back(op.i_comp);
    net.push_back(op.i_ref);
  }
  return BranchSlopes{ols_slope(sweep.axis, ptat), ols_slope(sweep.axis, ctat),
                      ols_slope(sweep.axis, comp), ols_slope(sweep.axis, net)};
}

inline BranchSlopes branch_slopes(const CircuitDesign& design, const ProcessParams& p, double vdd,
                                  double t_min, double t_max, double step,
                                  std::size_t threads = 0) {
  return branch_slopes(sweep_temperature(design, p, vdd, t_min, t_max, step, threads));
}

struct Metrics {
  double tc_ppm = 0.0;
  double v_ref_nominal = 0.0;
  double v_ref_min = 0.0;
  double t_at_min = 0.0;
  double v_ref_max = 0.0;
  double t_at_max = 0.0;
  double max_deviation = 0.0;
  double line_sensitivity = 0.0;
  double psrr_dc_db = 0.0;
  std::map<double, double> power_at;        // supply (V) -> W, at t_nominal
  std::map<double, double> i_quiescent_at;  // supply (V) -> A, at t_nominal
  BranchSlopes slopes;
};

/// Everything the analyses report for one design. Temperature figures come
/// from a sweep at settings.vdd; supply figures and power are taken at
/// t_nominal.
inline Metrics evaluate_metrics(const CircuitDesign& design, const ProcessParams& p,
                                const AnalysisSettings& s, std::size_t threads = 0) {
  Metrics m;
  const SweepResult temp = sweep_temperature(design, p, s.vdd, s.t_min, s.t_max, s.t_step, threads);
  const auto v = temp.v_ref();
  const TemperatureStats ts = temperature_stats(temp.axis, v, s.t_nominal);
  m.tc_ppm = ts.tc_ppm;
  m.v_ref_nominal = ts.v_ref_nominal;
  m.v_ref_min = ts.v_ref_min;
  m.t_at_min = ts.t_at_min;
  m.v_ref_max = ts.v_ref_max;
  m.t_at_max = ts.t_at_max;
  m.max_deviation = ts.max_deviation;
  m.slopes = branch_slopes(temp);

  const SweepResult supply = sweep_supply(design, p, s.t_nominal, s.v_min, s.v_max, s.v_step, threads);
  m.line_sensitivity = line_sensitivity(supply);
  m.psrr_dc_db = psrr_dc(design, p, s.t_nominal, design.vdd_nominal, s.psrr_delta);

  const Temperature t_nom = Temperature::from_celsius(s.t_nominal);
  for (double vdd : s.power_supplies) {
    const OperatingPoint op = solve_operating_point(design, p, t_nom, vdd);
    m.power_at[vdd] = op.power;
    m.i_quiescent_at[vdd] = op.i_quiescent;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Monte Carlo.

struct SummaryStats {
  double mean = 0.0;
  double sigma = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

inline SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) {
    s.mean = s.sigma = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  // A constant series would otherwise pick up a rounding residue in sum / n.
  if (s.min == s.max) {
    s.mean = s.min;
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sigma = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  return s;
}

struct McSample {
  std::size_t id = 0;
  bool ok = false;
  Metrics metrics;
  std::string error;
};

struct McSummary {
  SummaryStats v_ref_nominal;
  SummaryStats tc_ppm;
  SummaryStats line_sensitivity;
  SummaryStats psrr_dc_db;
  SummaryStats max_deviation;
};

struct McResult {
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::vector<McSample> per_sample;
  std::size_t failures = 0;
  McSummary summary;
};

/// Index of each perturbed quantity in the per-sample counter stream.
enum class McDraw : std::uint64_t {
  Vth0 = 0,
  MuCox = 1,
  R1 = 2,
  R2 = 3,
  R3 = 4,
  AlphaP = 5,
  AlphaC = 6,
  Np = 7,
};

struct PerturbedInputs {
  CircuitDesign design;
  ProcessParams params;
};

/// Applies independent Gaussian relative deviations for sample `index`.
inline PerturbedInputs perturb(const CircuitDesign& design, const ProcessParams& p,
                               std::uint64_t seed, std::uint64_t index) {
  const CounterStream rng(seed, index);
  const McSigmas& s = p.mc_sigmas;
  auto scaled = [&](double value, double sigma, McDraw draw) {
    if (sigma == 0.0) return value;
    return value * (1.0 + sigma * rng.normal(static_cast<std::uint64_t>(draw)));
  };
  PerturbedInputs out{design, p};
  out.params.vth0_ref = scaled(p.vth0_ref, s.vth0_ref, McDraw::Vth0);
  out.params.mu_cox_ref = scaled(p.mu_cox_ref, s.mu_cox_ref, McDraw::MuCox);
  out.design.r1 = scaled(design.r1, s.resistors, McDraw::R1);
  out.design.r2 = scaled(design.r2, s.resistors, McDraw::R2);
  out.design.r3 = scaled(design.r3, s.resistors, McDraw::R3);
  out.design.alpha_p = scaled(design.alpha_p, s.mirror_ratios, McDraw::AlphaP);
  out.design.alpha_c = scaled(design.alpha_c, s.mirror_ratios, McDraw::AlphaC);
  out.design.np = scaled(design.np, s.mirror_ratios, McDraw::Np);
  return out;
}

inline McSummary summarize_samples(const std::vector<McSample>& samples) {
  std::vector<double> v, tc, ls, psrr, dev;
  for (const auto& smp : samples) {
    if (!smp.ok) continue;
    v.push_back(smp.metrics.v_ref_nominal);
    tc.push_back(smp.metrics.tc_ppm);
    ls.push_back(smp.metrics.line_sensitivity);
    psrr.push_back(smp.metrics.psrr_dc_db);
    dev.push_back(smp.metrics.max_deviation);
  }
  return McSummary{summarize(v), summarize(tc), summarize(ls), summarize(psrr), summarize(dev)};
}

inline McResult monte_carlo(const CircuitDesign& design, const ProcessParams& p,
                            const AnalysisSettings& settings, std::size_t n_samples,
                            std::uint64_t seed, std::size_t threads = 0) {
  if (n_samples < 1) fail(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  McResult r;
  r.seed = seed;
  r.n_samples = n_samples;
  r.per_sample.resize(n_samples);
  parallel_for(
      n_samples,
      [&](std::size_t i) {
        McSample& smp = r.per_sample[i];
        smp.id = i;
        try {
          const PerturbedInputs in = perturb(design, p, seed, i);
          const std::string bad = validation_error(in.design);
          if (!bad.empty()) fail(ErrorCode::NonPhysicalOperatingPoint, "perturbed design: " + bad);
          smp.metrics = evaluate_metrics(in.design, in.params, settings, 1);
          smp.ok = true;
        } catch (const Error& e) {
          smp.ok = false;
          smp.error = e.what();
        }
      },
      threads);
  for (const auto& smp : r.per_sample) {
    if (!smp.ok) ++r.failures;
  }
  r.summary = summarize_samples(r.per_sample);
  return r;
}

}  // namespace vreflab
