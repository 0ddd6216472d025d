#pragma once

// Compact-model equations: weak-inversion conduction, the unified current
// control model (UICM) and its F function, and the off-state leakage law.

#include <cmath>
#include <string>

#include "vreflab/device_physics.hpp"
#include "vreflab/error.hpp"
#include "vreflab/solver.hpp"

namespace vreflab {

struct DeviceGeometry {
  double w_over_l = 1.0;
  int multiplier = 1;
  /// Added to the process threshold for this device only (V).
  double vth_offset = 0.0;

  double effective_ratio() const noexcept { return w_over_l * multiplier; }

  friend bool operator==(const DeviceGeometry&, const DeviceGeometry&) = default;
};

struct BiasPoint {
  double vgs = 0.0;
  double vds = 0.0;
  double vs = 0.0;
};

enum class InversionRegion { Weak, Moderate, Strong };

/// Forward inversion coefficient i_f = I_D / I_S.
class InversionLevel {
 public:
  explicit InversionLevel(double i_f) : i_f_(i_f) {
    if (!(i_f > 0.0) || !std::isfinite(i_f)) {
      fail(ErrorCode::InversionOutOfDomain,
           "inversion level must be finite and > 0, got " + std::to_string(i_f));
    }
  }

  double value() const noexcept { return i_f_; }

  InversionRegion region() const noexcept {
    if (i_f_ < 1.0) return InversionRegion::Weak;
    if (i_f_ <= 100.0) return InversionRegion::Moderate;
    return InversionRegion::Strong;
  }

 private:
  double i_f_;
};

/// Threshold of one device: the process law plus the device's own offset.
inline double device_vth(const DeviceGeometry& geom, const ProcessParams& p, Temperature t) {
  return vth_at(p, t) + geom.vth_offset;
}

inline double subthreshold_ids0(const DeviceGeometry& geom, const ProcessParams& p,
                                Temperature t) {
  const double vt = thermal_voltage(t);
  return mobility_factor_at(p, t) * geom.effective_ratio() * vt * vt * std::exp(1.8);
}

/// Weak-inversion drain current including the drain saturation factor.
inline double subthreshold_current(const DeviceGeometry& geom, const ProcessParams& p,
                                   Temperature t, const BiasPoint& bias) {
  if (bias.vds < 0.0) fail(ErrorCode::InvalidArgument, "vds must be >= 0");
  const double vt = thermal_voltage(t);
  const double vth = device_vth(geom, p, t);
  return subthreshold_ids0(geom, p, t) * std::exp((bias.vgs - vth) / (p.slope_factor * vt)) *
         -std::expm1(-bias.vds / vt);
}

/// Closed-form inverse of subthreshold_current in vgs.
inline double subthreshold_vgs_for_current(double target, const DeviceGeometry& geom,
                                           const ProcessParams& p, Temperature t, double vds) {
  if (!(target > 0.0)) {
    fail(ErrorCode::NonPositiveCurrent, "target current must be > 0, got " + std::to_string(target));
  }
  if (!(vds > 0.0)) fail(ErrorCode::InvalidArgument, "vds must be > 0");
  const double vt = thermal_voltage(t);
  const double scale = subthreshold_ids0(geom, p, t) * -std::expm1(-vds / vt);
  return device_vth(geom, p, t) + p.slope_factor * vt * std::log(target / scale);
}

/// I_S = 2 n muCox (W/L) vT^2.
inline double specific_current(const DeviceGeometry& geom, const ProcessParams& p, Temperature t) {
  const double vt = thermal_voltage(t);
  return 2.0 * p.slope_factor * mobility_factor_at(p, t) * geom.effective_ratio() * vt * vt;
}

namespace uicm_detail {

// F written in u = ln(i_f). sqrt(1+i) - 1 = i / (sqrt(1+i) + 1) removes the
// cancellation that otherwise destroys weak-inversion accuracy.
inline double f_of_log(double u) {
  const double s = std::sqrt(1.0 + std::exp(u));
  return s - 2.0 + u - std::log(s + 1.0);
}

}  // namespace uicm_detail

/// F(i_f) = sqrt(1+i_f) - 2 + ln(sqrt(1+i_f) - 1). F(3) = 0.
inline double uicm_F(const InversionLevel& level) {
  const double i = level.value();
  const double s = std::sqrt(1.0 + i);
  return s - 2.0 + std::log(i) - std::log(s + 1.0);
}

/// dF/di_f = 1 / (2 (sqrt(1+i_f) - 1)).
inline double uicm_F_derivative(const InversionLevel& level) {
  const double i = level.value();
  const double s = std::sqrt(1.0 + i);
  return (s + 1.0) / (2.0 * i);
}

/// Inverts F. The search runs in ln(i_f), where dF/du = (sqrt(1+i_f)+1)/2 >= 1,
/// so the returned level satisfies |F(i_f) - f| well below 1e-10.
inline InversionLevel uicm_F_inverse(double f_value) {
  if (!std::isfinite(f_value)) {
    fail(ErrorCode::InvalidArgument, "F value must be finite");
  }
  using uicm_detail::f_of_log;
  // f_of_log(u) >= u - 1 - ln 2, hence the root lies at or below hi.
  const double hi = f_value + 1.0 + std::log(2.0);
  double lo = hi - 1.0;
  double step = 1.0;
  while (f_of_log(lo) > f_value) {
    step *= 2.0;
    lo = hi - step;
  }
  if (f_of_log(hi) < f_value) {
    fail(ErrorCode::SolverDivergence, "F inverse bracket construction failed");
  }
  RootProblem prob;
  prob.objective = [f_value](double u) { return f_of_log(u) - f_value; };
  prob.bracket_lo = lo;
  prob.bracket_hi = hi;
  prob.abs_tol = 1e-14 * std::max(1.0, std::abs(hi));
  double u = find_root(prob);
  // One Newton step in u; dF/du grows like sqrt(i_f)/2 in strong inversion.
  u -= (f_of_log(u) - f_value) / (0.5 * (std::sqrt(1.0 + std::exp(u)) + 1.0));
  const double i_f = std::exp(u);
  if (!(i_f > 0.0)) {
    fail(ErrorCode::InversionOutOfDomain,
         "F value " + std::to_string(f_value) + " maps below the representable inversion level");
  }
  return InversionLevel(i_f);
}

/// Gate voltage of a saturated device with its source at bulk potential:
/// VG = Vth(T) + n vT F(i_f).
inline double uicm_gate_voltage(const InversionLevel& level, const ProcessParams& p, Temperature t,
                                double vth_offset = 0.0) {
  return vth_at(p, t) + vth_offset + p.slope_factor * thermal_voltage(t) * uicm_F(level);
}

/// Aspect ratio that places a diode-connected device at inversion level i_f
/// while the mirrored R2 branch (Nc times its current) carries VG/R2.
inline double m0_sizing(const InversionLevel& level, const ProcessParams& p, Temperature t,
                        double nc, double r2, double vth_offset = 0.0) {
  if (!(nc > 0.0)) fail(ErrorCode::InvalidArgument, "nc must be > 0");
  if (!(r2 > 0.0)) fail(ErrorCode::InvalidArgument, "r2 must be > 0");
  const double vg = uicm_gate_voltage(level, p, t, vth_offset);
  if (!(vg > 0.0)) {
    fail(ErrorCode::NonPhysicalSizing,
         "gate voltage " + std::to_string(vg) + " V is not positive at i_f = " +
             std::to_string(level.value()));
  }
  const double vt = thermal_voltage(t);
  return vg / (2.0 * nc * r2 * p.slope_factor * mobility_factor_at(p, t) * vt * vt * level.value());
}

/// Off-state leakage of a grounded-gate device, scaled by the drain
/// saturation factor so it vanishes at vds = 0.
inline double leakage_current(const DeviceGeometry& geom, const ProcessParams& p, Temperature t,
                              double vds) {
  if (vds < 0.0) fail(ErrorCode::InvalidArgument, "vds must be >= 0");
  const double vt = thermal_voltage(t);
  const double eta = p.swing_coeff;
  const double vth = device_vth(geom, p, t);
  return mobility_factor_at(p, t) * geom.effective_ratio() * (eta - 1.0) * vt * vt *
         std::exp(-vth / (eta * vt)) * -std::expm1(-vds / vt);
}

/// Leakage with the drain fully saturated (the unmodified law).
inline double leakage_current_saturated(const DeviceGeometry& geom, const ProcessParams& p,
                                        Temperature t) {
  const double vt = thermal_voltage(t);
  const double eta = p.swing_coeff;
  return mobility_factor_at(p, t) * geom.effective_ratio() * (eta - 1.0) * vt * vt *
         std::exp(-device_vth(geom, p, t) / (eta * vt));
}

}  // namespace vreflab
