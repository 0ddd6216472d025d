#pragma once

// Behavioral models of the reference's functional blocks. The output node
// sums mirrored PTAT and CTAT currents and loses a leakage current to the
// curvature compensation device.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "vreflab/device_physics.hpp"
#include "vreflab/error.hpp"
#include "vreflab/mosfet_model.hpp"
#include "vreflab/solver.hpp"

namespace vreflab {

struct CircuitDesign {
  double r1 = 700e3;
  double r2 = 1.0e6;
  double r3 = 500e3;
  double np = 8.0;        // (W/L)_2 : (W/L)_1
  double nc = 1.0;        // R2 branch carries nc times the M0 current
  double alpha_p = 2.0;   // PTAT output mirror gain
  double alpha_c = 2.0;   // CTAT output mirror gain
  DeviceGeometry m0_geom{1.0, 1, 0.0};
  DeviceGeometry m7_geom{1.0, 1, 0.0};
  DeviceGeometry m1_geom{1.0, 1, 0.0};
  bool cascode = true;
  bool compensation_enabled = true;
  double vdd_nominal = 1.0;

  /// M2 is M1 scaled by np.
  DeviceGeometry m2_geom() const {
    DeviceGeometry g = m1_geom;
    g.w_over_l *= np;
    return g;
  }

  friend bool operator==(const CircuitDesign&, const CircuitDesign&) = default;
};

inline std::string validation_error(const CircuitDesign& d) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(d.r1)) return "r1 must be > 0";
  if (!positive(d.r2)) return "r2 must be > 0";
  if (!positive(d.r3)) return "r3 must be > 0";
  if (!std::isfinite(d.np) || !(d.np > 1.0)) return "np must be > 1";
  if (!positive(d.nc)) return "nc must be > 0";
  if (!positive(d.alpha_p)) return "alpha_p must be > 0";
  if (!positive(d.alpha_c)) return "alpha_c must be > 0";
  if (!positive(d.vdd_nominal)) return "vdd_nominal must be > 0";
  struct Named {
    const char* name;
    const DeviceGeometry* geom;
  };
  for (const Named& g : {Named{"m0_geom", &d.m0_geom}, Named{"m7_geom", &d.m7_geom},
                         Named{"m1_geom", &d.m1_geom}}) {
    if (!positive(g.geom->w_over_l)) return std::string(g.name) + ".w_over_l must be > 0";
    if (g.geom->multiplier < 1) return std::string(g.name) + ".multiplier must be >= 1";
    if (!std::isfinite(g.geom->vth_offset)) return std::string(g.name) + ".vth_offset must be finite";
  }
  return {};
}

struct OperatingPoint {
  Temperature t = Temperature::from_kelvin(constants::room_temperature_k);
  double vdd = 0.0;
  double i_ptat = 0.0;      // core PTAT current (each of M1, M2)
  double i_ctat = 0.0;      // M0 drain current
  double i_ptat_out = 0.0;  // alpha_p' * i_ptat
  double i_ctat_out = 0.0;  // alpha_c' * i_ctat
  double i_comp = 0.0;
  double i_ref = 0.0;
  double v_ctat = 0.0;
  double v_ref = 0.0;
  double i_quiescent = 0.0;
  double power = 0.0;
};

struct MirrorModel {
  double gain = 1.0;
  double lambda_eff = 0.0;
};

/// Mirror output including first-order output conductance. delta_v is the
/// output-node excursion from the nominal-supply condition.
inline double mirror_transfer(const MirrorModel& m, double i_in, double delta_v) {
  if (i_in < 0.0) fail(ErrorCode::InvalidArgument, "mirror input current must be >= 0");
  const double factor = 1.0 + m.lambda_eff * delta_v;
  if (!(factor > 0.0)) {
    fail(ErrorCode::NegativeEffectiveGain,
         "mirror factor 1 + lambda*dv = " + std::to_string(factor) + " is not positive");
  }
  return i_in * m.gain * factor;
}

/// I_ptat = n vT ln(Np) / R1(T).
inline double ptat_current(const CircuitDesign& design, const ProcessParams& p, Temperature t) {
  const double r1 = resistance_at(design.r1, p, t);
  return p.slope_factor * thermal_voltage(t) * std::log(design.np) / r1;
}

/// PTAT core current without dropping M2's drain saturation factor.
///
/// M2's drain is held at bias_vds and its source is degenerated by R1. M1 is
/// diode connected through its cascode, which keeps it saturated. The loop
/// I R1 = vgs1(I) - vgs2(I) is solved with the full weak-inversion law on M2.
inline double ptat_current_numerical(const CircuitDesign& design, const ProcessParams& p,
                                     Temperature t, double bias_vds) {
  if (!(bias_vds > 0.0)) fail(ErrorCode::InvalidArgument, "bias_vds must be > 0");
  const double r1 = resistance_at(design.r1, p, t);
  const DeviceGeometry g1 = design.m1_geom;
  const DeviceGeometry g2 = design.m2_geom();
  const double vt = thermal_voltage(t);

  auto diode_vgs = [&](double current) {
    return device_vth(g1, p, t) +
           p.slope_factor * vt * std::log(current / subthreshold_ids0(g1, p, t));
  };

  auto mismatch = [&](double current) {
    const double vgs1 = diode_vgs(current);
    const double vgs2 = subthreshold_vgs_for_current(current, g2, p, t, bias_vds);
    return current * r1 - (vgs1 - vgs2);
  };

  const double closed_form = ptat_current(design, p, t);
  double lo = closed_form * 1e-9;
  double hi = closed_form * 2.0;
  if (!(mismatch(lo) < 0.0)) {
    fail(ErrorCode::SolverDivergence,
         "no PTAT solution: gate-voltage difference is not positive at bias_vds = " +
             std::to_string(bias_vds));
  }
  for (int k = 0; k < 60 && mismatch(hi) < 0.0; ++k) hi *= 2.0;
  RootProblem prob;
  prob.objective = mismatch;
  prob.bracket_lo = lo;
  prob.bracket_hi = hi;
  prob.abs_tol = closed_form * 1e-12;
  return find_root(prob);
}

struct CtatPoint {
  double v_ctat = 0.0;
  double i_ctat = 0.0;
  double i_f = 0.0;
};

/// Self-consistent operating point of M0: its UICM drain current I_S i_f
/// must equal VG / (Nc R2), with VG = Vth(T) + n vT F(i_f).
///
/// In terms of i_f the residual h(i) = K i - VG(i), K = I_S Nc R2, is convex
/// (F is concave), so there are at most two crossings. The lower one is the
/// degenerate near-zero-current state; the operating point is the upper one,
/// beyond the minimum of h at sqrt(1+i) = 1 + n vT / (2K).
inline CtatPoint ctat_operating_point(const CircuitDesign& design, const ProcessParams& p,
                                      Temperature t) {
  const double r2 = resistance_at(design.r2, p, t);
  const double vt = thermal_voltage(t);
  const double n = p.slope_factor;
  const double k = specific_current(design.m0_geom, p, t) * design.nc * r2;
  const double vth = device_vth(design.m0_geom, p, t);

  auto gate_voltage = [&](double i_f) {
    const double s = std::sqrt(1.0 + i_f);
    return vth + n * vt * (s - 2.0 + std::log(i_f) - std::log(s + 1.0));
  };
  auto residual_at_level = [&](double i_f) { return k * i_f - gate_voltage(i_f); };

  const double s_min = 1.0 + n * vt / (2.0 * k);
  const double i_min = s_min * s_min - 1.0;
  if (!(residual_at_level(i_min) < 0.0)) {
    fail(ErrorCode::SolverDivergence,
         "no CTAT operating point at " + std::to_string(t.celsius()) +
             " degC: the R2 load line does not cross the M0 characteristic");
  }
  double i_hi = std::max(2.0 * i_min, 1.0);
  for (int it = 0; residual_at_level(i_hi) < 0.0; ++it) {
    if (it > 200) fail(ErrorCode::SolverDivergence, "CTAT bracket expansion failed");
    i_hi *= 2.0;
  }
  // Solve for the gate voltage itself so the tolerance is in volts.
  RootProblem prob;
  prob.objective = [&](double vg) { return residual_at_level(vg / k); };
  prob.bracket_lo = k * i_min;
  prob.bracket_hi = k * i_hi;
  prob.abs_tol = 1e-13;
  const double vg = find_root(prob);
  CtatPoint out;
  out.v_ctat = vg;
  out.i_f = vg / k;
  out.i_ctat = vg / (design.nc * r2);
  return out;
}

/// Current drained by M7 from the output node.
inline double compensation_current(const CircuitDesign& design, const ProcessParams& p,
                                   Temperature t, double v_ref_node) {
  if (v_ref_node < 0.0) fail(ErrorCode::InvalidArgument, "output node voltage must be >= 0");
  if (!design.compensation_enabled) return 0.0;
  return leakage_current(design.m7_geom, p, t, v_ref_node);
}

inline MirrorModel output_mirror(const CircuitDesign& design, const ProcessParams& p,
                                 double gain) {
  return MirrorModel{gain, design.cascode ? p.lambda_cascode : p.lambda_simple};
}

/// Full-circuit evaluation at one (T, Vdd).
inline OperatingPoint solve_operating_point(const CircuitDesign& design, const ProcessParams& p,
                                            Temperature t, double vdd) {
  if (!(vdd > 0.0) || !std::isfinite(vdd)) {
    fail(ErrorCode::InvalidArgument, "vdd must be > 0");
  }
  OperatingPoint op;
  op.t = t;
  op.vdd = vdd;
  op.i_ptat = ptat_current(design, p, t);
  const CtatPoint ctat = ctat_operating_point(design, p, t);
  op.v_ctat = ctat.v_ctat;
  op.i_ctat = ctat.i_ctat;
  if (!(op.v_ctat < vdd)) {
    fail(ErrorCode::NonPhysicalOperatingPoint,
         "CTAT gate voltage " + std::to_string(op.v_ctat) + " V exceeds the supply");
  }

  const double delta_v = vdd - design.vdd_nominal;
  op.i_ptat_out = mirror_transfer(output_mirror(design, p, design.alpha_p), op.i_ptat, delta_v);
  op.i_ctat_out = mirror_transfer(output_mirror(design, p, design.alpha_c), op.i_ctat, delta_v);
  const double i_src = op.i_ptat_out + op.i_ctat_out;
  const double r3 = resistance_at(design.r3, p, t);

  if (!design.compensation_enabled) {
    op.i_comp = 0.0;
  } else {
    if (leakage_current_saturated(design.m7_geom, p, t) >= i_src) {
      fail(ErrorCode::NonPhysicalOperatingPoint,
           "compensation leakage exceeds the PTAT+CTAT output current at " +
               std::to_string(t.celsius()) + " degC");
    }
    // g(v) = v - R3 (i_src - i_comp(v)) is increasing, negative at 0 and
    // non-negative at R3 i_src.
    RootProblem prob;
    prob.objective = [&](double v) {
      return v - r3 * (i_src - compensation_current(design, p, t, std::max(v, 0.0)));
    };
    prob.bracket_lo = 0.0;
    prob.bracket_hi = r3 * i_src;
    prob.abs_tol = 1e-13;
    const double v = find_root(prob);
    op.i_comp = compensation_current(design, p, t, v);
  }
  op.i_ref = i_src - op.i_comp;
  op.v_ref = op.i_ref * r3;
  if (!(op.v_ref >= 0.0) || op.v_ref > vdd) {
    fail(ErrorCode::NonPhysicalOperatingPoint,
         "reference voltage " + std::to_string(op.v_ref) + " V outside [0, vdd]");
  }
  op.i_quiescent = 2.0 * op.i_ptat + (1.0 + design.nc) * op.i_ctat + i_src;
  op.power = vdd * op.i_quiescent;
  return op;
}

}  // namespace vreflab
