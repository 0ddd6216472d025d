#pragma once

// Physical constants and the temperature laws shared by every model equation.

#include <cmath>
#include <string>

#include "vreflab/error.hpp"

namespace vreflab {

namespace constants {
inline constexpr double boltzmann = 1.380649e-23;          // J/K, exact (SI 2019)
inline constexpr double elementary_charge = 1.602176634e-19;  // C, exact (SI 2019)
inline constexpr double celsius_offset = 273.15;
inline constexpr double room_temperature_k = 300.15;  // 27 degC
}  // namespace constants

/// Absolute temperature. Construction rejects non-positive kelvin values.
class Temperature {
 public:
  static Temperature from_kelvin(double kelvin) { return Temperature(kelvin); }
  static Temperature from_celsius(double celsius) {
    return Temperature(celsius + constants::celsius_offset);
  }

  double kelvin() const noexcept { return kelvin_; }
  double celsius() const noexcept { return kelvin_ - constants::celsius_offset; }

  friend bool operator==(const Temperature&, const Temperature&) = default;

 private:
  explicit Temperature(double kelvin) : kelvin_(kelvin) {
    if (!(kelvin > 0.0) || !std::isfinite(kelvin)) {
      fail(ErrorCode::InvalidArgument, "temperature must be > 0 K, got " + std::to_string(kelvin));
    }
  }

  double kelvin_;
};

/// Relative standard deviations used by the Monte Carlo analysis.
struct McSigmas {
  double vth0_ref = 0.0;
  double mu_cox_ref = 0.0;
  double resistors = 0.0;
  double mirror_ratios = 0.0;

  friend bool operator==(const McSigmas&, const McSigmas&) = default;
};

/// Technology parameters. The defaults are generic starting values; the
/// shipped configuration file carries the calibrated set.
struct ProcessParams {
  double mu_cox_ref = 300e-6;       // A/V^2 at t_ref
  double mobility_exponent = 1.5;   // mu(T) = mu_ref (T/t_ref)^-m
  double vth0_ref = 0.30;           // V at t_ref
  double vth_tempco = -0.43e-3;     // V/degC
  double slope_factor = 1.4;        // n
  double swing_coeff = 1.5;         // eta, leakage law only
  double t_ref = constants::room_temperature_k;
  double lambda_simple = 0.15;      // 1/V
  double lambda_cascode = 0.016;    // 1/V
  double resistor_tempco = 0.0;     // 1/degC
  McSigmas mc_sigmas{};

  friend bool operator==(const ProcessParams&, const ProcessParams&) = default;
};

/// Checks the documented invariants. Returns an empty string when valid,
/// otherwise the name of the first offending field and why.
inline std::string validation_error(const ProcessParams& p) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(p.mu_cox_ref) || p.mu_cox_ref <= 0.0) return "mu_cox_ref must be > 0";
  if (!finite(p.mobility_exponent)) return "mobility_exponent must be finite";
  if (!finite(p.vth0_ref)) return "vth0_ref must be finite";
  if (!finite(p.vth_tempco) || p.vth_tempco >= 0.0) return "vth_tempco must be < 0";
  if (!finite(p.slope_factor) || p.slope_factor < 1.0 || p.slope_factor > 2.0)
    return "slope_factor must lie in [1, 2]";
  if (!finite(p.swing_coeff) || p.swing_coeff <= 1.0) return "swing_coeff must be > 1";
  if (!finite(p.t_ref) || p.t_ref <= 0.0) return "t_ref must be > 0";
  if (!finite(p.lambda_simple) || p.lambda_simple < 0.0) return "lambda_simple must be >= 0";
  if (!finite(p.lambda_cascode) || p.lambda_cascode < 0.0) return "lambda_cascode must be >= 0";
  if (!(p.lambda_cascode < p.lambda_simple)) return "lambda_cascode must be < lambda_simple";
  if (!finite(p.resistor_tempco)) return "resistor_tempco must be finite";
  const McSigmas& s = p.mc_sigmas;
  for (double v : {s.vth0_ref, s.mu_cox_ref, s.resistors, s.mirror_ratios}) {
    if (!finite(v) || v < 0.0) return "mc_sigmas entries must be >= 0";
  }
  return {};
}

/// kB*T/q in volts.
inline double thermal_voltage(Temperature t) noexcept {
  return constants::boltzmann * t.kelvin() / constants::elementary_charge;
}

/// Affine threshold law anchored at t_ref.
inline double vth_at(const ProcessParams& p, Temperature t) noexcept {
  return p.vth0_ref + p.vth_tempco * (t.kelvin() - p.t_ref);
}

/// muCox(T) = mu_cox_ref * (T / t_ref)^-m.
inline double mobility_factor_at(const ProcessParams& p, Temperature t) noexcept {
  return p.mu_cox_ref * std::pow(t.kelvin() / p.t_ref, -p.mobility_exponent);
}

/// First-order resistor drift. Throws NonPhysicalResistance when the value
/// would not be positive at this temperature.
inline double resistance_at(double r_ref, const ProcessParams& p, Temperature t) {
  if (!(r_ref > 0.0)) {
    fail(ErrorCode::NonPhysicalResistance, "reference resistance must be > 0");
  }
  const double r = r_ref * (1.0 + p.resistor_tempco * (t.kelvin() - p.t_ref));
  if (!(r > 0.0)) {
    fail(ErrorCode::NonPhysicalResistance,
         "resistance drops to " + std::to_string(r) + " ohm at " + std::to_string(t.celsius()) +
             " degC");
  }
  return r;
}

/// Checks resistance_at over a closed temperature interval. The law is affine,
/// so the endpoints decide.
inline void check_resistance_range(double r_ref, const ProcessParams& p, Temperature lo,
                                   Temperature hi) {
  resistance_at(r_ref, p, lo);
  resistance_at(r_ref, p, hi);
}

}  // namespace vreflab
