#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "vreflab/device_physics.hpp"

using namespace vreflab;
using vreflab::testing::uniform;

TEST(Temperature, CelsiusRoundTrip) {
  for (double c : {-40.0, 0.0, 27.0, 130.0}) {
    EXPECT_DOUBLE_EQ(Temperature::from_celsius(c).celsius(), c);
  }
  EXPECT_DOUBLE_EQ(Temperature::from_celsius(27.0).kelvin(), 300.15);
}

TEST(Temperature, RejectsNonPositiveKelvin) {
  EXPECT_THROW(Temperature::from_kelvin(0.0), Error);
  EXPECT_THROW(Temperature::from_kelvin(-1.0), Error);
  EXPECT_THROW(Temperature::from_celsius(-274.0), Error);
}

TEST(ThermalVoltage, MatchesHighPrecisionValues) {
  // kB T / q evaluated at 40 digits.
  EXPECT_NEAR(thermal_voltage(Temperature::from_kelvin(300.15)), 0.025864925786328750067, 1e-17);
  EXPECT_NEAR(thermal_voltage(Temperature::from_kelvin(403.15)), 0.034740779046338282824, 1e-17);
}

TEST(ThermalVoltage, AtHotCornerIsAbout34p7mV) {
  EXPECT_NEAR(thermal_voltage(Temperature::from_celsius(130.0)), 0.0347, 0.0002);
}

TEST(ThermalVoltage, LinearInTemperature) {
  for (int k = 0; k < 50; ++k) {
    const double t = uniform(1.0, 1000.0);
    const double a = uniform(0.1, 10.0);
    const double lhs = thermal_voltage(Temperature::from_kelvin(a * t));
    const double rhs = a * thermal_voltage(Temperature::from_kelvin(t));
    EXPECT_NEAR(lhs, rhs, 4e-16 * rhs);
  }
  EXPECT_DOUBLE_EQ(thermal_voltage(Temperature::from_kelvin(600.3)),
                   2.0 * thermal_voltage(Temperature::from_kelvin(300.15)));
}

TEST(VthAt, AffineLaw) {
  ProcessParams p;
  p.vth0_ref = 0.25;
  p.vth_tempco = -0.43e-3;
  EXPECT_DOUBLE_EQ(vth_at(p, Temperature::from_kelvin(p.t_ref)), 0.25);
  EXPECT_NEAR(vth_at(p, Temperature::from_kelvin(p.t_ref + 100.0)), 0.207, 1e-12);
}

TEST(VthAt, FiniteDifferenceSlopeEqualsTempco) {
  ProcessParams p;
  for (double t : {233.15, 300.15, 403.15}) {
    const double h = 1.0;
    const double slope = (vth_at(p, Temperature::from_kelvin(t + h)) -
                          vth_at(p, Temperature::from_kelvin(t - h))) /
                         (2.0 * h);
    EXPECT_NEAR(slope, p.vth_tempco, 1e-12 * std::abs(p.vth_tempco) + 1e-15);
  }
}

TEST(VthAt, ZeroTempcoIsConstant) {
  ProcessParams p;
  p.vth_tempco = 0.0;
  for (double t : {200.0, 300.0, 450.0}) {
    EXPECT_EQ(vth_at(p, Temperature::from_kelvin(t)), p.vth0_ref);
  }
}

TEST(Mobility, PowerLaw) {
  ProcessParams p;
  p.mobility_exponent = 1.5;
  EXPECT_DOUBLE_EQ(mobility_factor_at(p, Temperature::from_kelvin(4.0 * p.t_ref)),
                   p.mu_cox_ref / 8.0);
  EXPECT_DOUBLE_EQ(mobility_factor_at(p, Temperature::from_kelvin(p.t_ref)), p.mu_cox_ref);
  p.mobility_exponent = 0.0;
  EXPECT_DOUBLE_EQ(mobility_factor_at(p, Temperature::from_kelvin(450.0)), p.mu_cox_ref);
}

TEST(Mobility, LogLogSlopeIsMinusExponent) {
  ProcessParams p;
  p.mobility_exponent = 1.7;
  const double temps[] = {233.15, 273.15, 300.15, 350.0, 403.15};
  for (int i = 1; i < 5; ++i) {
    const double slope =
        (std::log(mobility_factor_at(p, Temperature::from_kelvin(temps[i]))) -
         std::log(mobility_factor_at(p, Temperature::from_kelvin(temps[0])))) /
        (std::log(temps[i]) - std::log(temps[0]));
    EXPECT_NEAR(slope, -1.7, 1e-9 * 1.7);
  }
}

TEST(Resistance, ZeroTempcoIsFlat) {
  ProcessParams p;
  EXPECT_EQ(resistance_at(100e3, p, Temperature::from_celsius(130.0)), 100e3);
}

TEST(Resistance, LinearDrift) {
  ProcessParams p;
  p.resistor_tempco = 1e-4;
  EXPECT_NEAR(resistance_at(100e3, p, Temperature::from_kelvin(p.t_ref + 100.0)), 101e3, 1e-6);
}

TEST(Resistance, NonPhysicalOverRange) {
  ProcessParams p;
  p.resistor_tempco = -0.01;
  try {
    check_resistance_range(100e3, p, Temperature::from_kelvin(p.t_ref),
                           Temperature::from_kelvin(p.t_ref + 150.0));
    FAIL() << "expected NonPhysicalResistance";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPhysicalResistance);
  }
  EXPECT_THROW(resistance_at(100e3, p, Temperature::from_kelvin(p.t_ref + 150.0)), Error);
}

TEST(ProcessParams, Validation) {
  ProcessParams p;
  EXPECT_EQ(validation_error(p), "");
  auto broken = [](auto mutate) {
    ProcessParams q;
    mutate(q);
    return validation_error(q);
  };
  EXPECT_NE(broken([](ProcessParams& q) { q.mu_cox_ref = 0.0; }), "");
  EXPECT_NE(broken([](ProcessParams& q) { q.slope_factor = 2.5; }), "");
  EXPECT_NE(broken([](ProcessParams& q) { q.swing_coeff = 1.0; }), "");
  EXPECT_NE(broken([](ProcessParams& q) { q.vth_tempco = 0.0; }), "");
  EXPECT_NE(broken([](ProcessParams& q) { q.lambda_cascode = q.lambda_simple; }), "");
  EXPECT_NE(broken([](ProcessParams& q) { q.mc_sigmas.resistors = -0.1; }), "");
}
