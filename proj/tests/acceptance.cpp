// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Run by ctest as a single test.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vreflab/cli.hpp"

using namespace vreflab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
    pass = pass && ok;
  }
};

std::string num(double v) { return fmt_num(v); }

bool within_rel(double x, double target, double tol) {
  return std::abs(x - target) <= tol * std::abs(target);
}

Outcome tc_closure() {
  Outcome o;
  // Minimum at -40, nominal at 27, maximum at 130.
  const std::vector<double> t{-40.0, 27.0, 130.0};
  const std::vector<double> v{0.20544, 0.2055, 0.20601};
  const double tc = temp_coefficient(t, v, 27.0);
  o.check(std::abs(tc - 16.3) <= 0.1, "tc=" + num(tc) + " ppm/C");
  return o;
}

Outcome ls_psrr_closure() {
  Outcome o;
  const double slope = 3.4e-3;
  auto v = [&](double vdd) { return 0.2055 + slope * (vdd - 1.0); };
  std::vector<double> vdd, vr;
  for (double x : make_grid(0.5, 3.3, 0.05)) {
    vdd.push_back(x);
    vr.push_back(v(x));
  }
  const double ls = line_sensitivity(vdd, vr, 1.0);
  const double delta = 0.01;
  const double psrr = psrr_from_samples(v(1.0 - delta), v(1.0 + delta), delta);
  o.check(std::abs(ls - 1.65) <= 0.01, "ls=" + num(ls) + " %/V");
  o.check(std::abs(psrr + 49.4) <= 0.2, "psrr=" + num(psrr) + " dB");
  return o;
}

Outcome power_consistency(const RunConfig& cfg) {
  Outcome o;
  const Temperature t = Temperature::from_celsius(27.0);
  const OperatingPoint lo = solve_operating_point(cfg.design, cfg.process, t, 0.5);
  const OperatingPoint hi = solve_operating_point(cfg.design, cfg.process, t, 3.3);
  o.check(within_rel(lo.power, 0.67e-6, 0.15), "P(0.5V)=" + num(lo.power) + " W");
  o.check(within_rel(lo.i_quiescent, 1.34e-6, 0.15), "Iq(0.5V)=" + num(lo.i_quiescent) + " A");
  o.check(within_rel(hi.power, 4.3e-6, 0.20), "P(3.3V)=" + num(hi.power) + " W");
  return o;
}

Outcome compensation_contrast(const RunConfig& cfg) {
  Outcome o;
  CircuitDesign off = cfg.design;
  off.compensation_enabled = false;
  auto stats = [&](const CircuitDesign& d) {
    const SweepResult s = sweep_temperature(d, cfg.process, cfg.analysis.vdd, -40.0, 130.0, 1.0);
    const auto v = s.v_ref();
    return temperature_stats(s.axis, v, 27.0);
  };
  const TemperatureStats on = stats(cfg.design);
  const TemperatureStats no = stats(off);
  o.check(on.tc_ppm <= 20.0, "tc=" + num(on.tc_ppm));
  o.check(no.tc_ppm >= 100.0, "tc_no_comp=" + num(no.tc_ppm));
  o.check(on.max_deviation <= 0.8e-3, "dev=" + num(on.max_deviation) + " V");
  o.check(no.max_deviation >= 3.5e-3, "dev_no_comp=" + num(no.max_deviation) + " V");
  return o;
}

Outcome branch_slope_closure(const RunConfig& cfg) {
  Outcome o;
  const BranchSlopes b = branch_slopes(cfg.design, cfg.process, cfg.analysis.vdd, -40.0, 130.0, 1.0);
  o.check(within_rel(b.ptat, 0.731e-9, 0.2), "ptat=" + num(b.ptat));
  o.check(within_rel(b.ctat, -0.549e-9, 0.2), "ctat=" + num(b.ctat));
  o.check(within_rel(b.comp, 0.194e-9, 0.2), "comp=" + num(b.comp));
  o.check(std::abs(b.net) <= 30e-12, "net=" + num(b.net) + " A/C");
  return o;
}

Outcome ptat_approximation() {
  Outcome o;
  std::mt19937_64 rng(777);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  ProcessParams p;
  double worst_sat = 0.0;
  double least_unsat = 1e9;
  for (int k = 0; k < 10; ++k) {
    CircuitDesign d;
    d.r1 = std::exp(uni(std::log(2e5), std::log(5e6)));
    d.np = uni(2.0, 24.0);
    d.m1_geom.w_over_l = std::exp(uni(std::log(0.2), std::log(20.0)));
    p.slope_factor = uni(1.1, 1.6);
    const Temperature t = Temperature::from_celsius(uni(-40.0, 130.0));
    const double vt = thermal_voltage(t);
    const double closed = ptat_current(d, p, t);
    for (double m : {6.0, 8.0, 12.0}) {
      worst_sat = std::max(worst_sat,
                           std::abs(ptat_current_numerical(d, p, t, m * vt) / closed - 1.0));
    }
    least_unsat =
        std::min(least_unsat, std::abs(ptat_current_numerical(d, p, t, vt) / closed - 1.0));
  }
  o.check(worst_sat <= 5e-3, "worst rel diff at vds>=6vT=" + num(worst_sat));
  o.check(least_unsat > 1e-2, "smallest rel diff at vds=vT=" + num(least_unsat));
  return o;
}

Outcome uicm_identities() {
  Outcome o;
  o.check(uicm_F(InversionLevel(3.0)) == 0.0, "F(3)=" + num(uicm_F(InversionLevel(3.0))));
  double worst = 0.0;
  for (int k = 0; k <= 6000; ++k) {
    const double f = -10.0 + 60.0 * k / 6000.0;
    worst = std::max(worst, std::abs(uicm_F(uicm_F_inverse(f)) - f));
  }
  o.check(worst <= 1e-10, "F inverse round trip=" + num(worst));
  std::mt19937_64 rng(4242);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  ProcessParams p;
  double worst_sizing = 0.0;
  for (int k = 0; k < 20; ++k) {
    const InversionLevel lv(std::exp(uni(std::log(0.05), std::log(50.0))));
    const double nc = uni(0.5, 4.0);
    const double r2 = std::exp(uni(std::log(1e5), std::log(1e7)));
    const Temperature t = Temperature::from_celsius(uni(-40.0, 130.0));
    const double wl = m0_sizing(lv, p, t, nc, r2);
    const double id = specific_current(DeviceGeometry{wl, 1, 0.0}, p, t) * lv.value();
    const double target = uicm_gate_voltage(lv, p, t) / (nc * r2);
    worst_sizing = std::max(worst_sizing, std::abs(id / target - 1.0));
  }
  o.check(worst_sizing <= 1e-10, "sizing round trip=" + num(worst_sizing));
  return o;
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err, VREFLAB_DEFAULT_CONFIG);
  return {code, out.str(), err.str()};
}

Outcome monte_carlo_sanity(const RunConfig& cfg) {
  Outcome o;
  const CliRun a = cli({"mc", "--samples", "50", "--seed", "42"});
  const CliRun b = cli({"mc", "--samples", "50", "--seed", "42"});
  o.check(a.code == 0 && a.out == b.out, "byte-identical output for a fixed seed");

  AnalysisSettings s;
  s.t_min = 26.0;
  s.t_max = 28.0;
  s.v_min = 0.9;
  s.v_max = 1.1;
  s.v_step = 0.1;
  s.power_supplies = {1.0};

  ProcessParams flat = cfg.process;
  flat.mc_sigmas = McSigmas{};
  const McResult z = monte_carlo(cfg.design, flat, s, 20, 42);
  o.check(z.summary.v_ref_nominal.sigma == 0.0 && z.summary.tc_ppm.sigma == 0.0,
          "zero sigmas give sigma(v_ref)=" + num(z.summary.v_ref_nominal.sigma));

  ProcessParams one = flat;
  one.mc_sigmas.vth0_ref = 0.01;
  const double h = 1e-4;
  ProcessParams up = one;
  ProcessParams dn = one;
  up.vth0_ref *= 1.0 + h;
  dn.vth0_ref *= 1.0 - h;
  const double sens = (evaluate_metrics(cfg.design, up, s, 1).v_ref_nominal -
                       evaluate_metrics(cfg.design, dn, s, 1).v_ref_nominal) /
                      (2.0 * h);
  const double predicted = std::abs(sens) * one.mc_sigmas.vth0_ref;
  const McResult r = monte_carlo(cfg.design, one, s, 4000, 2024);
  const double ratio = r.summary.v_ref_nominal.sigma / predicted;
  o.check(r.failures == 0 && std::abs(ratio - 1.0) <= 0.05,
          "4000-sample sigma / first-order sigma=" + num(ratio));
  return o;
}

Outcome calibration_closure() {
  Outcome o;
  const auto out = std::filesystem::temp_directory_path() / "vreflab_acceptance_calibrated.json";
  const CliRun r = cli({"calibrate", "--config", VREFLAB_SEED_CONFIG, "--budget", "5000", "--out",
                        out.string()});
  o.check(r.code == 0, "calibrate exit code " + std::to_string(r.code));
  if (r.code != 0 && r.code != 3) {
    o.detail += " (" + r.err + ")";
    return o;
  }
  const RunConfig cfg = load_run_config(out);
  std::filesystem::remove(out);
  const Outcome c3 = power_consistency(cfg);
  const Outcome c4 = compensation_contrast(cfg);
  const Outcome c5 = branch_slope_closure(cfg);
  o.check(c3.pass, "criterion 3 on emitted config [" + c3.detail + "]");
  o.check(c4.pass, "criterion 4 on emitted config [" + c4.detail + "]");
  o.check(c5.pass, "criterion 5 on emitted config [" + c5.detail + "]");
  return o;
}

Outcome solver_contract() {
  Outcome o;
  const RootResult s2 =
      find_root_report(RootProblem{[](double x) { return x * x - 2.0; }, 1.0, 2.0, 1e-12, 100});
  o.check(std::abs(s2.root - std::sqrt(2.0)) <= 1e-10, "sqrt2 err=" + num(std::abs(s2.root - std::sqrt(2.0))));

  std::mt19937_64 rng(99);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  int worst = s2.iterations;
  int misses = 0;
  for (int k = 0; k < 2000; ++k) {
    const double lo = uni(-10.0, 0.0);
    const double hi = lo + uni(1e-3, 20.0);
    const double root = uni(lo, hi);
    const double scale = uni(0.01, 100.0);
    std::function<double(double)> f;
    switch (k % 4) {
      case 0: f = [=](double x) { return scale * (x - root); }; break;
      case 1: f = [=](double x) { return std::pow(x - root, 3) + 1e-3 * (x - root); }; break;
      case 2: f = [=](double x) { return std::expm1(scale * 0.1 * (x - root)); }; break;
      default: f = [=](double x) { return x < root ? -1.0 : 1.0 + (x - root); }; break;
    }
    const RootResult r = find_root_report(RootProblem{f, lo, hi, 1e-12, 100});
    worst = std::max(worst, r.iterations);
    if (r.root < lo || r.root > hi) ++misses;
  }
  o.check(worst <= 60, "max iterations=" + std::to_string(worst));
  o.check(misses == 0, "roots outside bracket=" + std::to_string(misses));
  return o;
}

}  // namespace

int main() {
  const RunConfig shipped = load_run_config(VREFLAB_DEFAULT_CONFIG);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"TC formula closure", tc_closure},
      {"LS/PSRR closure", ls_psrr_closure},
      {"power consistency", [&] { return power_consistency(shipped); }},
      {"compensation contrast", [&] { return compensation_contrast(shipped); }},
      {"branch-slope closure", [&] { return branch_slope_closure(shipped); }},
      {"closed-form vs numerical PTAT", ptat_approximation},
      {"UICM identities", uicm_identities},
      {"Monte Carlo determinism and sanity", [&] { return monte_carlo_sanity(shipped); }},
      {"calibration closure", calibration_closure},
      {"solver contract", solver_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
