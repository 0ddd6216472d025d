#pragma once

// Bracketed scalar root finding.
//
// The method is ITP (interpolate, truncate, project): a regula-falsi estimate
// is pulled towards the bisection midpoint and then projected into a
// shrinking window around it. The iterate never leaves the bracket, the
// number of iterations never exceeds ceil(log2((hi - lo) / (2 tol))) + n0,
// and for smooth objectives convergence is superlinear.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "vreflab/error.hpp"

namespace vreflab {

struct RootProblem {
  std::function<double(double)> objective;
  double bracket_lo = 0.0;
  double bracket_hi = 1.0;
  double abs_tol = 1e-12;
  int max_iter = 100;
};

struct RootResult {
  double root = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

namespace solver_detail {

inline double checked(const std::function<double(double)>& f, double x, int& evaluations) {
  ++evaluations;
  const double y = f(x);
  if (std::isnan(y)) {
    fail(ErrorCode::SolverDivergence, "objective returned NaN at x = " + std::to_string(x));
  }
  return y;
}

}  // namespace solver_detail

/// Solves prob.objective(x) = 0 on [bracket_lo, bracket_hi] and reports the
/// iteration count. Throws BracketInvalid or MaxIterationsExceeded.
inline RootResult find_root_report(const RootProblem& prob) {
  using solver_detail::checked;
  if (!prob.objective) fail(ErrorCode::InvalidArgument, "root problem has no objective");
  double a = prob.bracket_lo;
  double b = prob.bracket_hi;
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    fail(ErrorCode::BracketInvalid, "bracket must satisfy lo < hi, got [" + std::to_string(a) +
                                        ", " + std::to_string(b) + "]");
  }
  if (!(prob.abs_tol > 0.0)) fail(ErrorCode::InvalidArgument, "abs_tol must be > 0");

  RootResult out;
  double ya = checked(prob.objective, a, out.evaluations);
  if (ya == 0.0) {
    out.root = a;
    return out;
  }
  double yb = checked(prob.objective, b, out.evaluations);
  if (yb == 0.0) {
    out.root = b;
    return out;
  }
  if ((ya > 0.0) == (yb > 0.0)) {
    fail(ErrorCode::BracketInvalid, "objective has the same sign at both ends of [" +
                                        std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  // Work with an increasing orientation: ya < 0 < yb.
  const double sign = ya < 0.0 ? 1.0 : -1.0;
  ya *= sign;
  yb *= sign;

  const double eps = prob.abs_tol;
  const double k1 = 0.2 / (b - a);
  constexpr double k2 = 2.0;
  constexpr int n0 = 1;
  const int n_half = std::max(0, static_cast<int>(std::ceil(std::log2((b - a) / (2.0 * eps)))));
  const int n_max = n_half + n0;

  int j = 0;
  while (b - a > 2.0 * eps) {
    if (out.iterations >= prob.max_iter) {
      fail(ErrorCode::MaxIterationsExceeded,
           "root not within " + std::to_string(eps) + " after " + std::to_string(prob.max_iter) +
               " iterations");
    }
    const double x_half = 0.5 * (a + b);
    const double r = eps * std::ldexp(1.0, n_max - j) - 0.5 * (b - a);
    const double delta = k1 * std::pow(b - a, k2);
    const double x_f = (yb * a - ya * b) / (yb - ya);
    const double sigma = x_half - x_f >= 0.0 ? 1.0 : -1.0;
    const double x_t = delta <= std::abs(x_half - x_f) ? x_f + sigma * delta : x_half;
    double x = std::abs(x_t - x_half) <= r ? x_t : x_half - sigma * r;
    // Rounding can land exactly on an end point once the bracket nears the
    // resolution of double; fall back to the midpoint then.
    if (!(x > a && x < b)) x = x_half;
    if (!(x > a && x < b)) {
      fail(ErrorCode::MaxIterationsExceeded,
           "tolerance " + std::to_string(eps) + " is below the floating-point resolution near " +
               std::to_string(x_half));
    }

    const double y = sign * checked(prob.objective, x, out.evaluations);
    ++out.iterations;
    ++j;
    if (y > 0.0) {
      b = x;
      yb = y;
    } else if (y < 0.0) {
      a = x;
      ya = y;
    } else {
      out.root = x;
      return out;
    }
  }
  out.root = 0.5 * (a + b);
  return out;
}

inline double find_root(const RootProblem& prob) { return find_root_report(prob).root; }

}  // namespace vreflab
