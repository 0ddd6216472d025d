#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "vreflab/solver.hpp"

using namespace vreflab;
using vreflab::testing::uniform;

TEST(FindRoot, Linear) {
  RootProblem p{[](double x) { return x - 0.3; }, 0.0, 1.0, 1e-12, 100};
  EXPECT_NEAR(find_root(p), 0.3, 1e-12);
}

TEST(FindRoot, SquareRootOfTwo) {
  RootProblem p{[](double x) { return x * x - 2.0; }, 1.0, 2.0, 1e-12, 100};
  const RootResult r = find_root_report(p);
  EXPECT_NEAR(r.root, 1.4142135623730951, 1e-10);
  EXPECT_LE(r.iterations, 60);
}

TEST(FindRoot, EndpointRootReturnsImmediately) {
  int calls = 0;
  RootProblem p{[&](double x) {
                  ++calls;
                  return x;
                },
                0.0, 1.0, 1e-12, 100};
  const RootResult r = find_root_report(p);
  EXPECT_EQ(r.root, 0.0);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(calls, 1);
}

TEST(FindRoot, SameSignBracketRejected) {
  RootProblem p{[](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-12, 100};
  try {
    find_root(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BracketInvalid);
  }
}

TEST(FindRoot, InvertedBracketRejected) {
  RootProblem p{[](double x) { return x; }, 1.0, -1.0, 1e-12, 100};
  EXPECT_THROW(find_root(p), Error);
}

TEST(FindRoot, IterationCapReported) {
  RootProblem p{[](double x) { return x - 0.123456789; }, 0.0, 1.0, 1e-15, 3};
  try {
    find_root(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MaxIterationsExceeded);
  }
}

TEST(FindRoot, NaNObjectiveIsDivergence) {
  RootProblem p{[](double x) { return x > 0.5 ? std::nan("") : -1.0; }, 0.0, 1.0, 1e-12, 100};
  try {
    find_root(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SolverDivergence);
  }
}

TEST(FindRoot, DecreasingObjective) {
  RootProblem p{[](double x) { return 0.7 - x; }, 0.0, 1.0, 1e-12, 100};
  EXPECT_NEAR(find_root(p), 0.7, 1e-12);
}

// Property suite: random monotone and non-monotone objectives with a single
// sign change. Roots stay inside the bracket and no run needs more than 60
// iterations.
TEST(FindRootProperty, BracketRespectAndIterationBound) {
  int worst = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const double lo = uniform(-10.0, 0.0);
    const double hi = lo + uniform(1e-3, 20.0);
    const double root = uniform(lo, hi);
    const int kind = trial % 5;
    const double scale = std::exp(uniform(-20.0, 20.0));
    std::function<double(double)> f;
    switch (kind) {
      case 0: f = [=](double x) { return scale * (x - root); }; break;
      case 1: f = [=](double x) { return std::pow(x - root, 3); }; break;
      case 2: f = [=](double x) { return std::tanh(50.0 * (x - root)); }; break;
      case 3: f = [=](double x) { return std::exp(x - root) - 1.0; }; break;
      default: f = [=](double x) { return x < root ? -1.0 : 1.0 + (x - root); }; break;
    }
    double a = lo;
    double b = hi;
    bool escaped = false;
    RootProblem p;
    p.objective = [&](double x) {
      if (x < lo || x > hi) escaped = true;
      return f(x);
    };
    p.bracket_lo = lo;
    p.bracket_hi = hi;
    p.abs_tol = 1e-12 * std::max(1.0, std::abs(hi - lo));
    const RootResult r = find_root_report(p);
    EXPECT_FALSE(escaped);
    EXPECT_GE(r.root, a);
    EXPECT_LE(r.root, b);
    EXPECT_LE(r.iterations, 60) << "kind " << kind;
    if (kind != 1) {
      // The cubic is flat at its root, so only its x-error is meaningful below.
      EXPECT_NEAR(r.root, root, 2.0 * p.abs_tol + 1e-15 * std::abs(root));
    } else {
      EXPECT_NEAR(r.root, root, 1e-4);
    }
    worst = std::max(worst, r.iterations);
  }
  EXPECT_LE(worst, 60);
}

TEST(FindRootProperty, UnitBracketBoundNearForty) {
  for (int trial = 0; trial < 200; ++trial) {
    const double root = uniform(0.0, 1.0);
    RootProblem p{[=](double x) { return (x < root ? -1.0 : 1.0); }, 0.0, 1.0, 1e-12, 100};
    EXPECT_LE(find_root_report(p).iterations, 40);
  }
}

TEST(FindRoot, Deterministic) {
  RootProblem p{[](double x) { return std::cos(x) - x; }, 0.0, 1.0, 1e-13, 100};
  const RootResult a = find_root_report(p);
  const RootResult b = find_root_report(p);
  EXPECT_EQ(a.root, b.root);
  EXPECT_EQ(a.iterations, b.iterations);
}
