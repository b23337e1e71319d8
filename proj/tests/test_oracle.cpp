#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "edepth/bound.hpp"
#include "edepth/oracle.hpp"

using namespace edepth;

namespace {

// Linear interpolation of the sampled envelope. A convex function lies below
// its chords, so points above this line are certainly above the bound.
double envelope_chord(const BoundCurve& curve, double p1) {
  const auto& s = curve.samples;
  auto it = std::lower_bound(s.begin(), s.end(), p1, [](const CurveSample& c, double x) { return c.p1 < x; });
  if (it == s.begin()) return it->p2_bound;
  if (it == s.end()) return s.back().p2_bound;
  const auto& a = *(it - 1);
  const double t = (p1 - a.p1) / (it->p1 - a.p1);
  return a.p2_bound + t * (it->p2_bound - a.p2_bound);
}

}  // namespace

TEST(Oracle, AgreesWithBoundOnSmallGroups) {
  for (int m : {2, 3, 4, 5}) {
    const double lo = std::max(p1_lim1(m), p1_lim2(m));
    for (double t : {0.05, 0.5, 0.95}) {
      const double p1 = lo + t * (p1_max(m) - lo);
      const double bound = p2_min(p1, m);
      const double oracle = minimize_full(p1, m);
      EXPECT_NEAR(oracle, bound, std::max(1e-6 * bound, 1e-12)) << "M=" << m << " p1=" << p1;
    }
  }
}

TEST(Oracle, AgreesJustBelowPeak) {
  for (int m : {3, 10}) {
    const double p1 = p1_max(m) * (1.0 - 1e-12);
    const double bound = p2_min(p1, m);
    EXPECT_NEAR(minimize_full(p1, m), bound, 1e-8 * bound) << "M=" << m;
  }
}

TEST(Oracle, ZeroInsideZeroRegion) {
  EXPECT_LE(minimize_full(0.2, 3), 1e-12);
  EXPECT_LE(minimize_full(0.1, 8), 1e-12);
}

TEST(Oracle, RejectsBadInput) {
  EXPECT_THROW(minimize_full(0.3, 1), domain_error);
  EXPECT_THROW(minimize_full(0.3, 11), domain_error);
  EXPECT_THROW(minimize_full(0.0, 3), domain_error);
  EXPECT_THROW(minimize_full(0.45, 3), infeasible_error);
}

TEST(Oracle, DeterministicAcrossThreadCounts) {
  const double a = minimize_full(0.36, 3, {64, 9, 1});
  const double b = minimize_full(0.36, 3, {64, 9, 3});
  EXPECT_EQ(a, b);
}

TEST(OracleProperty, ScatterNeverUndercutsBound) {
  for (int m : {2, 3, 4, 6}) {
    const auto curve = build_curve(m, 256);
    const auto cloud = sample_states(m, 200000, 100 + m);
    ASSERT_EQ(cloud.points.size(), 200000u);
    std::size_t exact_checks = 0;
    for (const auto& p : cloud.points) {
      if (p.p1 > p1_max(m)) {
        ADD_FAILURE() << "p1 above p1_max for M=" << m;
        continue;
      }
      if (p.p2 >= envelope_chord(curve, p.p1)) continue;
      ++exact_checks;
      EXPECT_GE(p.p2, p2_bound(p.p1, m) - 1e-10) << "M=" << m << " p1=" << p.p1;
    }
    RecordProperty("exact_checks_M" + std::to_string(m), static_cast<int>(exact_checks));
  }
}

TEST(Oracle, ScatterIsDeterministic) {
  const auto a = sample_states(5, 5000, 42, 1);
  const auto b = sample_states(5, 5000, 42, 4);
  const auto c = sample_states(5, 5000, 43, 1);
  ASSERT_EQ(a.points.size(), b.points.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].p1, b.points[i].p1);
    EXPECT_EQ(a.points[i].p2, b.points[i].p2);
    differs = differs || a.points[i].p1 != c.points[i].p1;
  }
  EXPECT_TRUE(differs);
}

TEST(Oracle, ScatterLimits) {
  EXPECT_THROW(sample_states(0, 10, 1), size_error);
  EXPECT_THROW(sample_states(17, 10, 1), size_error);
  EXPECT_THROW(sample_states(3, 0, 1), size_error);
  StreamRng rng(1, 2);
  for (int i = 0; i < 1000; ++i) {
    const auto g = sample_group(rng);
    EXPECT_TRUE(g.valid());
    EXPECT_GE(g.b, 0.0);
  }
}

TEST(Oracle, SyntheticMeasurement) {
  const auto r = synthetic_measurement(0.0023, 0.02, 4e10, 0.1, 0.15, 0.025, Level::raw);
  EXPECT_DOUBLE_EQ(r.p1.value, 0.0023);
  EXPECT_DOUBLE_EQ(r.p1.sigma, 0.00023);
  EXPECT_DOUBLE_EQ(r.g2.sigma, 0.003);
  EXPECT_DOUBLE_EQ(r.atoms.sigma, 1e9);
  EXPECT_THROW(synthetic_measurement(0.0, 0.02, 1e3), domain_error);
  EXPECT_THROW(synthetic_measurement(0.1, -1.0, 1e3), domain_error);
}
