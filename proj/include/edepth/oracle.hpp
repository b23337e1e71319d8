#pragma once

// Brute-force checks that share no code with the bound module: random state
// clouds and a multistart constrained minimization over all real product
// states.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "edepth/ansatz.hpp"
#include "edepth/errors.hpp"
#include "edepth/experiment.hpp"
#include "edepth/optimize.hpp"
#include "edepth/parallel.hpp"
#include "edepth/rng.hpp"

namespace edepth {

inline constexpr int kMaxScatterGroups = 16;
inline constexpr std::size_t kMaxScatterSamples = 100'000'000;
inline constexpr const char* kSamplingMeasure = "uniform quarter disk a >= 0, b >= 0, a^2+b^2 <= 1 per group";

struct ScatterCloud {
  int groups = 1;
  std::vector<ProbabilityPair> points;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// One group drawn uniformly from the quarter disk, c = -sqrt(1 - a^2 - b^2).
inline GroupAmplitudes sample_group(StreamRng& rng) {
  const double r = std::sqrt(rng.uniform());
  const double t = 0.5 * std::numbers::pi * rng.uniform();
  const double a = r * std::cos(t);
  const double b = r * std::sin(t);
  return {a, b, -std::sqrt(std::max(0.0, 1.0 - r * r))};
}

/// n random M-group states; state i uses stream (seed, i).
inline ScatterCloud sample_states(int groups, std::size_t n, std::uint64_t seed,
                                  unsigned threads = thread_count()) {
  if (groups < 1 || groups > kMaxScatterGroups) throw size_error("scatter sampling supports 1 <= M <= 16");
  if (n < 1 || n > kMaxScatterSamples) throw size_error("scatter sampling supports 1 <= n <= 1e8");
  ScatterCloud cloud{groups, std::vector<ProbabilityPair>(n), n, seed};
  parallel_for(
      n,
      [&](std::size_t i) {
        StreamRng rng(seed, i);
        std::array<GroupAmplitudes, kMaxScatterGroups> g;
        for (int k = 0; k < groups; ++k) g[static_cast<std::size_t>(k)] = sample_group(rng);
        cloud.points[i] = probabilities(std::span<const GroupAmplitudes>(g.data(), static_cast<std::size_t>(groups)));
      },
      threads);
  return cloud;
}


// ---------------------------------------------------------------------------

struct OracleOptions {
  std::size_t starts = 0;  // 0 picks 256 for M <= 5 and 1024 above
  std::uint64_t seed = 0x5eed;
  unsigned threads = thread_count();
};

/// Constraint tolerance for accepting an oracle point.
inline constexpr double kFeasibleP1 = 4e-15;

inline std::size_t default_starts(int groups) { return groups <= 5 ? 256 : 1024; }

namespace detail {

/// p1 and p2 of arbitrary real groups given as angles, with gradients. Group i
/// is (cos th, sin th cos ph, sin th sin ph), which covers every real unit vector.
struct AngleModel {
  int m;

  struct Eval {
    double p1, p2;
  };

  static std::array<double, 3> group(double th, double ph) {
    return {std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph)};
  }

  Eval eval(const std::vector<double>& x, std::vector<double>* g1, std::vector<double>* g2) const {
    const auto n = static_cast<std::size_t>(m);
    std::vector<TruncatedProduct<double>> prefix(n + 1), suffix(n + 1);
    std::vector<std::array<double, 3>> abc(n);
    for (std::size_t i = 0; i < n; ++i) abc[i] = group(x[2 * i], x[2 * i + 1]);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i].times(abc[i][0], abc[i][1], abc[i][2]);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1].times(abc[i][0], abc[i][1], abc[i][2]);
    const auto& q = prefix[n];
    const double dm = m;
    const double amp = kSqrt2 * q.xx + q.y;
    Eval e{q.x * q.x / dm, amp * amp / (dm * dm)};
    if (g1 == nullptr) return e;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pa = prefix[i];
      const auto& sb = suffix[i + 1];
      // Product of all other groups.
      const TruncatedProduct<double> o{pa.one * sb.one, pa.one * sb.x + pa.x * sb.one,
                                       pa.one * sb.xx + pa.x * sb.x + pa.xx * sb.one, pa.one * sb.y + pa.y * sb.one};
      // d(X, XX, Y)/d(a, b, c)
      const double dx_da = o.x, dxx_da = o.xx, dy_da = o.y;
      const double dx_db = o.one, dxx_db = o.x;
      const double dy_dc = o.one;
      const double dp1_da = 2.0 * q.x * dx_da / dm, dp1_db = 2.0 * q.x * dx_db / dm;
      const double k2 = 2.0 * amp / (dm * dm);
      const double dp2_da = k2 * (kSqrt2 * dxx_da + dy_da);
      const double dp2_db = k2 * kSqrt2 * dxx_db;
      const double dp2_dc = k2 * dy_dc;
      const double th = x[2 * i], ph = x[2 * i + 1];
      const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
      // a = ct, b = st cp, c = st sp
      const double da_dth = -st, db_dth = ct * cp, dc_dth = ct * sp;
      const double db_dph = -st * sp, dc_dph = st * cp;
      (*g1)[2 * i] = dp1_da * da_dth + dp1_db * db_dth;
      (*g1)[2 * i + 1] = dp1_db * db_dph;
      (*g2)[2 * i] = dp2_da * da_dth + dp2_db * db_dth + dp2_dc * dc_dth;
      (*g2)[2 * i + 1] = dp2_db * db_dph + dp2_dc * dc_dph;
    }
    return e;
  }
};

/// One augmented-Lagrangian run from x, then an exact projection onto p1 = target
/// along the p1 gradient. Returns the smallest p2 among the visited points that
/// meet the constraint to a few ulps (start, descent end, projection), or +inf.
/// A looser test would leak below the bound near p1_max, where dp2/dp1 diverges.
inline double oracle_descent(const AngleModel& model, double target, std::vector<double> x) {
  const std::size_t n = x.size();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& y) {
    const auto e = model.eval(y, nullptr, nullptr);
    if (std::abs(e.p1 - target) <= kFeasibleP1) best = std::min(best, e.p2);
  };
  consider(x);
  double lambda = 0.0;
  double mu = 10.0;
  double prev_viol = std::numeric_limits<double>::infinity();
  std::vector<double> g1(n), g2(n);
  for (int outer = 0; outer < 40; ++outer) {
    const optimize::Objective f = [&](const std::vector<double>& y, std::vector<double>& grad) {
      const auto e = model.eval(y, &g1, &g2);
      const double r = e.p1 - target;
      for (std::size_t i = 0; i < n; ++i) grad[i] = g2[i] + (lambda + mu * r) * g1[i];
      return e.p2 + lambda * r + 0.5 * mu * r * r;
    };
    x = optimize::bfgs(f, x, {300, 1e-13, 1e-16}).x;
    const double viol = model.eval(x, nullptr, nullptr).p1 - target;
    lambda += mu * viol;
    if (std::abs(viol) < 1e-13) break;
    if (std::abs(viol) > 0.25 * prev_viol) mu *= 4.0;
    prev_viol = std::abs(viol);
  }
  consider(x);
  model.eval(x, &g1, &g2);
  double gn = 0.0;
  for (double v : g1) gn += v * v;
  if (!(gn > 0.0)) return best;
  auto moved = [&](double s) {
    std::vector<double> y(x);
    for (std::size_t i = 0; i < n; ++i) y[i] += s * g1[i];
    return y;
  };
  auto resid = [&](double s) { return model.eval(moved(s), nullptr, nullptr).p1 - target; };
  const double r0 = resid(0.0);
  if (r0 == 0.0) return best;
  // Expand a bracket in the direction that reduces the residual.
  double step = -r0 / gn;
  double lo = 0.0, hi = step;
  bool found = false;
  for (int k = 0; k < 60; ++k) {
    if ((resid(hi) > 0.0) != (r0 > 0.0)) {
      found = true;
      break;
    }
    lo = hi;
    hi *= 2.0;
  }
  if (!found || std::abs(hi) > 1.0) return best;
  consider(moved(optimize::bisect_root(resid, lo, hi)));
  return best;
}

}  // namespace detail

/// Best p2 found by multistart constrained descent over the 2M angles.
/// Start k draws its angles from stream (seed, k); four structured starts
/// (all groups equal, one excited group, and both exactly) are added in front.
inline double minimize_full(double p1, int groups, const OracleOptions& opt = {}) {
  if (groups < 2 || groups > 10) throw domain_error("oracle minimization supports 2 <= M <= 10");
  if (!(p1 > 0.0 && p1 <= 1.0)) throw domain_error("p1 must lie in (0, 1]");
  const double m = groups;
  const double top = std::pow(1.0 - 1.0 / m, m - 1.0);
  if (p1 > top * (1.0 + 1e-12)) throw infeasible_error("p1 exceeds the largest reachable value");
  const detail::AngleModel model{groups};
  const std::size_t n = static_cast<std::size_t>(2 * groups);
  const std::size_t starts = opt.starts == 0 ? default_starts(groups) : opt.starts;

  std::vector<std::vector<double>> xs;
  {
    // Equal groups with p1 = M a^(2M-2) b^2 on c = 0 solved for the angle.
    const double th = std::asin(std::min(1.0, std::sqrt(p1)));
    xs.push_back(std::vector<double>(n, 0.0));
    for (int i = 0; i < groups; ++i) {
      xs.back()[2 * i] = th / std::sqrt(m);
      xs.back()[2 * i + 1] = -0.05;
    }
    std::vector<double> one(n, 0.0);
    one[0] = std::asin(std::min(1.0, std::sqrt(p1 * m)));
    one[1] = -0.05;
    for (int i = 1; i < groups; ++i) {
      one[2 * i] = 0.05;
      one[2 * i + 1] = -0.05;
    }
    xs.push_back(one);
    // The two p1 maximizers for M = 2 and the symmetric maximizer for all M, exactly.
    std::vector<double> excited(n, 0.0);
    excited[0] = 0.5 * std::numbers::pi;
    xs.push_back(excited);
    std::vector<double> peak(n, 0.0);
    for (int i = 0; i < groups; ++i) peak[2 * i] = std::acos(std::sqrt(1.0 - 1.0 / m));
    xs.push_back(peak);
  }
  for (std::size_t k = 0; k < starts; ++k) {
    StreamRng rng(opt.seed, k);
    std::vector<double> x(n);
    for (int i = 0; i < groups; ++i) {
      x[2 * i] = rng.uniform(0.0, std::numbers::pi);
      x[2 * i + 1] = rng.uniform(-std::numbers::pi, std::numbers::pi);
    }
    xs.push_back(std::move(x));
  }
  std::vector<double> values(xs.size(), std::numeric_limits<double>::infinity());
  parallel_for(
      xs.size(), [&](std::size_t k) { values[k] = detail::oracle_descent(model, p1, xs[k]); }, opt.threads);
  const double best = *std::min_element(values.begin(), values.end());
  if (!std::isfinite(best)) throw infeasible_error("no start reached the p1 constraint");
  return std::max(best, 0.0);
}

/// Record with p1 = eta_total and p2 = g2 p1^2 / 2 expressed through g2; the
/// relative uncertainties are applied to p1, g2 and N.
inline MeasurementRecord synthetic_measurement(double eta_total, double g2_source, double atoms,
                                               double rel_sigma_p1 = 0.0, double rel_sigma_g2 = 0.0,
                                               double rel_sigma_atoms = 0.0, Level level = Level::raw) {
  if (!(eta_total > 0.0 && eta_total <= 1.0)) throw domain_error("eta_total must lie in (0, 1]");
  if (!(g2_source >= 0.0)) throw domain_error("g2 must be >= 0");
  return {{eta_total, rel_sigma_p1 * eta_total},
          {g2_source, rel_sigma_g2 * g2_source},
          {atoms, rel_sigma_atoms * atoms},
          level};
}

}  // namespace edepth
