#pragma once

// Lower bounds p2_min(p1, M) over M-separable states, the curves they trace,
// and their inversion into a maximal compatible M and a depth K = N/M.
//
// For M >= 5 the symmetric stationary branch is the global minimum and the
// problem is one-dimensional. For M <= 4 every configuration of stationary
// partners is searched (see detail::ConfigurationSearch). Mixed states are
// covered by the lower convex envelope of the pure-state curve.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "edepth/ansatz.hpp"
#include "edepth/errors.hpp"
#include "edepth/optimize.hpp"
#include "edepth/stationary.hpp"

namespace edepth {

struct SymmetricOptions {
  std::size_t grid = 1024;
  double tol = 1e-14;
};

/// Coarse preset for bulk use (Monte Carlo); agrees with the default to ~1e-12.
inline constexpr SymmetricOptions kFastSymmetric{64, 1e-12};

namespace detail {

inline void check_groups(long long groups) {
  if (groups < 1) throw domain_error("group count must be >= 1");
}

}  // namespace detail

/// One group fully excited, the rest in the ground state.
inline double p1_lim1(long long groups) {
  detail::check_groups(groups);
  return 1.0 / static_cast<double>(groups);
}

/// (1 - 1/M)^(M-1), with M = 1 giving 1.
inline double p1_max(long long groups) {
  detail::check_groups(groups);
  if (groups == 1) return 1.0;
  const double m = static_cast<double>(groups);
  return std::exp((m - 1.0) * std::log1p(-1.0 / m));
}

/// Largest symmetric p1 with p2 = 0. On the zero set b^2 solves
/// k b^4 + b^2 - (1 - a^2) = 0 with k = (M-1)^2/(2 a^2); p1 = M a^(2M-2) b^2 is
/// then maximized over a, parametrized by log u with u = M (1 - a).
inline double p1_lim2(long long groups) {
  detail::check_groups(groups);
  if (groups == 1) return 1.0;
  const double m = static_cast<double>(groups);
  auto neg_log_p1 = [m](double log_u) {
    const double u = std::exp(log_u);
    if (!(u > 0.0) || u >= m) return std::numeric_limits<double>::infinity();
    const double a = 1.0 - u / m;
    const double r = (u / m) * (2.0 - u / m);  // 1 - a^2
    const double k = (m - 1.0) * (m - 1.0) / (2.0 * a * a);
    const double b2 = 2.0 * r / (1.0 + std::sqrt(1.0 + 4.0 * k * r));
    return -(std::log(m) + (2.0 * m - 2.0) * std::log1p(-u / m) + std::log(b2));
  };
  const auto best = optimize::grid_golden(neg_log_p1, std::log(m) - 28.0, std::log(m), 1024, 1e-15);
  return std::exp(-best.value);
}

namespace detail {

inline void check_p1(double p1, long long groups) {
  if (!(p1 >= 0.0) || p1 > 1.0) throw domain_error("p1 must lie in [0, 1]");
  if (p1 > p1_max(groups) * (1.0 + 1e-12)) {
    throw infeasible_error("p1 exceeds p1_max(M) = (1 - 1/M)^(M-1)");
  }
}

/// Symmetric amplitude h(u) whose square is p2 once b^2 is eliminated through p1,
/// with a = 1 - u/M.
struct SymmetricProblem {
  double m;
  double alpha;  // (M-1) p1 / (sqrt2 M)
  double beta;   // p1 / M

  SymmetricProblem(double p1, long long groups)
      : m(static_cast<double>(groups)),
        alpha((m - 1.0) * p1 / (kSqrt2 * m)),
        beta(p1 / m) {}

  /// 1 - a^2 - b^2(a); negative outside the feasible interval.
  double rest(double u) const {
    if (!(u > 0.0)) return -beta;
    if (u >= m) return -1.0;
    const double a = 1.0 - u / m;
    const double e2 = std::exp(2.0 * m * std::log1p(-u / m));  // a^(2M)
    if (!(e2 > 0.0)) return -1.0;
    return (u / m) * (2.0 - u / m) - beta * a * a / e2;
  }

  double h(double u) const {
    const double a = 1.0 - u / m;
    const double e = std::exp(m * std::log1p(-u / m));  // a^M
    return alpha / e - (e / a) * std::sqrt(std::max(rest(u), 0.0));
  }

  /// u at which a^2 + b^2(a) is smallest.
  double u_star(double p1) const {
    return -m * std::expm1(std::log(p1 * (m - 1.0) / m) / (2.0 * m));
  }
};

}  // namespace detail

/// Minimum of p2 over symmetric states with the given p1.
inline double p2_min_symmetric(double p1, long long groups, const SymmetricOptions& opt = {}) {
  detail::check_groups(groups);
  detail::check_p1(p1, groups);
  if (groups == 1 || p1 == 0.0) return 0.0;
  const detail::SymmetricProblem prob(p1, groups);
  const double us = prob.u_star(p1);
  if (!(prob.rest(us) > 0.0)) {
    // p1 == p1_max up to rounding: a single feasible point.
    const double v = prob.h(us);
    return detail::clamp_probability(v * v);
  }
  const double u_lo = optimize::bisect_root([&](double u) { return prob.rest(u); }, 0.0, us);
  const double u_hi = optimize::bisect_root([&](double u) { return prob.rest(u); }, us, prob.m);
  const auto best = optimize::grid_golden([&](double u) { return prob.h(u); }, u_lo, u_hi, opt.grid, opt.tol);
  const double amp = std::max(best.value, 0.0);
  return detail::clamp_probability(amp * amp);
}

// ---------------------------------------------------------------------------
// Configuration search for M <= 4.

namespace detail {

/// Every stationary point is a seed plus partners from its slots. Seeds cover
/// b > 0 (a global sign flip of all b leaves p1 and p2 unchanged) through
/// warped coordinates (s, w) in (0,1)^2:
///   a = sin(pi s/2),  b = sin(pi w/2) cos(pi s/2),  c = -cos(pi s/2) cos(pi w/2),
/// which crowd samples towards a -> 1 and b -> sqrt(1 - a^2) where the optima live.
class ConfigurationSearch {
public:
  static constexpr int kRows = 256;
  static constexpr int kCols = 256;
  static constexpr std::size_t kCandidates = 24;

  explicit ConfigurationSearch(int groups) : groups_(groups) {
    for (int n1 = 0; n1 < groups; ++n1) {
      for (int n2 = 0; n1 + n2 < groups; ++n2) {
        for (int n3 = 0; n1 + n2 + n3 < groups; ++n3) {
          tuples_.push_back({groups - n1 - n2 - n3, n1, n2, n3});
        }
      }
    }
    const auto& slots = seed_slots();
    const std::size_t cells = static_cast<std::size_t>(kRows) * kCols;
    p1_.assign(tuples_.size() * cells, kNaN);
    p2_.assign(tuples_.size() * cells, kNaN);
    for (std::size_t t = 0; t < tuples_.size(); ++t) {
      for (std::size_t cell = 0; cell < cells; ++cell) {
        if (!slots[cell]) continue;
        if (const auto pp = slot_probabilities(*slots[cell], tuples_[t])) {
          p1_[t * cells + cell] = pp->p1;
          p2_[t * cells + cell] = pp->p2;
        }
      }
    }
  }

  /// Smallest p2 found over all configurations at exactly this p1.
  double minimize(double target) const {
    auto cands = candidates(target);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cands) best = std::min(best, refine(c, target));
    return best;
  }

  static GroupAmplitudes seed_at(double s, double w) {
    constexpr double h = 0.5 * std::numbers::pi;
    const double r = std::cos(h * s);
    return {std::sin(h * s), std::sin(h * w) * r, -r * std::cos(h * w)};
  }

private:
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  struct Candidate {
    std::size_t tuple;
    double s0, w0, s1, w1;  // edge endpoints in seed coordinates
    double estimate;
  };

  static double coord(int i, int n) { return (i + 0.5) / n; }

  static const std::vector<std::optional<PartnerSlots>>& seed_slots() {
    static const std::vector<std::optional<PartnerSlots>> table = [] {
      std::vector<std::optional<PartnerSlots>> out(static_cast<std::size_t>(kRows) * kCols);
      for (int i = 0; i < kRows; ++i) {
        for (int j = 0; j < kCols; ++j) {
          try {
            out[static_cast<std::size_t>(i) * kCols + j] =
                partner_slots(seed_at(coord(i, kRows), coord(j, kCols)));
          } catch (const std::domain_error&) {
          }
        }
      }
      return out;
    }();
    return table;
  }

  std::optional<ProbabilityPair> eval(std::size_t tuple, double s, double w) const {
    if (!(s > 0.0 && s < 1.0 && w > 0.0 && w < 1.0)) return std::nullopt;
    try {
      return slot_probabilities(partner_slots(seed_at(s, w)), tuples_[tuple]);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  }

  std::vector<Candidate> candidates(double target) const {
    const std::size_t cells = static_cast<std::size_t>(kRows) * kCols;
    std::vector<Candidate> out;
    for (std::size_t t = 0; t < tuples_.size(); ++t) {
      const double* q1 = p1_.data() + t * cells;
      const double* q2 = p2_.data() + t * cells;
      auto edge = [&](int i0, int j0, int i1, int j1) {
        const std::size_t c0 = static_cast<std::size_t>(i0) * kCols + j0;
        const std::size_t c1 = static_cast<std::size_t>(i1) * kCols + j1;
        const double d0 = q1[c0] - target;
        const double d1 = q1[c1] - target;
        if (!std::isfinite(d0) || !std::isfinite(d1) || !(d0 * d1 <= 0.0) || d0 == d1) return;
        const double f = d0 / (d0 - d1);
        out.push_back({t, coord(i0, kRows), coord(j0, kCols), coord(i1, kRows), coord(j1, kCols),
                       q2[c0] + f * (q2[c1] - q2[c0])});
      };
      for (int i = 0; i < kRows; ++i) {
        for (int j = 0; j < kCols; ++j) {
          if (j + 1 < kCols) edge(i, j, i, j + 1);
          if (i + 1 < kRows) edge(i, j, i + 1, j);
        }
      }
    }
    const std::size_t keep = std::min(kCandidates, out.size());
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(),
                      [](const Candidate& x, const Candidate& y) { return x.estimate < y.estimate; });
    out.resize(keep);
    return out;
  }

  /// Walks along the level set p1 = target near the candidate edge: moves by tau
  /// along the tangent and projects back along the normal by bisection.
  double refine(const Candidate& c, double target) const {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    auto p1_at = [&](double s, double w) {
      const auto r = eval(c.tuple, s, w);
      return r ? r->p1 - target : kNaN;
    };
    const double g0 = p1_at(c.s0, c.w0);
    const double g1 = p1_at(c.s1, c.w1);
    if (!std::isfinite(g0) || !std::isfinite(g1) || g0 * g1 > 0.0) return kInf;
    const double lam = optimize::bisect_root(
        [&](double l) { return p1_at(c.s0 + l * (c.s1 - c.s0), c.w0 + l * (c.w1 - c.w0)); }, 0.0, 1.0);
    double ps = c.s0 + lam * (c.s1 - c.s0);
    double pw = c.w0 + lam * (c.w1 - c.w0);
    const auto start = eval(c.tuple, ps, pw);
    double best = start ? start->p2 : kInf;

    const double cell = 1.0 / kRows;
    for (int pass = 0; pass < 8; ++pass) {
      constexpr double fd = 1e-7;
      const double ds = (p1_at(ps + fd, pw) - p1_at(ps - fd, pw)) / (2 * fd);
      const double dw = (p1_at(ps, pw + fd) - p1_at(ps, pw - fd)) / (2 * fd);
      const double norm = std::hypot(ds, dw);
      if (!std::isfinite(norm) || norm == 0.0) break;
      const double ns = ds / norm, nw = dw / norm;  // normal, p1 increasing
      const double ts = -nw, tw = ns;               // tangent
      const double radius = 2.0 * cell;

      auto project = [&](double tau) -> std::optional<std::pair<double, double>> {
        const double xs = ps + tau * ts;
        const double xw = pw + tau * tw;
        const double reach = 2.0 * std::abs(tau) + 0.25 * cell;
        const double lo = p1_at(xs - reach * ns, xw - reach * nw);
        const double hi = p1_at(xs + reach * ns, xw + reach * nw);
        if (!(lo < 0.0 && hi > 0.0)) return std::nullopt;
        const double sig = optimize::bisect_root(
            [&](double sg) {
              const double v = p1_at(xs + sg * ns, xw + sg * nw);
              return std::isfinite(v) ? v : 1.0;
            },
            -reach, reach);
        return std::pair{xs + sig * ns, xw + sig * nw};
      };
      auto p2_along = [&](double tau) {
        const auto x = project(tau);
        if (!x) return kInf;
        const auto r = eval(c.tuple, x->first, x->second);
        return r ? r->p2 : kInf;
      };
      const auto m = optimize::golden_section(p2_along, -radius, radius, 1e-13);
      if (!(m.value < best)) break;
      best = m.value;
      const auto x = project(m.x);
      if (!x) break;
      ps = x->first;
      pw = x->second;
      if (std::abs(m.x) < 0.9 * radius) break;  // interior minimum
    }
    return best;
  }

  int groups_;
  std::vector<std::array<int, 4>> tuples_;
  std::vector<double> p1_;
  std::vector<double> p2_;
};

inline const ConfigurationSearch& configuration_search(int groups) {
  static const ConfigurationSearch s2(2), s3(3), s4(4);
  switch (groups) {
    case 2: return s2;
    case 3: return s3;
    case 4: return s4;
    default: throw domain_error("configuration search covers M = 2, 3, 4");
  }
}

inline double zero_region_end(long long groups) {
  if (groups <= 4) {
    static const std::array<double, 5> cached = [] {
      std::array<double, 5> out{};
      for (int m = 1; m <= 4; ++m) out[m] = std::max(p1_lim1(m), p1_lim2(m));
      return out;
    }();
    return cached[static_cast<std::size_t>(groups)];
  }
  return std::max(p1_lim1(groups), p1_lim2(groups));
}

}  // namespace detail

/// Minimal p2 at fixed p1 over pure M-separable states.
inline double p2_min(double p1, long long groups, const SymmetricOptions& opt = {}) {
  detail::check_groups(groups);
  detail::check_p1(p1, groups);
  if (groups == 1) return 0.0;
  if (groups >= 5) return p2_min_symmetric(p1, groups, opt);
  if (p1 <= detail::zero_region_end(groups)) return 0.0;
  const double sym = p2_min_symmetric(p1, groups, opt);
  const double conf = detail::configuration_search(static_cast<int>(groups)).minimize(p1);
  return std::min(sym, conf);
}

// ---------------------------------------------------------------------------
// Curves.

struct CurveSample {
  double p1 = 0.0;
  double p2_min = 0.0;    // pure-state minimum
  double p2_bound = 0.0;  // lower convex envelope, valid for mixed states
};

struct BoundCurve {
  long long groups = 1;
  std::vector<CurveSample> samples;
  double interval_lo = 0.0;  // max(p1_lim1, p1_lim2)
  double interval_hi = 1.0;  // p1_max
  double p1_lim1 = 1.0;
  double p1_lim2 = 1.0;
  double p1_max = 1.0;
  double convexity_defect = 0.0;  // max(p2_min - envelope) over samples
};

inline constexpr std::size_t kDefaultCurveGrid = 512;
inline constexpr double kConvexityTolerance = 1e-8;

namespace detail {

/// Lower convex hull of points sorted by x; returns vertex indices.
inline std::vector<std::size_t> lower_hull(const std::vector<CurveSample>& pts) {
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (hull.size() >= 2) {
      const auto& o = pts[hull[hull.size() - 2]];
      const auto& a = pts[hull.back()];
      const auto& b = pts[i];
      const double cross = (a.p1 - o.p1) * (b.p2_min - o.p2_min) - (a.p2_min - o.p2_min) * (b.p1 - o.p1);
      if (cross <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  return hull;
}

}  // namespace detail

/// Samples p2_min on a log-spaced p1 grid ending at p1_max, plus a uniform grid
/// of grid_size/4 points on the interval I. For M >= 5 a convexity defect above
/// 1e-8 is reported as a minimizer failure.
inline BoundCurve build_curve(long long groups, std::size_t grid_size = kDefaultCurveGrid,
                              const SymmetricOptions& opt = {}) {
  detail::check_groups(groups);
  if (grid_size < 16) throw domain_error("curve grid needs at least 16 points");
  BoundCurve curve;
  curve.groups = groups;
  curve.p1_lim1 = p1_lim1(groups);
  curve.p1_lim2 = p1_lim2(groups);
  curve.p1_max = p1_max(groups);
  curve.interval_lo = std::min(std::max(curve.p1_lim1, curve.p1_lim2), curve.p1_max);
  curve.interval_hi = curve.p1_max;

  std::vector<double> xs;
  const double lo = std::min(1e-4, 0.5 * curve.interval_lo);
  const double ratio = std::log(curve.p1_max / lo);
  for (std::size_t i = 0; i < grid_size; ++i) {
    xs.push_back(i + 1 == grid_size ? curve.p1_max
                                    : lo * std::exp(ratio * static_cast<double>(i) / (grid_size - 1)));
  }
  const std::size_t dense = grid_size / 4;
  for (std::size_t i = 0; i < dense; ++i) {
    xs.push_back(curve.interval_lo +
                 (curve.interval_hi - curve.interval_lo) * static_cast<double>(i) / (dense - 1));
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  for (double p1 : xs) curve.samples.push_back({p1, p2_min(p1, groups, opt), 0.0});

  const auto hull = detail::lower_hull(curve.samples);
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const auto& a = curve.samples[hull[h]];
    const auto& b = curve.samples[hull[h + 1]];
    for (std::size_t i = hull[h]; i <= hull[h + 1]; ++i) {
      const double t = (curve.samples[i].p1 - a.p1) / (b.p1 - a.p1);
      curve.samples[i].p2_bound = std::min(curve.samples[i].p2_min, a.p2_min + t * (b.p2_min - a.p2_min));
    }
  }
  if (hull.size() == 1) curve.samples[0].p2_bound = curve.samples[0].p2_min;
  for (const auto& s : curve.samples) {
    curve.convexity_defect = std::max(curve.convexity_defect, s.p2_min - s.p2_bound);
  }
  if (groups >= 5 && curve.convexity_defect > kConvexityTolerance) {
    throw consistency_error("bound curve is not convex; minimizer failure suspected");
  }
  return curve;
}

namespace detail {

inline const BoundCurve& cached_small_curve(long long groups) {
  static std::mutex mu;
  static std::map<long long, BoundCurve> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(groups);
  if (it == cache.end()) it = cache.emplace(groups, build_curve(groups)).first;
  return it->second;
}

}  // namespace detail

/// Bound valid for mixed M-separable states. Equal to p2_min for M >= 5; for
/// M <= 4 the sampled convex envelope is used where it bridges a non-convex
/// stretch of the pure-state curve.
inline double p2_bound(double p1, long long groups, const SymmetricOptions& opt = {}) {
  detail::check_groups(groups);
  detail::check_p1(p1, groups);
  if (groups == 1) return 0.0;
  if (groups >= 5) return p2_min_symmetric(p1, groups, opt);
  if (p1 <= detail::zero_region_end(groups)) return 0.0;
  const auto& curve = detail::cached_small_curve(groups);
  const auto& s = curve.samples;
  auto it = std::lower_bound(s.begin(), s.end(), p1, [](const CurveSample& c, double x) { return c.p1 < x; });
  if (it == s.end()) return p2_min(p1, groups, opt);
  if (it->p1 == p1) return it->p2_bound;
  if (it == s.begin()) return p2_min(p1, groups, opt);
  const auto& b = *it;
  const auto& a = *(it - 1);
  // Between hull vertices the exact convex value lies below the chord; inside a
  // bridge the chord is the envelope.
  const double t = (p1 - a.p1) / (b.p1 - a.p1);
  return std::min(p2_min(p1, groups, opt), a.p2_bound + t * (b.p2_bound - a.p2_bound));
}

// ---------------------------------------------------------------------------
// Inversion.

struct SeparabilityOptions {
  long long frontier = 1'000'000;  // largest M examined; use min(N, 1e6)
  SymmetricOptions symmetric{};
};

/// True when some mixed M-separable state reaches (p1, p2).
inline bool compatible(double p1, double p2, long long groups, const SymmetricOptions& opt = {}) {
  if (p1 > p1_max(groups) * (1.0 + 1e-12)) return false;
  return p2_bound(std::min(p1, p1_max(groups)), groups, opt) <= p2;
}

/// Largest M whose bound admits (p1, p2). Points compatible with the frontier M
/// itself sit in the undetermined region and raise undetermined_region.
inline long long max_separability(double p1, double p2, const SeparabilityOptions& opt = {}) {
  if (!(p1 > 0.0 && p1 < 1.0)) throw domain_error("p1 must lie in (0, 1)");
  if (!(p2 >= 0.0) || p2 > 1.0) throw domain_error("p2 must lie in [0, 1]");
  const long long frontier = opt.frontier;
  if (frontier < 2) throw domain_error("frontier M must be >= 2");
  auto ok = [&](long long m) { return compatible(p1, p2, m, opt.symmetric); };
  if (ok(frontier)) {
    throw undetermined_region("(p1, p2) is compatible with the separable frontier; no depth certified");
  }
  if (!ok(1)) throw infeasible_error("(p1, p2) is not reachable by any M");

  long long best = 0;
  constexpr long long kScan = 64;
  if (frontier <= kScan || !ok(kScan)) {
    for (long long m = std::min(frontier, kScan) - 1; m >= 1; --m) {
      if (ok(m)) {
        best = m;
        break;
      }
    }
  } else {
    long long lo = kScan;  // compatible
    long long hi = frontier;  // incompatible
    const double guess = std::ceil(1.0 / (std::numbers::e * p1 * p1));
    long long g = std::clamp<long long>(static_cast<long long>(std::min(guess, 1e18)), lo + 1, hi - 1);
    if (g > lo && g < hi) {
      if (ok(g)) {
        lo = g;
        for (long long step = g; lo < hi;) {
          const long long next = std::min(hi, lo + step);
          if (next == hi) break;
          if (ok(next)) {
            lo = next;
            step *= 2;
          } else {
            hi = next;
            break;
          }
        }
      } else {
        hi = g;
      }
    }
    while (hi - lo > 1) {
      const long long mid = lo + (hi - lo) / 2;
      if (ok(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    best = lo;
  }
  // Monotonicity in M is assumed by the search; check it around the answer.
  if (!ok(best) || ok(best + 1) || (best > 1 && !ok(best - 1))) {
    throw consistency_error("bound is not monotone in M near the certified separability");
  }
  return best;
}

/// Entanglement depth K = N / M_max.
inline double depth(double atoms, long long max_groups) {
  if (max_groups < 1 || atoms < static_cast<double>(max_groups)) {
    throw domain_error("depth needs N >= M_max >= 1");
  }
  return atoms / static_cast<double>(max_groups);
}

// ---------------------------------------------------------------------------
// Nonsymmetric configurations at large M.

/// Largest p1 reached by stationary configurations with 1 <= delta m <= max_delta,
/// over seeds b = beta/sqrt(M), c = -gamma/sqrt(M) with beta, gamma in (0, range].
/// Computed from the exact partner branches, not from the asymptotic forms.
inline double nonsymmetric_p1_peak(long long groups, int max_delta = 3, double range = 4.0,
                                   std::size_t grid = 48) {
  if (groups < 2) throw domain_error("nonsymmetric configurations need M >= 2");
  if (max_delta < 1 || max_delta >= groups) throw domain_error("delta m must lie in [1, M-1]");
  const double m = static_cast<double>(groups);
  const double root = std::sqrt(m);
  std::vector<std::array<int, 4>> tuples;
  for (int n1 = 0; n1 <= max_delta; ++n1) {
    for (int n2 = 0; n1 + n2 <= max_delta; ++n2) {
      for (int n3 = 0; n1 + n2 + n3 <= max_delta; ++n3) {
        const int d = n1 + n2 + n3;
        if (d == 0) continue;
        tuples.push_back({static_cast<int>(groups) - d, n1, n2, n3});
      }
    }
  }
  auto best_at = [&](double beta, double gamma) {
    const double b = beta / root;
    const double c = -gamma / root;
    const double rest = 1.0 - b * b - c * c;
    if (!(rest > 0.0)) return 0.0;
    double best = 0.0;
    try {
      const auto slots = partner_slots({std::sqrt(rest), b, c});
      for (const auto& t : tuples) {
        if (const auto pp = slot_probabilities(slots, t)) best = std::max(best, pp->p1);
      }
    } catch (const std::domain_error&) {
    }
    return best;
  };
  const auto outer = optimize::grid_golden(
      [&](double gamma) {
        const auto inner = optimize::grid_golden([&](double beta) { return -best_at(beta, gamma); }, 1e-3,
                                                 range, grid, 1e-10);
        return inner.value;
      },
      1e-3, range, grid, 1e-10);
  return -outer.value;
}

}  // namespace edepth
