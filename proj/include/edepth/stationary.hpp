#pragma once

// Stationary points of min p2 subject to fixed p1 over product states.
//
// Lagrange stationarity forces every group to be a "partner" of the first
// one: a_i c_i = a c and b_i (1/c_i + sqrt2/a_i) = b (1/c + sqrt2/a). Eliminating
// b_i leaves a quartic in a_i^2 with the trivial root a^2; the remaining cubic
// is solved in closed form below. A configuration says how many groups sit on
// each of the four branches.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "edepth/ansatz.hpp"
#include "edepth/errors.hpp"

namespace edepth {

inline constexpr double kBranchImagTolerance = 1e-9;
inline constexpr double kStationarityTolerance = 1e-9;
inline constexpr int kMaxEnumeratedGroups = 200;

struct BranchSolution {
  int branch = 1;  // 1..4, 1 is the seed itself
  GroupAmplitudes amplitudes;
  double residual = 0.0;
};

struct Configuration {
  int m1 = 1;
  int m2 = 0;
  int m3 = 0;
  int m4 = 0;

  int groups() const noexcept { return m1 + m2 + m3 + m4; }
  int delta_m() const noexcept { return m2 + m3 + m4; }
  bool operator==(const Configuration&) const = default;
};

/// Max violation of the two partner identities between `seed` and `candidate`.
inline double verify_stationarity(const GroupAmplitudes& seed, const GroupAmplitudes& candidate) {
  const double r1 = std::abs(candidate.a * candidate.c - seed.a * seed.c);
  const double lhs = candidate.b * (1.0 / candidate.c + kSqrt2 / candidate.a);
  const double rhs = seed.b * (1.0 / seed.c + kSqrt2 / seed.a);
  return std::max(r1, std::abs(lhs - rhs));
}

namespace detail {

using cplx = std::complex<double>;

/// Quartic in s = a_i^2 whose roots are the partner amplitudes:
///   (s - s^2 - k^2)(s + sqrt2 k)^2 - L^2 k^2 s^2,  k = a c,  L = b (1/c + sqrt2/a).
struct PartnerQuartic {
  double k;
  double l;

  template <typename T>
  T value(T s) const {
    const T u = s - s * s - k * k;
    const T v = s + kSqrt2 * k;
    return u * v * v - l * l * k * k * s * s;
  }

  template <typename T>
  T derivative(T s) const {
    const T u = s - s * s - k * k;
    const T v = s + kSqrt2 * k;
    return (1.0 - 2.0 * s) * v * v + 2.0 * u * v - 2.0 * l * l * k * k * s;
  }

  cplx polish(cplx s, int steps = 3) const {
    for (int i = 0; i < steps; ++i) {
      const cplx d = derivative(s);
      if (std::abs(d) == 0.0) break;
      const cplx next = s - value(s) / d;
      if (!(std::abs(value(next)) < std::abs(value(s)))) break;
      s = next;
    }
    return s;
  }
};

/// Closed-form cubic roots for branches 2, 3, 4 (complex in general).
inline std::array<cplx, 3> branch_roots(double a, double b, double c) {
  const double a2 = a * a;
  const double c2 = c * c;
  const double x0 = 1.0 - a2 - 2.0 * kSqrt2 * a * c;
  const double x1 = 1.0 - 6.0 * c2 * (1.0 - c2 - kSqrt2 * a * c) / (x0 * x0);
  const double x03 = x0 * x0 * x0;
  const double inner = 2.0 * a2 * (1.0 - a2) * (1.0 - a2) + 8.0 * c2 * (1.0 - c2) * (1.0 - c2) +
                       2.0 * kSqrt2 * a * c *
                           (6.0 * a2 * a2 + 12.0 * c2 * c2 - 14.0 * c2 + 3.0 + 24.0 * a2 * c2 - 7.0 * a2) +
                       a2 * (48.0 * c2 * c2 - 36.0 * c2 + 48.0 * a2 * c2) - b * b;
  const cplx radicand = 1.0 - 3.0 * std::sqrt(3.0) * c2 * std::abs(b) / x03 * std::sqrt(cplx(inner)) -
                        9.0 * c2 / x03 * (2.0 * a2 * c2 + kSqrt2 * a * c * (a2 + 2.0 * c2 - 3.0) + b * b);
  const cplx x2 = std::pow(radicand, 1.0 / 3.0);
  const cplx w = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);  // (-1)^(2/3)
  const cplx wbar = std::conj(w);                                // (-1)^(-2/3)
  const cplx r = x1 / x2;
  return {x0 / 3.0 * (1.0 + w * r + wbar * x2), x0 / 3.0 * (1.0 + r + x2),
          x0 / 3.0 * (1.0 + wbar * r + w * x2)};
}

inline void check_seed(const GroupAmplitudes& seed) {
  if (seed.b == 0.0 || seed.c == 0.0) {
    throw branch_degeneracy_error("stationarity system is degenerate for b = 0 or c = 0");
  }
  if (!(seed.a > 0.0 && seed.a < 1.0) || !(seed.c < 0.0) || !seed.valid()) {
    throw domain_error("branch seed needs a in (0,1), c < 0 and unit norm");
  }
}

/// Builds the partner group for a real root s = a_i^2: c_i from a_i c_i = a c is
/// implied by the quartic, b_i comes from the second identity, c_i from the norm.
inline std::optional<GroupAmplitudes> partner_from_root(const GroupAmplitudes& seed, cplx s) {
  const cplx ai = std::sqrt(s);
  if (std::abs(ai.imag()) > kBranchImagTolerance) return std::nullopt;
  const double a = ai.real();
  if (!(a > 0.0) || a > 1.0) return std::nullopt;
  const double k = seed.a * seed.c;
  const double l = seed.b * (1.0 / seed.c + kSqrt2 / seed.a);
  const double denom = a * a + kSqrt2 * k;
  if (denom == 0.0) return std::nullopt;
  const double b = l * k * a / denom;
  const double rest = 1.0 - a * a - b * b;
  if (rest < -kBranchImagTolerance) return std::nullopt;
  return GroupAmplitudes{a, b, -std::sqrt(std::max(rest, 0.0))};
}

}  // namespace detail

/// All physical stationarity partners of `seed`, labelled by branch. Branch 1 is
/// the seed; branches 2-4 follow the closed-form cubic roots with the principal
/// cube root, after Newton polishing on the quartic.
inline std::vector<BranchSolution> branch_solutions(const GroupAmplitudes& seed) {
  detail::check_seed(seed);
  std::vector<BranchSolution> out;
  out.push_back({1, seed, 0.0});
  const detail::PartnerQuartic quartic{seed.a * seed.c, seed.b * (1.0 / seed.c + kSqrt2 / seed.a)};
  const auto roots = detail::branch_roots(seed.a, seed.b, seed.c);
  for (int k = 0; k < 3; ++k) {
    if (!std::isfinite(roots[k].real()) || !std::isfinite(roots[k].imag())) continue;
    const auto partner = detail::partner_from_root(seed, quartic.polish(roots[k]));
    if (!partner || partner->c == 0.0) continue;
    const double residual = verify_stationarity(seed, *partner);
    if (residual <= kStationarityTolerance) out.push_back({k + 2, *partner, residual});
  }
  return out;
}

/// Multiplicity tuples with m1 > 0 summing to M, ordered by descending m1, m2, m3.
inline std::vector<Configuration> enumerate_configurations(int groups) {
  if (groups < 1) throw domain_error("group count must be >= 1");
  if (groups > kMaxEnumeratedGroups) {
    throw size_error("configuration enumeration is capped at M = 200");
  }
  std::vector<Configuration> out;
  out.reserve(static_cast<std::size_t>(groups + 2) * (groups + 1) * groups / 6);
  for (int m1 = groups; m1 >= 1; --m1) {
    for (int m2 = groups - m1; m2 >= 0; --m2) {
      for (int m3 = groups - m1 - m2; m3 >= 0; --m3) {
        out.push_back({m1, m2, m3, groups - m1 - m2 - m3});
      }
    }
  }
  return out;
}

/// Leading-order partner amplitudes for a seed b = beta/sqrt(M), c = -gamma/sqrt(M).
struct AsymptoticBranch {
  double a;
  double b;
};

inline std::array<AsymptoticBranch, 4> asymptotic_amplitudes(double beta, double gamma, double groups) {
  if (!(beta > 0.0) || !(gamma > 0.0)) throw domain_error("beta and gamma must be positive");
  const double m = groups;
  const double centre = std::sqrt(gamma) * std::pow(0.5 * m, -0.25);
  const double shift = beta / (2.0 * std::sqrt(m));
  const double b_mid = 1.0 - 3.0 * gamma / (2.0 * std::sqrt(2.0 * m));
  const double b_split = beta * std::sqrt(gamma) / (2.0 * std::pow(2.0 * m, 0.75));
  return {{{std::sqrt(1.0 - (beta * beta + gamma * gamma) / m), beta / std::sqrt(m)},
           {centre - shift, -(b_mid + b_split)},
           {centre + shift, b_mid - b_split},
           {gamma / std::sqrt(m), -beta / std::sqrt(2.0 * m)}}};
}

inline constexpr int kMaxAsymptoticDeltaM = 10;

/// Leading term of p1 for a configuration in the large-M scaling regime:
///   M^(-(m2+m3+2 m4)/2) 2^((m2+m3)/2) exp(-beta^2-gamma^2) beta^2 gamma^(m2+m3+2 m4).
inline double asymptotic_p1(const Configuration& config, double beta, double gamma, double groups) {
  if (config.delta_m() > kMaxAsymptoticDeltaM) {
    throw regime_error("asymptotic p1 needs delta m = m2 + m3 + m4 <= 10");
  }
  if (groups < 100.0) throw regime_error("asymptotic p1 needs M >= 100");
  const double n = config.m2 + config.m3 + 2.0 * config.m4;
  return std::pow(groups, -0.5 * n) * std::pow(2.0, 0.5 * (config.m2 + config.m3)) *
         std::exp(-beta * beta - gamma * gamma) * beta * beta * std::pow(gamma, n);
}

/// Maximum of the leading term over beta, gamma and all configurations with
/// 1 <= delta m <= 10, using the closed-form optima beta^2 = 1 and gamma^2 = n/2.
inline double asymptotic_p1_nonsymmetric_max(double groups) {
  double best = 0.0;
  for (int m2 = 0; m2 <= kMaxAsymptoticDeltaM; ++m2) {
    for (int m3 = 0; m2 + m3 <= kMaxAsymptoticDeltaM; ++m3) {
      for (int m4 = 0; m2 + m3 + m4 <= kMaxAsymptoticDeltaM; ++m4) {
        if (m2 + m3 + m4 == 0) continue;
        const double n = m2 + m3 + 2.0 * m4;
        const Configuration c{1, m2, m3, m4};
        best = std::max(best, asymptotic_p1(c, 1.0, std::sqrt(n / 2.0), groups));
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Evaluation of (p1, p2) for a seed and a multiplicity tuple.

/// Partners of a seed in "slot" order: slot 0 is the seed, slots 1..3 hold the
/// non-trivial physical partners sorted by ascending a. Slot order is continuous
/// in the seed except where partners appear or vanish.
struct PartnerSlots {
  std::array<GroupAmplitudes, 4> group{};
  int count = 1;
};

inline PartnerSlots partner_slots(const GroupAmplitudes& seed) {
  PartnerSlots slots;
  slots.group[0] = seed;
  auto sols = branch_solutions(seed);
  std::sort(sols.begin() + 1, sols.end(),
            [](const BranchSolution& x, const BranchSolution& y) { return x.amplitudes.a < y.amplitudes.a; });
  for (std::size_t i = 1; i < sols.size(); ++i) slots.group[slots.count++] = sols[i].amplitudes;
  return slots;
}

/// Truncated product of m identical factors (a + b x + c y).
inline TruncatedProduct<double> power_factor(const GroupAmplitudes& g, int m) {
  if (m == 0) return {};
  const double dm = m;
  const double am2 = m >= 2 ? std::pow(g.a, dm - 2.0) : 0.0;
  const double am1 = std::pow(g.a, dm - 1.0);
  return {am1 * g.a, dm * am1 * g.b, 0.5 * dm * (dm - 1.0) * am2 * g.b * g.b, dm * am1 * g.c};
}

inline TruncatedProduct<double> multiply(const TruncatedProduct<double>& p, const TruncatedProduct<double>& q) {
  return {p.one * q.one, p.one * q.x + p.x * q.one, p.one * q.xx + p.x * q.x + p.xx * q.one,
          p.one * q.y + p.y * q.one};
}

/// (p1, p2) of the product state with `counts[j]` groups on slot j, or nullopt
/// when a requested slot does not exist for this seed.
inline std::optional<ProbabilityPair> slot_probabilities(const PartnerSlots& slots,
                                                         const std::array<int, 4>& counts) {
  TruncatedProduct<double> q;
  int total = 0;
  for (int j = 0; j < 4; ++j) {
    if (counts[j] == 0) continue;
    if (j >= slots.count) return std::nullopt;
    q = multiply(q, power_factor(slots.group[j], counts[j]));
    total += counts[j];
  }
  const double m = total;
  const double amp = kSqrt2 * q.xx + q.y;
  return ProbabilityPair{q.x * q.x / m, amp * amp / (m * m)};
}

}  // namespace edepth
