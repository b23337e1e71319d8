#pragma once

// M-separable product states restricted to the 0/1/2-excitation sector of each
// group, and their overlaps with the collective one- and two-excitation Dicke
// states.
//
// Every group contributes a factor (a + b x + c y) where x marks one excitation
// and y marks a doubly excited group. The overlaps only need the coefficients
// of 1, x, x^2 and y of the product over all groups, which is a pole-free
// rewrite of the familiar ratio form
//
//   p1 = A^2/M (sum b_i/a_i)^2,
//   p2 = A^2/M^2 (sqrt2 sum_{i<j} b_i b_j/(a_i a_j) + sum c_i/a_i)^2,  A = prod a_i,
//
// and stays exact when some a_i vanish.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "edepth/errors.hpp"

namespace edepth {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kNormTolerance = 1e-12;

/// Real amplitudes of one group on |d0>, |d1>, |d2>, in the canonical phase
/// convention a >= 0, c <= 0.
struct GroupAmplitudes {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;

  /// Group with c = -sqrt(1 - a^2 - b^2).
  static GroupAmplitudes from_ab(double a, double b) {
    const double rest = 1.0 - a * a - b * b;
    if (a < 0.0 || rest < -kNormTolerance) {
      throw domain_error("group amplitudes need a >= 0 and a^2 + b^2 <= 1");
    }
    return {a, b, -std::sqrt(std::max(rest, 0.0))};
  }

  double norm2() const noexcept { return a * a + b * b + c * c; }

  bool valid() const noexcept {
    return a >= 0.0 && c <= 0.0 && std::abs(norm2() - 1.0) <= kNormTolerance;
  }
};

using AnsatzState = std::vector<GroupAmplitudes>;

struct ProbabilityPair {
  double p1 = 0.0;
  double p2 = 0.0;
};

inline void validate(std::span<const GroupAmplitudes> state) {
  if (state.empty()) throw domain_error("ansatz state needs at least one group");
  for (const auto& g : state) {
    if (!g.valid()) {
      throw domain_error("group amplitudes violate a >= 0, c <= 0, a^2+b^2+c^2 = 1");
    }
  }
}

/// Coefficients of 1, x, x^2 and y in the truncated product prod_i (a_i + b_i x + c_i y).
template <typename T>
struct TruncatedProduct {
  T one{1};
  T x{0};
  T xx{0};
  T y{0};

  constexpr TruncatedProduct times(const T& a, const T& b, const T& c) const {
    return {one * a, x * a + one * b, xx * a + x * b, y * a + one * c};
  }
};

template <typename T, typename Groups, typename Project>
TruncatedProduct<T> truncated_product(const Groups& groups, Project&& abc) {
  TruncatedProduct<T> q;
  for (const auto& g : groups) {
    const auto [a, b, c] = abc(g);
    q = q.times(a, b, c);
  }
  return q;
}

namespace detail {

inline TruncatedProduct<double> product_of(std::span<const GroupAmplitudes> state) {
  return truncated_product<double>(state, [](const GroupAmplitudes& g) {
    return std::array<double, 3>{g.a, g.b, g.c};
  });
}

inline double clamp_probability(double p) noexcept { return std::min(std::max(p, 0.0), 1.0); }

}  // namespace detail

/// Probability of exactly one forward photon, |<D1|psi>|^2.
inline double p1_of_state(std::span<const GroupAmplitudes> state) {
  validate(state);
  const auto q = detail::product_of(state);
  return detail::clamp_probability(q.x * q.x / static_cast<double>(state.size()));
}

/// Probability of exactly two forward photons, |<D2|psi>|^2, with the 1/N and
/// 1/K finite-size corrections dropped.
inline double p2_of_state(std::span<const GroupAmplitudes> state) {
  validate(state);
  const auto q = detail::product_of(state);
  const double m = static_cast<double>(state.size());
  const double amp = kSqrt2 * q.xx + q.y;
  return detail::clamp_probability(amp * amp / (m * m));
}

inline ProbabilityPair probabilities(std::span<const GroupAmplitudes> state) {
  validate(state);
  const auto q = detail::product_of(state);
  const double m = static_cast<double>(state.size());
  const double amp = kSqrt2 * q.xx + q.y;
  return {detail::clamp_probability(q.x * q.x / m), detail::clamp_probability(amp * amp / (m * m))};
}

/// p2 including the finite-size factors (1 - 1/N)^-1 and sqrt(1 - 1/K) on the
/// doubly-excited-group term. For sensitivity checks only.
inline double p2_of_state_exact(std::span<const GroupAmplitudes> state, double atoms,
                                double group_size) {
  validate(state);
  if (atoms <= 1.0 || group_size < 1.0) {
    throw domain_error("exact p2 needs N > 1 and K >= 1");
  }
  const auto q = detail::product_of(state);
  const double m = static_cast<double>(state.size());
  const double amp = kSqrt2 * q.xx + std::sqrt(1.0 - 1.0 / group_size) * q.y;
  return amp * amp / (m * m * (1.0 - 1.0 / atoms));
}

/// Closed forms for M identical groups (a, b, -sqrt(1 - a^2 - b^2)):
///   p1 = M a^(2M-2) b^2,  p2 = a^(2M) ((M-1) b^2/(sqrt2 a^2) + c/a)^2.
/// Written without division by a so that a -> 0 is finite.
inline ProbabilityPair symmetric_probabilities(double a, double b, long long groups) {
  if (groups < 1) throw domain_error("group count must be >= 1");
  if (!(a > 0.0) || a > 1.0) throw domain_error("symmetric state needs a in (0, 1]");
  const double rest = 1.0 - a * a - b * b;
  if (rest < -kNormTolerance) throw domain_error("a^2 + b^2 > 1");
  const double c = -std::sqrt(std::max(rest, 0.0));
  const double m = static_cast<double>(groups);
  const double a_pow = std::pow(a, m - 2.0);  // a^(M-2)
  const double p1 = m * a_pow * a * a_pow * a * b * b;
  // a^M ((M-1) b^2/(sqrt2 a^2) + c/a) = a^(M-2) ((M-1) b^2/sqrt2 + a c)
  const double amp = a_pow * ((m - 1.0) * b * b / kSqrt2 + a * c);
  return {detail::clamp_probability(p1), detail::clamp_probability(amp * amp)};
}

}  // namespace edepth
