#pragma once

// Small numerical kernels shared by the bound, oracle and fit code: bracketed
// scalar minimization, bisection, and a dense BFGS for low-dimensional smooth
// problems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace edepth::optimize {

struct ScalarMinimum {
  double x = 0.0;
  double value = std::numeric_limits<double>::infinity();
};

/// Golden-section search on [lo, hi]. Stops when the bracket is narrower than
/// tol * (1 + |x|) or after max_iter steps.
template <typename F>
ScalarMinimum golden_section(F&& f, double lo, double hi, double tol = 1e-14,
                             int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498949;
  if (hi < lo) std::swap(lo, hi);
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < max_iter && (hi - lo) > tol * (1.0 + std::abs(x1)); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? ScalarMinimum{x1, f1} : ScalarMinimum{x2, f2};
}

/// Uniform grid of `grid` points on [lo, hi], then golden-section refinement
/// inside the cells adjacent to the best grid point. Non-finite values are
/// treated as +inf.
template <typename F>
ScalarMinimum grid_golden(F&& f, double lo, double hi, std::size_t grid, double tol = 1e-14) {
  grid = std::max<std::size_t>(grid, 3);
  const double step = (hi - lo) / static_cast<double>(grid - 1);
  auto safe = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  ScalarMinimum best;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = (i + 1 == grid) ? hi : lo + step * static_cast<double>(i);
    const double v = safe(x);
    if (v < best.value) {
      best = {x, v};
      best_i = i;
    }
  }
  if (!std::isfinite(best.value)) return best;
  const double a = best_i == 0 ? lo : lo + step * static_cast<double>(best_i - 1);
  const double b = best_i + 1 >= grid ? hi : lo + step * static_cast<double>(best_i + 1);
  const auto refined = golden_section(safe, a, b, tol);
  return refined.value < best.value ? refined : best;
}

/// Bisection for a sign change of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
template <typename F>
double bisect_root(F&& f, double lo, double hi, int max_iter = 200) {
  double flo = f(lo);
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

struct BfgsOptions {
  int max_iter = 500;
  double grad_tol = 1e-13;
  double step_tol = 1e-16;
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

/// Objective signature: value = f(x, grad), filling grad (same size as x).
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

/// Quasi-Newton minimization with a dense inverse-Hessian update and
/// Armijo backtracking. Intended for n of a few dozen at most.
inline BfgsResult bfgs(const Objective& f, std::vector<double> x, const BfgsOptions& opt = {}) {
  const std::size_t n = x.size();
  std::vector<double> g(n), g_new(n), x_new(n), dir(n), s(n), y(n), hy(n);
  std::vector<double> h(n * n, 0.0);
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  };
  reset_h();
  double fx = f(x, g);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    double gnorm = 0.0;
    for (double gi : g) gnorm = std::max(gnorm, std::abs(gi));
    if (gnorm < opt.grad_tol) break;

    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= h[i * n + j] * g[j];
      dir[i] = acc;
    }
    double slope = std::inner_product(g.begin(), g.end(), dir.begin(), 0.0);
    if (slope >= 0.0) {
      reset_h();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      slope = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    double sy = 0.0;
    double smax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
      sy += s[i] * y[i];
      smax = std::max(smax, std::abs(s[i]));
    }
    const double f_old = fx;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if (smax < opt.step_tol || (f_old - fx) <= 1e-300) break;

    if (sy > 1e-300) {
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += h[i * n + j] * y[j];
        hy[i] = acc;
      }
      const double yhy = std::inner_product(y.begin(), y.end(), hy.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
      }
    }
  }
  return {std::move(x), fx, it};
}

}  // namespace edepth::optimize
