#pragma once

// From laboratory numbers to witness inputs: g2 -> p2, efficiency-chain
// levels, SNR-based atom counting, fluorescence corrections, and Monte Carlo
// propagation of the measurement uncertainties into the certified depth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edepth/bound.hpp"
#include "edepth/errors.hpp"
#include "edepth/optimize.hpp"
#include "edepth/parallel.hpp"
#include "edepth/rng.hpp"

namespace edepth {

enum class Level { raw, after_reemission, before_reemission, after_absorption };

inline std::string_view to_string(Level level) {
  switch (level) {
    case Level::raw: return "raw";
    case Level::after_reemission: return "after_reemission";
    case Level::before_reemission: return "before_reemission";
    case Level::after_absorption: return "after_absorption";
  }
  return "raw";
}

/// Accepts the level names and the roman numerals i..iv.
inline Level parse_level(std::string_view s) {
  if (s == "raw" || s == "i") return Level::raw;
  if (s == "after_reemission" || s == "ii") return Level::after_reemission;
  if (s == "before_reemission" || s == "iii") return Level::before_reemission;
  if (s == "after_absorption" || s == "iv") return Level::after_absorption;
  throw domain_error("unknown modelling level '" + std::string(s) + "'");
}

struct Uncertain {
  double value = 0.0;
  double sigma = 0.0;
};

struct MeasurementRecord {
  Uncertain p1;
  Uncertain g2;
  Uncertain atoms;
  Level level = Level::raw;

  void validate() const {
    if (!(p1.value > 0.0 && p1.value < 1.0)) throw domain_error("p1 must lie in (0, 1)");
    if (!(g2.value >= 0.0)) throw domain_error("g2 must be >= 0");
    if (!(atoms.value >= 1.0)) throw domain_error("N must be >= 1");
    if (!(p1.sigma >= 0.0 && g2.sigma >= 0.0 && atoms.sigma >= 0.0)) {
      throw domain_error("standard deviations must be >= 0");
    }
  }
};

/// g2 = 2 p2 / p1^2 solved for p2.
inline double p2_from_g2(double p1, double g2) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw domain_error("p1 must lie in [0, 1]");
  if (!(g2 >= 0.0)) throw domain_error("g2 must be >= 0");
  return 0.5 * g2 * p1 * p1;
}

inline double g2_from_p2(double p1, double p2) {
  if (!(p1 > 0.0)) throw domain_error("g2 needs p1 > 0");
  return 2.0 * p2 / (p1 * p1);
}

/// Transmission chain from heralded photon to detector click. The memory
/// efficiency factors as absorption * dephasing * reemission.
struct EfficiencyChain {
  double heralding = 0.19;
  double memory_total = 0.07;
  double detection = 0.17;
  double absorption = 0.82;
  double dephasing = 0.10;  // storage rephasing factor

  void validate() const {
    for (double v : {heralding, memory_total, detection, absorption, dephasing}) {
      if (!(v > 0.0 && v <= 1.0)) throw domain_error("efficiencies must lie in (0, 1]");
    }
    if (reemission() > 1.0) throw domain_error("memory_total exceeds absorption * dephasing");
  }

  double reemission() const { return memory_total / (absorption * dephasing); }
};

/// Product of efficiencies undone at `level`.
inline double undone_efficiency(const EfficiencyChain& chain, Level level) {
  chain.validate();
  switch (level) {
    case Level::raw: return 1.0;
    case Level::after_reemission: return chain.detection;
    case Level::before_reemission: return chain.detection * chain.reemission();
    case Level::after_absorption: return chain.detection * chain.reemission() * chain.dephasing;
  }
  return 1.0;
}

inline double effective_p1(double raw_p1, const EfficiencyChain& chain, Level level) {
  if (!(raw_p1 > 0.0 && raw_p1 < 1.0)) throw domain_error("raw p1 must lie in (0, 1)");
  const double p = raw_p1 / undone_efficiency(chain, level);
  if (p > 1.0) throw domain_error("efficiency chain yields p1 > 1 (unphysical)");
  return p;
}

// ---------------------------------------------------------------------------
// Atom number from the forward/backward signal-to-noise ratio.

struct SnrPoint {
  double rate = 0.0;    // repetition rate R in Hz
  double alpha2 = 0.0;  // mean photon number per pulse
  double snr = 0.0;     // linear
};

struct SnrParams {
  double eta = 0.07;     // rephasing efficiency
  double delta = 0.0;    // detection-noise probability
  double t1 = 250e-6;    // excited-state lifetime in s
};

struct SnrDataset {
  std::vector<SnrPoint> points;
  SnrParams params;
};

inline double to_db(double x) { return 10.0 * std::log10(x); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// eta a^2 / (a^2 / (N (1 - exp(-1/(R T1)))) + delta). R = 0 is the single-pulse limit.
inline double snr_model(double alpha2, double rate, const SnrParams& params, double atoms) {
  if (!(alpha2 > 0.0) || !(rate >= 0.0) || !(atoms > 0.0) || !(params.t1 > 0.0) || !(params.eta > 0.0) ||
      !(params.delta >= 0.0)) {
    throw domain_error("SNR model needs positive inputs");
  }
  const double fill = rate == 0.0 ? 1.0 : -std::expm1(-1.0 / (rate * params.t1));
  return params.eta * alpha2 / (alpha2 / (atoms * fill) + params.delta);
}

struct AtomFit {
  double atoms = 0.0;
  double sigma_atoms = 0.0;
  double log10_atoms = 0.0;
  double sigma_log10 = 0.0;
  double db = 0.0;
  double sigma_db = 0.0;
  double rms_residual_db = 0.0;
};

/// Minimum RMS sensitivity of the model (dB per decade of N) for a usable fit.
inline constexpr double kMinSnrSensitivity = 0.01;

/// Least squares in dB over x = log10 N; sigma from s^2 / (J^T J).
inline AtomFit fit_atom_number(const SnrDataset& data) {
  const auto& pts = data.points;
  if (pts.size() < 3) throw domain_error("atom-number fit needs at least 3 points");
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  double amin = std::numeric_limits<double>::infinity(), amax = 0.0;
  for (const auto& p : pts) {
    if (!(p.snr > 0.0) || !(p.alpha2 > 0.0) || !(p.rate >= 0.0)) {
      throw domain_error("SNR points need positive snr, alpha2 and rate");
    }
    rmin = std::min(rmin, p.rate);
    rmax = std::max(rmax, p.rate);
    amin = std::min(amin, p.alpha2);
    amax = std::max(amax, p.alpha2);
  }
  const bool rate_decade = rmin > 0.0 ? rmax / rmin >= 10.0 : rmax > 0.0;
  if (!rate_decade && amax / amin < 10.0) {
    throw domain_error("SNR points must span a decade in rate or photon number");
  }
  auto model_db = [&](const SnrPoint& p, double x) {
    return to_db(snr_model(p.alpha2, p.rate, data.params, std::pow(10.0, x)));
  };
  auto ssr = [&](double x) {
    double s = 0.0;
    for (const auto& p : pts) {
      const double r = to_db(p.snr) - model_db(p, x);
      s += r * r;
    }
    return s;
  };
  const auto best = optimize::grid_golden(ssr, 2.0, 18.0, 801, 1e-14);
  double jtj = 0.0;
  constexpr double h = 1e-5;
  for (const auto& p : pts) {
    const double j = (model_db(p, best.x + h) - model_db(p, best.x - h)) / (2.0 * h);
    jtj += j * j;
  }
  if (std::sqrt(jtj / static_cast<double>(pts.size())) < kMinSnrSensitivity) {
    throw fit_degenerate("SNR data do not constrain N (noise term dominates)");
  }
  const double s2 = best.value / static_cast<double>(pts.size() - 1);
  AtomFit fit;
  fit.log10_atoms = best.x;
  fit.sigma_log10 = std::sqrt(s2 / jtj);
  fit.atoms = std::pow(10.0, best.x);
  fit.sigma_atoms = fit.atoms * std::log(10.0) * fit.sigma_log10;
  fit.db = 10.0 * best.x;
  fit.sigma_db = 10.0 * fit.sigma_log10;
  fit.rms_residual_db = std::sqrt(best.value / static_cast<double>(pts.size()));
  return fit;
}

/// Model SNR at the given (rate, alpha2) grid with multiplicative Gaussian
/// noise of relative size `noise`, drawn from stream (seed, realization).
inline SnrDataset synthetic_snr(const SnrParams& params, double atoms, const std::vector<double>& rates,
                                const std::vector<double>& alpha2s, double noise, std::uint64_t seed,
                                std::uint64_t realization = 0) {
  if (rates.size() != alpha2s.size()) throw domain_error("rates and alpha2 lists differ in length");
  SnrDataset out{{}, params};
  StreamRng rng(seed, realization);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    double factor = 1.0;
    if (noise > 0.0) {
      do {
        factor = 1.0 + noise * rng.normal();
      } while (!(factor > 0.0));
    }
    out.points.push_back({rates[i], alpha2s[i], snr_model(alpha2s[i], rates[i], params, atoms) * factor});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fluorescence.

/// Forward/backward incoherent emission ratio of a single pass at optical depth d.
inline double fluorescence_ratio(double d) {
  if (!(d >= 0.0)) throw domain_error("optical depth must be >= 0");
  if (d < 1e-8) return 1.0 - d * d / 3.0;  // series: 1 - d^2/3 + O(d^4)
  return 2.0 * d * std::exp(-d) / -std::expm1(-2.0 * d);
}

struct BackwardCorrections {
  double coupling = 1.0;
  double filter_transmission = 1.0;
  double pbs_factor = 1.0;
};

inline double apply_backward_corrections(double raw_counts, const BackwardCorrections& c) {
  for (double v : {c.coupling, c.filter_transmission, c.pbs_factor}) {
    if (!(v > 0.0 && v <= 1.0)) throw domain_error("correction factors must lie in (0, 1]");
  }
  return raw_counts / (c.coupling * c.filter_transmission * c.pbs_factor);
}

// ---------------------------------------------------------------------------
// Monte Carlo depth.

struct DepthResult {
  long long max_groups = 0;  // M_max at the central values
  double k = 0.0;            // N / M_max at the central values
  double k_mean = 0.0;
  double k_std = 0.0;
  double k_lower_3sigma = 0.0;   // max(1, mean - 3 std), capped at k
  double k_quantile_0p3 = 0.0;   // one-sided 0.3% sample quantile
  std::size_t n_samples = 0;
  std::size_t n_valid = 0;
  std::size_t n_undetermined = 0;
  std::size_t n_infeasible = 0;
  double truncation_p1 = 0.0;  // fraction of rejected normal draws
  double truncation_g2 = 0.0;
  double truncation_atoms = 0.0;
  std::vector<double> k_samples;  // valid samples, in draw order
};

struct MonteCarloOptions {
  long long frontier_cap = 1'000'000;
  SymmetricOptions symmetric = kFastSymmetric;
  std::optional<double> g2_override;
  unsigned threads = thread_count();
};

inline constexpr std::size_t kMinMonteCarloSamples = 10'000;

/// Certified separability and depth at the central values of a record.
inline std::pair<long long, double> point_depth(const MeasurementRecord& rec, const MonteCarloOptions& opt = {}) {
  rec.validate();
  const double g2 = opt.g2_override.value_or(rec.g2.value);
  const double p2 = p2_from_g2(rec.p1.value, g2);
  const long long frontier = std::max<long long>(
      2, std::min<long long>(opt.frontier_cap, static_cast<long long>(std::floor(rec.atoms.value))));
  const long long m = max_separability(rec.p1.value, p2, {frontier, opt.symmetric});
  return {m, depth(rec.atoms.value, m)};
}

namespace detail {

/// Normal draw truncated to (lo, hi) by rejection; counts rejections.
inline double truncated_normal(StreamRng& rng, const Uncertain& u, double lo, double hi, bool open_lo,
                               std::size_t& rejected) {
  if (u.sigma == 0.0) return u.value;
  for (int tries = 0; tries < 10000; ++tries) {
    const double v = rng.normal(u.value, u.sigma);
    const bool above = open_lo ? v > lo : v >= lo;
    if (above && v < hi) return v;
    ++rejected;
  }
  throw data_inconsistent("truncated normal draw failed; central value far outside the physical range");
}

}  // namespace detail

/// Samples (p1, g2, N) from independent truncated normals and certifies each draw.
/// Draws whose point is undetermined or infeasible are excluded from the statistics.
inline DepthResult montecarlo_depth(const MeasurementRecord& rec, std::size_t n_samples, std::uint64_t seed,
                                    const MonteCarloOptions& opt = {}) {
  rec.validate();
  if (n_samples < kMinMonteCarloSamples) throw domain_error("Monte Carlo needs at least 1e4 samples");
  DepthResult out;
  const auto central = point_depth(rec, opt);
  out.max_groups = central.first;
  out.k = central.second;
  out.n_samples = n_samples;

  enum Status : unsigned char { ok, undetermined, infeasible };
  struct Draw {
    double k = 0.0;
    Status status = ok;
    std::size_t rej_p1 = 0, rej_g2 = 0, rej_n = 0;
  };
  std::vector<Draw> draws(n_samples);
  const Uncertain g2u = opt.g2_override ? Uncertain{*opt.g2_override, 0.0} : rec.g2;
  parallel_for(
      n_samples,
      [&](std::size_t i) {
        Draw& d = draws[i];
        StreamRng rng(seed, i);
        const double p1 = detail::truncated_normal(rng, rec.p1, 0.0, 1.0, true, d.rej_p1);
        const double g2 = detail::truncated_normal(rng, g2u, 0.0, std::numeric_limits<double>::infinity(), false,
                                                   d.rej_g2);
        const double n = detail::truncated_normal(rng, rec.atoms, 1.0, std::numeric_limits<double>::infinity(),
                                                  false, d.rej_n);
        const long long frontier = std::max<long long>(
            2, std::min<long long>(opt.frontier_cap, static_cast<long long>(std::floor(n))));
        try {
          const long long m = max_separability(p1, p2_from_g2(p1, g2), {frontier, opt.symmetric});
          d.k = n / static_cast<double>(m);
        } catch (const undetermined_region&) {
          d.status = undetermined;
        } catch (const infeasible_error&) {
          d.status = infeasible;
        }
      },
      opt.threads);

  std::size_t rp1 = 0, rg2 = 0, rn = 0;
  for (const auto& d : draws) {
    rp1 += d.rej_p1;
    rg2 += d.rej_g2;
    rn += d.rej_n;
    if (d.status == ok) {
      out.k_samples.push_back(d.k);
    } else if (d.status == undetermined) {
      ++out.n_undetermined;
    } else {
      ++out.n_infeasible;
    }
  }
  out.n_valid = out.k_samples.size();
  auto frac = [&](std::size_t r) { return static_cast<double>(r) / static_cast<double>(r + n_samples); };
  out.truncation_p1 = frac(rp1);
  out.truncation_g2 = frac(rg2);
  out.truncation_atoms = frac(rn);
  if (2 * out.n_valid < n_samples) {
    throw data_inconsistent("more than half of the Monte Carlo draws are undetermined or infeasible");
  }

  const auto& ks = out.k_samples;
  const double nv = static_cast<double>(ks.size());
  // Shifted by the first sample so that identical draws give the exact mean and zero spread.
  const double shift = ks.front();
  double sum = 0.0;
  for (double k : ks) sum += k - shift;
  out.k_mean = shift + sum / nv;
  double ss = 0.0;
  for (double k : ks) ss += (k - out.k_mean) * (k - out.k_mean);
  out.k_std = ks.size() > 1 ? std::sqrt(ss / (nv - 1.0)) : 0.0;
  out.k_lower_3sigma = std::min(out.k, std::max(1.0, out.k_mean - 3.0 * out.k_std));

  std::vector<double> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  const double pos = 0.003 * (nv - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  out.k_quantile_0p3 = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  return out;
}

}  // namespace edepth
