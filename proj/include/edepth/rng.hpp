#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
// A stream is addressed by (seed, item); draw k of item i never depends on how
// many other items were generated or in which order, so parallel maps stay
// reproducible.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace edepth {

class Philox4x32 {
public:
  static constexpr const char* algorithm = "philox4x32-10";

  using counter_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  static constexpr counter_type apply(counter_type ctr, key_type key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Sequential view over one (seed, item) Philox stream.
class StreamRng {
public:
  StreamRng(std::uint64_t seed, std::uint64_t item) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        item_(item) {}

  std::uint64_t next_u64() noexcept {
    if (used_ >= 2) refill();
    const std::uint64_t v = (std::uint64_t{block_[2 * used_]} << 32) | block_[2 * used_ + 1];
    ++used_;
    return v;
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the sine half is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

private:
  void refill() noexcept {
    block_ = Philox4x32::apply({static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32),
                                static_cast<std::uint32_t>(item_),
                                static_cast<std::uint32_t>(item_ >> 32)},
                               key_);
    ++counter_;
    used_ = 0;
  }

  Philox4x32::key_type key_;
  std::uint64_t item_;
  std::uint64_t counter_ = 0;
  Philox4x32::counter_type block_{};
  int used_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace edepth
