#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "proxdist/types.hpp"

namespace proxdist {

// 64-bit finalizer used for seeding and for deriving independent substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream on top of mt19937_64.
///
/// The distribution transforms are spelled out here instead of using
/// std::uniform_*_distribution, whose output is implementation-defined;
/// with a fixed seed the draws (and hence solver traces) reproduce
/// bit-for-bit across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  /// Independent substream, e.g. one per experiment replicate.
  static RngStream derive(std::uint64_t seed, std::uint64_t stream) {
    return RngStream(seed ^ splitmix64(stream + 0x51ed270bULL));
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.28318530717958647692;
    spare_ = mag * std::sin(two_pi * u2);
    has_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  /// Unbiased integer in [0, n); rejects the topmost partial block.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::below: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  /// b distinct indices drawn uniformly from {0,...,n-1}, ascending.
  std::vector<Index> sample_without_replacement(Index n, Index b) {
    if (n < 1 || b < 1 || b > n)
      throw std::invalid_argument("sample_without_replacement: need 1 <= b <= n");
    perm_.resize(static_cast<std::size_t>(n));
    std::iota(perm_.begin(), perm_.end(), Index{0});
    for (Index i = 0; i < b; ++i) {
      const Index j = i + static_cast<Index>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
    }
    std::vector<Index> out(perm_.begin(), perm_.begin() + b);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::mt19937_64 eng_;
  std::vector<Index> perm_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace proxdist
