#pragma once

#include <cmath>
#include <cstdint>

#include "statfidelity/special_functions.hpp"

namespace statfidelity {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++, seeded via splitmix64 from (master seed, stream index).
// One independent stream per Monte-Carlo replicate makes results
// identical no matter how replicates are spread across workers.
class Rng {
 public:
  Rng(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t sm = master_seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return (next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Number of marked items in a size-`draws` sample without replacement
// from a population of `total` items of which `marked` are marked.
// Inverse-CDF chop-down walking outward from the mode; exact and
// deterministic given the stream.
inline long long hypergeometric(Rng& rng, long long total, long long marked,
                                long long draws) {
  const long long lo = draws + marked > total ? draws + marked - total : 0;
  const long long hi = marked < draws ? marked : draws;
  if (lo >= hi) return lo;
  auto logpmf = [&](long long k) {
    using kernel::log_gamma;
    return log_gamma(marked + 1.0) - log_gamma(k + 1.0) -
           log_gamma(marked - k + 1.0) + log_gamma(total - marked + 1.0) -
           log_gamma(draws - k + 1.0) -
           log_gamma(total - marked - draws + k + 1.0) -
           (log_gamma(total + 1.0) - log_gamma(draws + 1.0) -
            log_gamma(total - draws + 1.0));
  };
  const long long mode =
      static_cast<long long>((draws + 1.0) * (marked + 1.0) / (total + 2.0));
  long long m = mode < lo ? lo : (mode > hi ? hi : mode);
  const double pm = std::exp(logpmf(m));
  double u = rng.uniform() - pm;
  if (u <= 0.0) return m;
  // Walk outward, updating pmf by its ratio recurrence on each side.
  double pu = pm, pd = pm;
  long long up = m, down = m;
  while (true) {
    bool moved = false;
    if (up < hi) {
      pu *= static_cast<double>(marked - up) * (draws - up) /
            (static_cast<double>(up + 1) * (total - marked - draws + up + 1));
      ++up;
      u -= pu;
      if (u <= 0.0) return up;
      moved = true;
    }
    if (down > lo) {
      pd *= static_cast<double>(down) * (total - marked - draws + down) /
            (static_cast<double>(marked - down + 1) * (draws - down + 1));
      --down;
      u -= pd;
      if (u <= 0.0) return down;
      moved = true;
    }
    if (!moved) return pu >= pd ? up : down;  // rounding slack exhausted
  }
}

}  // namespace statfidelity
