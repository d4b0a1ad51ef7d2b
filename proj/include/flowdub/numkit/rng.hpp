// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "flowdub/numkit/array.hpp"

namespace flowdub::numkit {

inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent stream seed from a base seed, a label, and an index.
inline uint64_t mix_seed(uint64_t base, std::string_view label, uint64_t index = 0) {
  uint64_t x = base ^ (fnv1a64(label) + 0x9e3779b97f4a7c15ULL * (index + 1));
  return splitmix64(x);
}

// xoshiro256** with splitmix64 seeding. Self-contained so that every draw is
// reproducible across compilers and standard libraries (std distributions
// are implementation-defined and would break the determinism contract).
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via 128-bit multiply (Lemire).
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    while (true) {
      uint64_t x = next_u64();
      __uint128_t m = __uint128_t(x) * __uint128_t(n);
      uint64_t lo = uint64_t(m);
      if (lo < n) {
        uint64_t threshold = (0 - n) % n;
        if (lo < threshold) continue;
      }
      return uint64_t(m >> 64);
    }
  }

  // Box-Muller with a cached spare; fully deterministic draw order.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::array<uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline void fill_normal(Rng& rng, Array& a) {
  for (size_t i = 0; i < a.numel(); ++i) a[i] = float(rng.normal());
}

inline void fill_uniform(Rng& rng, Array& a, double lo, double hi) {
  for (size_t i = 0; i < a.numel(); ++i) a[i] = float(rng.uniform(lo, hi));
}

}  // namespace flowdub::numkit
