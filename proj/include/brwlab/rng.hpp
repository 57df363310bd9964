#pragma once

// Reproducible random streams for parallel Monte Carlo.
//
// A stream is keyed by (master seed, stream id). Replication r of an
// experiment always draws from the stream with id r, so the draw schedule
// depends only on the master seed and the replication index, never on which
// worker thread happens to run it.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

namespace brw {

inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stable 64-bit hash for deriving sub-seeds from strings (experiment tags,
// model descriptions). FNV-1a.
inline uint64_t fnv1a64(const char* data, size_t n) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001B3ULL;
  }
  return h;
}

namespace detail {

// Tables for the 128-layer ziggurat of the standard normal density.
// Layer 0 is the base strip plus tail; layer i in 1..127 is the rectangle
// [0, x[i]] x [f[i], f[i-1]] of equal area, with x ascending so that
// x[127] = R and x[0] = 0, f[0] = 1. The per-layer integer threshold kn
// implements the sure-accept test on the raw 53-bit magnitude; threshold
// rounding only diverts edge cases into the exact wedge test.
struct ZigguratTables {
  struct Layer {
    uint64_t kn;
    double wn;
  };
  std::array<Layer, 128> layer;
  std::array<double, 128> x;
  std::array<double, 128> f;
  double r;

  ZigguratTables() {
    constexpr double tail_start = 3.442619855899;
    constexpr double area = 9.91256303526217e-3;  // per-layer area for m = 128
    r = tail_start;
    x[127] = r;
    f[127] = std::exp(-0.5 * r * r);
    for (int i = 126; i >= 1; --i) {
      f[i] = f[i + 1] + area / x[i + 1];
      x[i] = std::sqrt(-2.0 * std::log(f[i]));
    }
    x[0] = 0.0;
    f[0] = 1.0;
    const double base_width = area / f[127];
    layer[0].wn = base_width * 0x1.0p-53;
    layer[0].kn = static_cast<uint64_t>(r / base_width * 0x1.0p53);
    for (int i = 1; i < 128; ++i) {
      layer[i].wn = x[i] * 0x1.0p-53;
      layer[i].kn = static_cast<uint64_t>(x[i - 1] / x[i] * 0x1.0p53);
    }
  }
};

inline const ZigguratTables kZiggurat{};

}  // namespace detail

// xoshiro256++ with splitmix64 seeding.
class RngStream {
 public:
  RngStream() { reseed(0, 0); }
  RngStream(uint64_t master_seed, uint64_t stream_id) { reseed(master_seed, stream_id); }

  void reseed(uint64_t master_seed, uint64_t stream_id) {
    // Feed both keys through splitmix so (seed, id) and (seed, id + 1)
    // yield unrelated states.
    uint64_t sm = master_seed;
    splitmix64_next(sm);
    sm ^= 0x9E3779B97F4A7C15ULL * (stream_id + 1);
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe under log().
  double next_unit_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    // Multiply-shift with rejection on the biased band.
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    uint64_t lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Standard normal via 128-layer ziggurat.
  double next_normal() {
    const auto& t = detail::kZiggurat;
    for (;;) {
      const uint64_t bits = next_u64();
      const int layer = static_cast<int>(bits & 127);
      const double sign = (bits & 128) ? -1.0 : 1.0;
      const uint64_t mag = bits >> 11;
      const auto& lay = t.layer[layer];
      if (mag < lay.kn) return sign * static_cast<double>(mag) * lay.wn;
      const double xcand = static_cast<double>(mag) * lay.wn;
      if (layer == 0) {
        if (xcand < t.r) return sign * xcand;
        return sign * sample_tail(t.r);
      }
      const double y = t.f[layer] + next_unit() * (t.f[layer - 1] - t.f[layer]);
      if (y < std::exp(-0.5 * xcand * xcand)) return sign * xcand;
    }
  }

  double next_normal(double mean, double sd) { return mean + sd * next_normal(); }

  double next_exponential() { return -std::log(next_unit_pos()); }

  // Poisson(mean) by inversion-free multiplication; fine for small means.
  uint32_t next_poisson(double mean) {
    const double limit = std::exp(-mean);
    uint32_t k = 0;
    double p = 1.0;
    for (;;) {
      p *= next_unit_pos();
      if (p <= limit) return k;
      ++k;
    }
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  // Marsaglia tail sampler for |x| > r.
  double sample_tail(double r) {
    for (;;) {
      const double ex = -std::log(next_unit_pos()) / r;
      const double ey = -std::log(next_unit_pos());
      if (2.0 * ey > ex * ex) return r + ex;
    }
  }

  std::array<uint64_t, 4> state_{};
};

// Derives an experiment-scoped master seed so distinct experiments sharing a
// CLI seed draw from unrelated stream families.
inline uint64_t scoped_seed(uint64_t master_seed, const char* tag) {
  uint64_t h = fnv1a64(tag, std::strlen(tag));
  uint64_t s = master_seed ^ (h + 0x9E3779B97F4A7C15ULL);
  return splitmix64_next(s);
}

}  // namespace brw
