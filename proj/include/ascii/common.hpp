#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ascii {

// Invalid experiment configuration (bad JSON, missing files, contradictory
// options). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violation of the wire protocol (bad frame, out-of-order message, failed
// alignment). The CLI maps this to exit code 3.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (CSV cells, checkpoint blobs).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Accuracy ratios are clamped into [kRateEps, 1 - kRateEps] before taking
// logs so a perfect or hopeless learner yields a large finite alpha.
inline constexpr double kRateEps = 1e-10;

// Arguments to exp() are clamped into [-kExpArgMax, kExpArgMax].
inline constexpr double kExpArgMax = 700.0;

// Tolerance for "sums to one" checks on ignorance vectors.
inline constexpr double kNormTol = 1e-9;

inline double safe_exp(double x) {
  if (x > kExpArgMax) x = kExpArgMax;
  if (x < -kExpArgMax) x = -kExpArgMax;
  return std::exp(x);
}

inline double clamp_rate(double r) {
  if (!(r > kRateEps)) return kRateEps;
  if (!(r < 1.0 - kRateEps)) return 1.0 - kRateEps;
  return r;
}

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a list of tags
// (replication index, agent index, round, purpose id, ...).
inline uint64_t mix_seed(uint64_t base, std::initializer_list<uint64_t> tags) {
  uint64_t h = base;
  (void)splitmix64(h);
  for (uint64_t t : tags) {
    h ^= t + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    (void)splitmix64(h);
  }
  uint64_t s = h;
  return splitmix64(s);
}

// Deterministic random source. All draws are built from raw mt19937_64
// output rather than std distributions so results do not depend on the
// standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  size_t index(size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
    uint64_t bound = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return static_cast<size_t>(v % bound);
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Fixed-format double rendering used for CSV output so files are
// byte-stable across runs and transports.
inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace ascii
