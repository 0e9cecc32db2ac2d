#pragma once

#include <cmath>
#include <cstdint>
#include <locale>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace exemplar {

// Deterministic random source. All distributions are implemented on top of
// the raw mt19937_64 output so that identical seeds produce identical streams
// on every platform (std::uniform_real_distribution and friends are not
// bit-portable across standard library implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform double in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive. Rejection sampling keeps the
  // result unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Marsaglia polar method with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream derived from (seed, stream id).
  Rng split(std::uint64_t stream) const { return Rng(mix(seed_, stream)); }

  std::uint64_t seed() const { return seed_; }

  // Engine state as text; locale-pinned so round-trips are exact.
  std::string serialize() const {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << seed_ << ' ' << has_spare_ << ' ';
    os.precision(17);
    os << spare_ << ' ' << eng_;
    return os.str();
  }

  static Rng deserialize(const std::string& text) {
    std::istringstream is(text);
    is.imbue(std::locale::classic());
    Rng r;
    is >> r.seed_ >> r.has_spare_ >> r.spare_ >> r.eng_;
    if (!is) throw std::runtime_error("Rng::deserialize: malformed state text");
    return r;
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = (a ^ 0x9e3779b97f4a7c15ull) + 0xbf58476d1ce4e5b9ull * (b + 1);
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_ = 0;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace exemplar
