#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace fedsim {

namespace detail {

// splitmix64 finalizer (Vigna's public-domain constants).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Counter-based splitmix64 stream. Cheap to copy; every draw advances the
// counter by the golden-ratio increment and finalizes it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  // Uniform in [0, 1), 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Modulo bias is < 2^-53 for the n used here (client/sample counts).
    return next_u64() % n;
  }

  // Standard normal via Box-Muller; consumes exactly two words.
  double normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Gamma(alpha, 1) by Marsaglia-Tsang, with the u^(1/alpha) boost for
  // alpha < 1.
  double gamma(double alpha) {
    if (alpha < 1.0) {
      double u = uniform_open();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Symmetric Dirichlet(alpha) over n components.
  std::vector<double> dirichlet(double alpha, std::size_t n) {
    std::vector<double> g(n);
    double sum = 0.0;
    for (auto& v : g) {
      v = gamma(alpha);
      sum += v;
    }
    if (!(sum > 0.0)) {
      // All draws underflowed; fall back to the uniform simplex point.
      for (auto& v : g) v = 1.0 / static_cast<double>(n);
      return g;
    }
    for (auto& v : g) v /= sum;
    return g;
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives independent streams from a master seed. Streams are a pure function
// of (seed, purpose, client, round); nothing else may perturb them, so
// toggling method options never shifts data generation or shuffling.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t master_seed) : master_(master_seed) {}

  Rng stream(std::string_view purpose, std::uint64_t client = 0,
             std::uint64_t round = 0) const {
    std::uint64_t s = detail::mix64(master_ ^ detail::fnv1a64(purpose));
    s = detail::mix64(s ^ (client + 0x9e3779b97f4a7c15ULL));
    s = detail::mix64(s ^ (round + 0xd1b54a32d192ed03ULL));
    return Rng(s);
  }

  std::uint64_t seed() const { return master_; }

 private:
  std::uint64_t master_;
};

}  // namespace fedsim
