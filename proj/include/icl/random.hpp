#pragma once

// Deterministic random streams and the handful of samplers the task
// generators need. Distributions are implemented here rather than taken from
// <random> so that draws are identical across standard libraries.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "icl/error.hpp"

namespace icl {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a master seed with a stream index into an independent 64-bit seed.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t s = master;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = stream ^ 0xd1b54a32d192ed03ULL;
  const std::uint64_t b = splitmix64(t);
  std::uint64_t u = a ^ (b * 0x9e3779b97f4a7c15ULL);
  return splitmix64(u);
}

/// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }
  Rng(std::uint64_t master, std::uint64_t stream) noexcept : Rng(derive_seed(master, stream)) {}

  [[nodiscard]] static Rng from_state(const State& state) noexcept {
    Rng r;
    r.s_ = state;
    return r;
  }
  [[nodiscard]] const State& state() const noexcept { return s_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift; bias is < n / 2^64 which is irrelevant here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box–Muller (one value per pair of uniforms).
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  State s_{};
};

// ---------------------------------------------------------------------------
// Samplers. Parameters are validated by the callers in tasks.hpp.

namespace sample {

inline double laplace(Rng& rng, double b) {
  const double u = rng.uniform() - 0.5;
  return -b * std::copysign(1.0, u) * std::log(1.0 - 2.0 * std::abs(u));
}

/// Exponential with rate lambda (mean 1/lambda).
inline double exponential(Rng& rng, double lambda) { return -std::log(rng.uniform()) / lambda; }

/// Gamma with shape alpha and scale theta (Marsaglia–Tsang, boosted for alpha < 1).
inline double gamma(Rng& rng, double alpha, double theta) {
  if (alpha < 1.0) {
    const double g = gamma(rng, alpha + 1.0, 1.0);
    return theta * g * std::pow(rng.uniform(), 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return theta * d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return theta * d * v;
  }
}

inline bool bernoulli(Rng& rng, double p) { return rng.uniform() < p; }

/// Poisson by sequential inversion; rates above 10 are split into chunks
/// of at most 10 and summed, which is exact by additivity.
inline std::uint64_t poisson(Rng& rng, double lambda) {
  std::uint64_t total = 0;
  while (lambda > 10.0) {
    total += poisson(rng, 10.0);
    lambda -= 10.0;
  }
  double p = std::exp(-lambda);
  double cdf = p;
  const double u = rng.uniform();
  std::uint64_t x = 0;
  while (u > cdf && x < 1000) {
    ++x;
    p *= lambda / static_cast<double>(x);
    cdf += p;
  }
  return total + x;
}

/// Student-t with nu degrees of freedom: Z·sqrt(nu/χ²_nu).
inline double student_t(Rng& rng, double nu) {
  const double z = rng.normal();
  const double chi2 = 2.0 * gamma(rng, 0.5 * nu, 1.0);
  return z * std::sqrt(nu / chi2);
}

}  // namespace sample
}  // namespace icl
