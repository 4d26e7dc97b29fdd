#pragma once

// Uniform streams, inverse-transform sampling and importance-sampling maps
// f_t = f * p_t / p.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "lowenv/distributions.hpp"

namespace lowenv {

// ---------------------------------------------------------------------------
// Philox4x32-10 (Salmon, Moraes, Dror, Shaw; SC'11). Counter-based: output
// block i depends only on (key, i), so streams are reproducible on every
// platform and can be split by seed without shared state.

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(Block counter, std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
      counter = single_round(counter, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return counter;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Block single_round(const Block& c, const std::array<std::uint32_t, 2>& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// SplitMix64 finaliser; used to derive per-replication seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of the r-th independent sub-stream of `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r) noexcept {
  return mix64(mix64(seed) ^ mix64(r + 0x632BE59BD9B4E019ull));
}

/// Uniform (0,1) stream: value i is built from the 53 high bits of one half
/// of Philox block i/2 as (bits + 0.5) / 2^53, so 0 and 1 never occur.
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  double next() noexcept { return at(counter_++); }

  std::vector<double> draw(std::size_t n) {
    std::vector<double> out(n);
    for (auto& u : out) u = next();
    return out;
  }

  /// Value at absolute position `index`, independent of the stream state.
  double at(std::uint64_t index) const noexcept {
    const std::uint64_t block = index >> 1;
    const Philox4x32::Block ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), 0u,
                                0u};
    const auto out = Philox4x32::generate(ctr, {static_cast<std::uint32_t>(seed_),
                                                static_cast<std::uint32_t>(seed_ >> 32)});
    const std::size_t half = (index & 1u) * 2;
    const std::uint64_t bits = (std::uint64_t{out[half]} << 32) | out[half + 1];
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

inline std::vector<double> draw_uniform_stream(std::uint64_t seed, std::size_t n) {
  return SampleStream(seed).draw(n);
}

inline std::vector<double> inverse_transform_sample(const Distribution& dist, std::span<const double> uniforms) {
  std::vector<double> out(uniforms.size());
  for (std::size_t i = 0; i < uniforms.size(); ++i) out[i] = dist.quantile(uniforms[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Importance weights

enum class Backend { inverse_transform, importance };

inline std::string to_string(Backend b) {
  return b == Backend::importance ? "importance" : "inverse_transform";
}

/// Diagnostics gathered while forming weights.
struct WeightDiagnostics {
  std::size_t zero_central_density = 0;  // samples where p(x) = 0 (weight set to 0)
  std::size_t support_violations = 0;    // ... of which p_t(x) > 0
};

namespace detail {

// Central density at one sample, cached by the estimator.
struct CentralPoint {
  double density;
  double log_density;
  bool normal;

  static CentralPoint at(const Distribution& central, double x) {
    if (central.is_normal()) return {central.density(x), central.log_density(x), true};
    return {central.density(x), 0.0, false};
  }
};

// p_t(x)/p(x); between two normal laws computed as exp(log p_t - log p).
inline double weight_with_central(const Distribution& member, const CentralPoint& c, double x,
                                  WeightDiagnostics* diag) {
  if (c.normal && member.is_normal()) return std::exp(member.log_density(x) - c.log_density);
  if (c.density == 0.0) {
    if (diag != nullptr) {
      ++diag->zero_central_density;
      if (member.density(x) > 0.0) ++diag->support_violations;
    }
    return 0.0;
  }
  return member.density(x) / c.density;
}

}  // namespace detail

/// Density ratio p_t(x)/p(x) for the member at t; 0 where p(x) = 0.
inline double importance_weight(const Distribution& member, const Distribution& central, double x,
                                WeightDiagnostics* diag = nullptr) {
  if (!member.has_density() || !central.has_density()) {
    throw DensityUnavailable("importance weights need densities for both the member and the central law");
  }
  return detail::weight_with_central(member, detail::CentralPoint::at(central, x), x, diag);
}

inline double importance_weight(const Family& family, const Distribution& central, std::span<const double> t,
                                double x, WeightDiagnostics* diag = nullptr) {
  return importance_weight(family.dist_at(t), central, x, diag);
}

/// f_t evaluated on a sample.
struct WeightedEval {
  Point t;
  std::vector<double> values;
  std::size_t n = 0;
  WeightDiagnostics diagnostics;
};

/// values[k] = f(x_k) p_t(x_k)/p(x_k) for the importance backend (samples
/// drawn from `central`), or f(F_t^-1(u_k)) for the inverse-transform backend
/// (samples are the uniforms themselves).
template <class F>
WeightedEval evaluate_f_t(const F& f, const Family& family, const Distribution& central, std::span<const double> t,
                          std::span<const double> samples, Backend backend) {
  WeightedEval out{Point(t.begin(), t.end()), std::vector<double>(samples.size()), samples.size(), {}};
  const Distribution member = family.dist_at(t);
  if (backend == Backend::inverse_transform) {
    for (std::size_t k = 0; k < samples.size(); ++k) out.values[k] = f(member.quantile(samples[k]));
  } else {
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const double fx = f(samples[k]);
      const double w = importance_weight(member, central, samples[k], &out.diagnostics);
      out.values[k] = fx == 0.0 ? 0.0 : fx * w;
    }
  }
  return out;
}

}  // namespace lowenv
