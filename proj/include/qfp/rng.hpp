#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace qfp {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic counter-based random stream with cheap stream derivation.
//
// A stream is identified by `base`; output k is mix64(base + k*phi), the
// splitmix64 sequence. derive(id) builds an independent child stream from
// the parent's base without consuming parent state, so any (job, shot)
// stream can be reconstructed in isolation and results do not depend on
// how work is ordered or parallelized.
//
// No <random> distributions are used anywhere: their output is
// implementation-defined, which would break bit-reproducibility of logs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_(mix64(seed ^ kSeedSalt)) {}

  Rng derive(std::uint64_t stream_id) const {
    Rng child(0);
    child.base_ = mix64(base_ ^ mix64(stream_id ^ kStreamSalt));
    child.ctr_ = 0;
    return child;
  }
  Rng derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }

  std::uint64_t next_u64() { return mix64(base_ + (++ctr_) * kPhi); }

  // Uniform in [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  bool next_bit() { return (next_u64() & 1ULL) != 0; }

  // Uniform integer in [0, n); fixed-point multiply, bias < 2^-64.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  // Standard normal via Box-Muller; always consumes exactly two draws.
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // log-uniform in [lo, hi], lo > 0.
  double log_uniform(double lo, double hi) {
    return lo * std::exp(next_double() * std::log(hi / lo));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t kPhi = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x5b8cf57a03221a4dULL;
  static constexpr std::uint64_t kStreamSalt = 0xd6e8feb86659fd93ULL;
  static constexpr double kTwoPi = 6.283185307179586476925286766559;

  std::uint64_t base_ = 0;
  std::uint64_t ctr_ = 0;
};

}  // namespace qfp
