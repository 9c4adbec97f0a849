#pragma once

#include <cstdint>
#include <string_view>

namespace xrn {

/// PCG32 (XSH-RR 64/32). Streams are selected by the increment, so two
/// generators with the same seed and different streams are independent.
class Prng {
 public:
  Prng(std::uint64_t seed, std::uint64_t stream);

  /// Child generator keyed by (base_seed, purpose, index). The result does
  /// not depend on how many numbers any other generator has drawn.
  static Prng derive(std::uint64_t base_seed, std::string_view purpose, std::uint64_t index = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform in [0, bound) without modulo bias; bound must be > 0.
  std::uint32_t bounded(std::uint32_t bound);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; consumes two 64-bit draws per call.
  double normal();

  std::uint64_t state() const noexcept { return state_; }
  std::uint64_t increment() const noexcept { return inc_; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace xrn
