#pragma once

#include <cstdint>
#include <span>

namespace lset {

/// Purposes used to derive independent streams from one run seed.
enum class Stream : std::uint64_t {
  kNoise = 1,
  kDesign = 2,
  kInstance = 3,
  kAux = 4,
};

/// Counter-based generator: output i is a keyed hash of (seed, stream, i).
///
/// Two generators built from the same (seed, stream) produce bit-identical
/// sequences regardless of what other streams did, so sampling noise and
/// design randomness never interfere.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  Rng(std::uint64_t seed, Stream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller).
  double normal();
  /// Index drawn from the distribution whose cumulative sums are `cdf`
  /// (last entry is the total mass; need not be exactly 1).
  std::size_t categorical(std::span<const double> cdf);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace lset
