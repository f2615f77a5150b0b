#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lset/kernels.hpp"
#include "lset/oracle.hpp"
#include "lset/phased.hpp"
#include "lset/run_result.hpp"

namespace lset {

struct MilkConfig : PhasedConfig {
  double epsilon = 0.1;

  void validate() const;
};

/// Active ordered pairs (i, j), i != j, with per-arm counts of outstanding
/// pairs having that arm first.
class PairSet {
 public:
  explicit PairSet(std::size_t n_arms);

  std::size_t n_arms() const { return n_; }
  bool contains(std::size_t i, std::size_t j) const { return active_[i * n_ + j] != 0; }
  std::size_t first_count(std::size_t i) const { return first_count_[i]; }
  std::size_t size() const { return size_; }
  /// Active pairs in lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;

  void remove(std::size_t i, std::size_t j);
  /// Drops every pair with `arm` in either position.
  void remove_arm(std::size_t arm);

 private:
  std::size_t n_;
  std::vector<char> active_;
  std::vector<std::size_t> first_count_;
  std::size_t size_ = 0;
};

/// One combo phi(x_i) - (1 - epsilon) phi(x_j) per pair.
std::vector<FeatureCombo> y_eps(const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double epsilon);

RunResult run_milk(const ArmSet& arms, SamplingOracle& oracle, const MilkConfig& cfg, std::uint64_t seed);

}  // namespace lset
