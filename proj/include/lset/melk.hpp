#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lset/kernels.hpp"
#include "lset/oracle.hpp"
#include "lset/phased.hpp"
#include "lset/run_result.hpp"

namespace lset {

struct MelkConfig : PhasedConfig {
  double alpha = 0.0;
  /// Batched variant: draw this many samples per design and classify with GP
  /// intervals mu +- batch_beta_sqrt * sd instead of the phased schedule.
  std::optional<std::size_t> batch_size;
  double batch_beta_sqrt = 3.0;
  std::size_t max_batches = 2000;

  void validate() const;
};

RunResult run_melk(const ArmSet& arms, SamplingOracle& oracle, const MelkConfig& cfg, std::uint64_t seed);

struct GuaranteeReport {
  double beta_bar = 0.0;
  /// Arms with f >= alpha + beta_bar missing from R_hat.
  std::vector<std::size_t> missed_high;
  /// Arms in R_hat with f < alpha - beta_tilde - beta_bar.
  std::vector<std::size_t> spurious_low;
  /// Same checks for G_hat returned in place of R_hat: arms with
  /// f >= alpha + beta_tilde + beta_bar missing from G_hat, and arms in G_hat with f < alpha - beta_bar.
  std::vector<std::size_t> good_missed_high;
  std::vector<std::size_t> good_spurious_low;

  bool ok() const {
    return missed_high.empty() && spurious_low.empty() && good_missed_high.empty() && good_spurious_low.empty();
  }
};

GuaranteeReport melk_classification_guarantee_check(const RunResult& result, const ArmSet& arms,
                                                    std::span<const double> true_f, const MelkConfig& cfg,
                                                    double theta_norm, double h);

}  // namespace lset
