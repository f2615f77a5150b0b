#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace lset {

enum class StopReason { AllClassified, ToleranceRoundCap, BudgetExhausted };

std::string stop_reason_name(StopReason r);

struct RoundHistory {
  int t = 0;
  double delta_t = 0.0;
  double gamma = 0.0;
  std::vector<double> lambda;
  /// Design objective value at lambda.
  double g_value = 0.0;
  double q_t = 0.0;
  std::size_t n_t = 0;
  /// Active arms (MELK) or active ordered pairs (MILK) at the start of the round,
  /// with the estimate W for each in the same order.
  std::vector<std::size_t> active_arms;
  std::vector<std::pair<std::size_t, std::size_t>> active_pairs;
  std::vector<double> estimates;
  std::vector<std::size_t> to_good;
  std::vector<std::size_t> to_bad;
  std::size_t samples_after = 0;
};

/// Declared super-level set at a point in the run.
struct Snapshot {
  std::size_t samples = 0;
  int round = 0;
  std::vector<std::size_t> declared;
  /// Arms already certified above the threshold (G_hat or H_t).
  std::vector<std::size_t> certified;
  std::size_t n_good = 0;
  std::size_t n_bad = 0;
  std::size_t n_active = 0;
};

struct RunResult {
  std::string algorithm;
  std::vector<std::size_t> G_hat;
  std::vector<std::size_t> B_hat;
  std::vector<std::size_t> R_hat;
  /// Still unclassified at the end (arms).
  std::vector<std::size_t> active;
  std::vector<RoundHistory> rounds;
  std::vector<Snapshot> snapshots;
  std::size_t total_samples = 0;
  StopReason stop_reason = StopReason::AllClassified;

  /// Latest snapshot taken at or before `samples` (the first one if none).
  const Snapshot& snapshot_at(std::size_t samples) const;
  /// Canonical JSON text; identical runs give identical bytes.
  std::string serialize() const;
};

}  // namespace lset
