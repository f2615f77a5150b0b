#pragma once

#include <cstddef>

#include "lset/design.hpp"

namespace lset {

/// Parameters shared by the phased elimination algorithms.
struct PhasedConfig {
  double delta = 0.1;
  double gamma = 0.0;
  /// Use gamma / (10 i) at the i-th design instead of a fixed gamma.
  bool gamma_decay = false;
  /// Tolerance; 0 means run until everything is classified.
  double beta_tilde = 0.0;
  double B = 1.0;
  double sigma = 1.0;
  FWConfig fw;
  /// Hard cap on rounds; reaching it reports budget-exhausted.
  int max_rounds = 60;

  void validate() const;
};

/// ceil(log2(4 / beta_tilde)), or a sentinel larger than any round count when beta_tilde == 0.
int tolerance_round_cap(double beta_tilde);

/// Regularization used for the i-th design computation (i starts at 1).
double design_gamma(const PhasedConfig& cfg, int design_index);

struct RoundBudget {
  double delta_t = 0.0;
  double q_t = 0.0;
  std::size_t n_t = 0;
};

/// delta_t = delta / (2 t^2); q_t = 16 4^t g (B^2 + sigma^2) ln(2 t^2 n^2 / delta);
/// N_t = ceil(max(q_t, 2 ln(n / delta))), raised if needed so the Catoni
/// estimator over `n_targets` directions at confidence delta_t is defined.
RoundBudget round_budget(const PhasedConfig& cfg, int t, double g_value, std::size_t n_arms,
                         std::size_t n_targets);

}  // namespace lset
