#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lset/oracle.hpp"

namespace lset {

struct LatteConfig {
  double epsilon = 0.5;
  /// Noise std used in the phase-1 elimination widths.
  double sigma = 1.0;
  std::size_t budget = 0;
  double gamma_apt = 0.0;
  /// tau = mu_hat - epsilon instead of (1 - epsilon) mu_hat.
  bool additive_threshold = false;

  void validate(std::size_t n_arms) const;
};

/// sqrt(pulls) (|mean_hat - tau| + gamma_apt); zero when the arm was never pulled.
double apt_index(std::size_t pulls, double mean_hat, double tau, double gamma_apt);

/// max_i i * (clipped gap_(i))^{-2} with gaps |mu_i - (1 - eps) max mu| clipped below
/// at omega and sorted increasingly (i counts from 1).
double h2_omega(std::span<const double> means, double epsilon, double omega);

struct LattePhase1Round {
  int m = 0;
  std::size_t target_pulls = 0;
  double width = 0.0;
  std::vector<std::size_t> survivors;
};

struct LatteResult {
  std::vector<std::size_t> S_hat;
  double tau = 0.0;
  std::size_t best_arm = 0;
  int rounds = 0;
  double psi = 0.0;
  std::vector<LattePhase1Round> phase1;
  /// Pulls consumed by each phase.
  std::size_t phase_pulls[3] = {0, 0, 0};
  std::vector<std::size_t> pulls;
  std::vector<double> means;
  std::vector<std::size_t> phase3_pulls;

  std::size_t total_pulls() const { return phase_pulls[0] + phase_pulls[1] + phase_pulls[2]; }
  std::string serialize() const;
};

LatteResult run_latte(std::size_t n_arms, SamplingOracle& oracle, const LatteConfig& cfg);

}  // namespace lset
