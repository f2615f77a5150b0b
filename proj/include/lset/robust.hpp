#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lset/kernels.hpp"
#include "lset/oracle.hpp"
#include "lset/rng.hpp"

namespace lset {

struct RobustMeanParams {
  double delta_prime = 0.05;
  /// Upper bound on the second moment of a sample.
  double variance_bound = 1.0;
};

/// ln(2 / delta'): Catoni needs strictly more than twice this many samples.
double catoni_log_term(double delta_prime);
/// Smallest n with n > 2 ln(2 / delta').
std::size_t catoni_min_samples(double delta_prime);

/// Catoni M-estimate: the root of sum_i psi(a (z_i - mu)) with
/// psi(x) = sign(x) ln(1 + |x| + x^2 / 2). Always inside [min z, max z].
double catoni_mean(std::span<const double> samples, const RobustMeanParams& params);

struct EstimateTable {
  /// One robust estimate per target, in target order.
  std::vector<double> W;
  /// ||v||^2 in the A^{-1} norm for each target.
  std::vector<double> norm2;
  Design lambda;
  std::size_t tau = 0;
};

struct RipsParams {
  std::size_t tau = 0;
  double delta = 0.1;
  /// B^2 + sigma^2; scales the per-target variance bound.
  double second_moment = 1.0;
};

/// Draws tau arms iid from lambda (one oracle call each), forms per-target
/// inverse-propensity samples <v, A^{-1} phi(x_j)> y_j and Catoni-averages them
/// at confidence delta / |targets|.
EstimateTable rips(const InverseForm& inv, std::span<const FeatureCombo> targets,
                   const Design& lambda, const RipsParams& params, SamplingOracle& oracle,
                   Rng& design_rng);

EstimateTable rips(const ArmSet& arms, std::span<const FeatureCombo> targets, const Design& lambda,
                   double gamma, const RipsParams& params, SamplingOracle& oracle, Rng& design_rng);

}  // namespace lset
