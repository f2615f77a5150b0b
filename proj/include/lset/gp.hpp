#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lset/design.hpp"
#include "lset/kernels.hpp"
#include "lset/oracle.hpp"
#include "lset/run_result.hpp"

namespace lset {

/// GP posterior over every arm of a finite domain with homoscedastic noise.
///
/// Observations are folded in by rank-one covariance updates; every
/// `refresh_every` observations the posterior is rebuilt from per-arm counts
/// and means (an exact sufficient statistic) to shed accumulated rounding.
class GpPosterior {
 public:
  GpPosterior(const ArmSet& arms, double noise_var, int refresh_every = 512);

  void observe(std::size_t arm, double y);
  /// Exact solve from the sufficient statistics.
  void refresh();

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  double variance(std::size_t i) const;
  double stddev(std::size_t i) const;
  double noise_var() const { return noise_var_; }
  std::size_t n_obs() const { return n_obs_; }
  const ArmSet& arms() const { return arms_; }

  /// Posterior variance at every arm after one more (hypothetical) observation
  /// at `arm`; does not touch any oracle.
  Eigen::VectorXd lookahead_variance(std::size_t arm) const;

 private:
  ArmSet arms_;
  double noise_var_;
  int refresh_every_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  std::vector<std::size_t> counts_;
  std::vector<double> sums_;
  std::size_t n_obs_ = 0;
  int since_refresh_ = 0;
};

/// Dense textbook formulas over an explicit observation list, used as a reference.
void gp_posterior_dense(const ArmSet& arms, const std::vector<std::size_t>& obs_arms,
                        const std::vector<double>& y, double noise_var, Eigen::VectorXd& mean,
                        Eigen::VectorXd& var);

enum class Policy { Straddle, Lse, LseImp, TruVar };

std::string policy_name(Policy p);
Policy parse_policy(const std::string& s);

struct BaselineConfig {
  Policy policy = Policy::Lse;
  /// Explicit alpha (Straddle, LSE, TruVar) or implicit epsilon (LSE-imp).
  LevelObjective objective;
  double beta_sqrt = 3.0;
  /// Observation noise std used by the posterior.
  double sigma = 1.0;
  /// Replace the GP interval by the unit-noise ridge interval with
  /// beta_t = (B^2 + sigma^2) ln(2 t^2 |X|^2 / delta).
  bool frequentist = false;
  double delta = 0.1;
  double B = 1.0;
  std::size_t budget = 10000;
  /// Sample counts at which a snapshot is forced.
  std::vector<std::size_t> checkpoints;
  int refresh_every = 512;

  void validate() const;
};

enum class Label : std::int8_t { Unclassified = 0, High = 1, Low = -1 };

struct BaselineState {
  std::vector<Label> label;
  /// Running intersection C_t of the confidence intervals.
  Eigen::VectorXd c_lo;
  Eigen::VectorXd c_hi;
  double f_opt = 0.0;
  double f_pes = 0.0;
  /// Samples drawn so far (t in the frequentist beta_t).
  std::size_t t = 0;

  static BaselineState initial(std::size_t n);
  std::size_t n_unclassified() const;
};

/// Multiplier on the posterior std in Q_t = mu +- w sigma.
double interval_scale(const BaselineConfig& cfg, std::size_t samples, std::size_t n_arms);

/// Next arm to sample: the policy's score maximized over unclassified arms,
/// lowest index on ties. Throws InvalidInput when nothing is unclassified.
std::size_t acquire_next(const BaselineState& state, const GpPosterior& gp, const BaselineConfig& cfg);

/// Intersects the new intervals into C_t and moves arms out of U_t.
void classify_step(BaselineState& state, const GpPosterior& gp, const BaselineConfig& cfg);

/// Super-level set currently declared: H_t plus unclassified arms whose mean
/// clears the (estimated) threshold.
std::vector<std::size_t> declared_set(const BaselineState& state, const GpPosterior& gp, const BaselineConfig& cfg);

RunResult run_baseline(const ArmSet& arms, SamplingOracle& oracle, const BaselineConfig& cfg);

}  // namespace lset
