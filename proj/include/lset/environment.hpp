#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lset/design.hpp"
#include "lset/kernels.hpp"
#include "lset/oracle.hpp"
#include "lset/rng.hpp"

namespace lset {

enum class GeneratorKind { GpDraw, Cosine1d, CosineSine2d, Soare, ExplicitLinear, Bandit };

struct ThresholdSpec {
  enum class Kind { Explicit, Quantile, Implicit };
  Kind kind = Kind::Explicit;
  /// alpha, quantile q in (0,1), or epsilon, depending on kind.
  double value = 0.0;

  static ThresholdSpec explicit_alpha(double a) { return {Kind::Explicit, a}; }
  static ThresholdSpec quantile(double q) { return {Kind::Quantile, q}; }
  static ThresholdSpec implicit_epsilon(double e) { return {Kind::Implicit, e}; }
};

struct InstanceSpec {
  GeneratorKind generator = GeneratorKind::ExplicitLinear;
  std::string name;

  /// RBF generators: kernel lengthscale used both to draw f (gp_draw) and by the algorithms.
  double lengthscale = 0.1;
  /// gp_draw / cosine_sine_2d: points i/grid (i = 1..grid) per axis; grid_dim in {1, 2}.
  int grid = 30;
  int grid_dim = 2;
  /// cosine_1d: f(x) = cos(frequency x) on n_points evenly spaced in [0, 1].
  double frequency = 0.0;
  int n_points = 700;
  /// soare: n arms in R^d, perturbation xi ~ U(-xi_range, xi_range).
  int n = 30;
  int d = 10;
  double xi_range = 0.2;
  /// explicit_linear: rows of `points` are arms, f = points * theta.
  Eigen::MatrixXd points;
  Eigen::VectorXd theta;
  /// bandit: identity arms with these means.
  std::vector<double> means;

  double sigma = 1.0;
  ThresholdSpec threshold;
  /// Signal bound override; otherwise max(1, ceil(max |f|)).
  std::optional<double> B;
  std::optional<std::size_t> budget;

  void validate() const;
};

/// Ground truth and metadata of a generated instance.
struct Instance {
  InstanceSpec spec;
  std::uint64_t seed = 0;
  ArmSet arms;
  std::vector<double> true_f;
  double sigma = 0.0;
  double B = 1.0;
  /// RKHS / Euclidean norm of the generating parameter when known.
  std::optional<double> theta_norm;
  /// Threshold resolved against true_f (quantiles become explicit alphas).
  LevelObjective objective;
};

std::shared_ptr<const Instance> generate_instance(const InstanceSpec& spec, std::uint64_t seed);

/// Noisy sampling oracle over an instance; exclusively owned by one run.
class Environment : public SamplingOracle {
 public:
  Environment(std::shared_ptr<const Instance> instance, std::uint64_t noise_seed,
              std::optional<std::size_t> budget = std::nullopt);

  double observe(std::size_t arm) override;
  std::size_t samples_used() const override { return used_; }
  std::optional<std::size_t> budget() const { return budget_; }
  std::optional<std::size_t> remaining() const;

  const Instance& instance() const { return *instance_; }
  std::shared_ptr<const Instance> instance_ptr() const { return instance_; }
  const ArmSet& arms() const { return instance_->arms; }
  std::span<const double> true_f() const { return instance_->true_f; }
  double sigma() const { return instance_->sigma; }

 private:
  std::shared_ptr<const Instance> instance_;
  Rng noise_;
  std::optional<std::size_t> budget_;
  std::size_t used_ = 0;
};

Environment generate(const InstanceSpec& spec, std::uint64_t seed);

struct TrueSets {
  std::vector<std::size_t> good;
  std::vector<double> gaps;
  double delta_min = 0.0;
  /// Some gap is exactly zero.
  bool degenerate = false;
  /// alpha, or (1 - epsilon) max f.
  double level = 0.0;
};

/// Explicit: G = {f > alpha}, gaps |f - alpha|. Implicit: G = {f >= (1-eps) max f},
/// gaps |f - (1-eps) max f|.
TrueSets true_sets_and_gaps(std::span<const double> true_f, const LevelObjective& objective);

bool membership_check(std::span<const double> true_f, double epsilon, std::size_t arm);
/// Same question via the signs of all pair differences f(x) - (1-eps) f(x').
bool pairwise_membership(std::span<const double> true_f, double epsilon, std::size_t arm);

/// Midpoint between the order statistics straddling rank round(q n).
double quantile_threshold(std::span<const double> values, double q);

std::string generator_name(GeneratorKind g);
GeneratorKind parse_generator(const std::string& s);

}  // namespace lset
