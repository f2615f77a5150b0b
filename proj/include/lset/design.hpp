#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lset/kernels.hpp"

namespace lset {

/// Minimize over designs lambda the worst-case (weighted) inverse quadratic form
///   g(lambda) = max_groups min_{t in group} w_t ||v_t||^2_{A(lambda)^{-1}}.
/// With no groups every target is its own group, which is the plain
/// max-over-targets objective.
struct DesignProblem {
  ArmSet arms;
  std::vector<FeatureCombo> targets;
  double gamma = 0.0;
  /// Per-target multipliers; empty means all ones.
  std::vector<double> weights;
  /// Optional partition (or cover) of target indices.
  std::vector<std::vector<std::size_t>> groups;

  void validate() const;
};

enum class StepRule { Harmonic, Fixed };

struct FWConfig {
  int max_iters = 500;
  StepRule step_rule = StepRule::Harmonic;
  /// Step size for StepRule::Fixed.
  double step = 1.0;
  /// Start at this vertex instead of the uniform design.
  std::optional<std::size_t> init_vertex;
  /// Stop once the linearized improvement stays below stop_tol * value for
  /// five consecutive iterations. Zero disables early stopping.
  double stop_tol = 1e-4;
  InverseRoute route = InverseRoute::Auto;

  void validate() const;
};

struct ObjectiveValue {
  double value = 0.0;
  /// Target index attaining the value (lowest index on ties).
  std::size_t argmax_target = 0;
};

ObjectiveValue design_objective(const DesignProblem& p, const Design& lambda,
                                InverseRoute route = InverseRoute::Auto);

struct FWResult {
  Design lambda;
  double value = 0.0;
  int iters = 0;
};

/// Frank-Wolfe with subgradient at the active target. Returns the best iterate
/// seen, so the value never exceeds the starting design's value.
FWResult frank_wolfe_design(const DesignProblem& p, const FWConfig& cfg);

/// Level-set objective, explicit threshold alpha or implicit tolerance epsilon.
struct LevelObjective {
  enum class Kind { Explicit, Implicit };
  Kind kind = Kind::Explicit;
  double alpha = 0.0;
  double epsilon = 0.0;

  static LevelObjective explicit_threshold(double a) { return {Kind::Explicit, a, 0.0}; }
  static LevelObjective implicit_fraction(double e) { return {Kind::Implicit, 0.0, e}; }
  void validate() const;
};

/// Ordered pairs (i, j), i != j, and the implicit difference combos
/// phi(x_i) - (1 - epsilon) phi(x_j).
std::vector<std::pair<std::size_t, std::size_t>> all_ordered_pairs(std::size_t n);
FeatureCombo pair_combo(std::size_t i, std::size_t j, double epsilon);

/// Builds the gap-weighted problem whose minimizer is the oracle allocation
/// for known function values. Gaps below `gap_floor` are raised to it.
/// Throws DegenerateInstance if a relevant gap is exactly zero and no floor is set.
DesignProblem oracle_problem(const ArmSet& arms, std::span<const double> true_f,
                             const LevelObjective& objective, double gamma, double gap_floor = 0.0);

Design oracle_allocation(const ArmSet& arms, std::span<const double> true_f,
                         const LevelObjective& objective, double gamma, const FWConfig& cfg,
                         double gap_floor = 0.0);

/// Smallest beta > 0 with c (2 + sqrt(D(beta))) <= beta, c = 4 (sqrt(gamma) theta_norm + h),
/// where D(beta) is the minimal design value over targets whose gap is at most beta.
/// D is piecewise constant between consecutive distinct gaps, so the scan is exact
/// up to the FW tolerance.
double beta_bar(const ArmSet& arms, std::span<const double> true_f, double theta_norm, double h,
                double gamma, const LevelObjective& objective, const FWConfig& cfg);

}  // namespace lset
