#include "lset/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lset/errors.hpp"

namespace lset {

void DesignProblem::validate() const {
  if (targets.empty()) throw InvalidInput("design problem needs at least one target");
  if (!(gamma >= 0.0)) throw InvalidInput("design problem gamma must be >= 0");
  for (const auto& t : targets) t.validate(arms.size());
  if (!weights.empty()) {
    if (weights.size() != targets.size()) {
      throw InvalidInput("design problem: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(targets.size()) + " targets");
    }
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("target weights must be positive and finite");
    }
  }
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidInput("design problem has an empty target group");
    for (std::size_t t : g) {
      if (t >= targets.size()) throw InvalidInput("target group refers to a missing target");
    }
  }
}

void FWConfig::validate() const {
  if (max_iters < 1) throw InvalidInput("fw.max_iters must be >= 1");
  if (step_rule == StepRule::Fixed && !(step > 0.0 && step <= 1.0)) {
    throw InvalidInput("fw fixed step must lie in (0, 1]");
  }
  if (!(stop_tol >= 0.0)) throw InvalidInput("fw.stop_tol must be >= 0");
}

void LevelObjective::validate() const {
  if (kind == Kind::Implicit && !(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidInput("implicit epsilon must lie in (0, 1)");
  }
}

namespace {

struct Evaluation {
  double value;
  std::size_t target;
  double weight;
};

double weight_of(const DesignProblem& p, std::size_t t) { return p.weights.empty() ? 1.0 : p.weights[t]; }

Evaluation evaluate(const DesignProblem& p, const InverseForm& inv) {
  std::vector<double> q(p.targets.size());
  for (std::size_t t = 0; t < p.targets.size(); ++t) q[t] = weight_of(p, t) * inv.quad(p.targets[t]);
  Evaluation best{-std::numeric_limits<double>::infinity(), 0, 1.0};
  if (p.groups.empty()) {
    for (std::size_t t = 0; t < q.size(); ++t) {
      if (q[t] > best.value) best = {q[t], t, weight_of(p, t)};
    }
    return best;
  }
  for (const auto& g : p.groups) {
    std::size_t arg = g.front();
    for (std::size_t t : g) {
      if (q[t] < q[arg] || (q[t] == q[arg] && t < arg)) arg = t;
    }
    if (q[arg] > best.value) best = {q[arg], arg, weight_of(p, arg)};
  }
  return best;
}

}  // namespace

ObjectiveValue design_objective(const DesignProblem& p, const Design& lambda, InverseRoute route) {
  p.validate();
  const InverseForm inv(p.arms, lambda, p.gamma, route);
  const auto e = evaluate(p, inv);
  return {e.value, e.target};
}

FWResult frank_wolfe_design(const DesignProblem& p, const FWConfig& cfg) {
  p.validate();
  cfg.validate();
  const std::size_t n = p.arms.size();
  Design lambda = cfg.init_vertex ? Design::vertex(n, *cfg.init_vertex) : Design::uniform(n);
  if (cfg.init_vertex && *cfg.init_vertex >= n) throw InvalidInput("fw init vertex out of range");

  FWResult best{lambda, std::numeric_limits<double>::infinity(), 0};
  int small_gap_streak = 0;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const InverseForm inv(p.arms, lambda, p.gamma, cfg.route);
    const auto e = evaluate(p, inv);
    if (e.value < best.value) {
      best.lambda = lambda;
      best.value = e.value;
    }
    const Eigen::VectorXd r = inv.response(p.targets[e.target]);
    const Eigen::VectorXd r2 = r.array().square();
    Eigen::Index j = 0;
    r2.maxCoeff(&j);
    const double gap = e.weight * (r2(j) - lambda.weights.dot(r2));
    if (cfg.stop_tol > 0.0 && gap < cfg.stop_tol * e.value) {
      if (++small_gap_streak >= 5) {
        ++iter;
        break;
      }
    } else {
      small_gap_streak = 0;
    }
    const double eta = cfg.step_rule == StepRule::Harmonic ? 1.0 / (iter + 2.0) : cfg.step;
    lambda.weights *= (1.0 - eta);
    lambda.weights(j) += eta;
  }
  // The final iterate has not been scored yet when the loop ran to max_iters.
  if (iter == cfg.max_iters) {
    const InverseForm inv(p.arms, lambda, p.gamma, cfg.route);
    const auto e = evaluate(p, inv);
    if (e.value < best.value) {
      best.lambda = lambda;
      best.value = e.value;
    }
  }
  best.iters = iter;
  best.lambda.weights /= best.lambda.weights.sum();
  return best;
}

std::vector<std::pair<std::size_t, std::size_t>> all_ordered_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(n * (n > 0 ? n - 1 : 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out.emplace_back(i, j);
    }
  }
  return out;
}

FeatureCombo pair_combo(std::size_t i, std::size_t j, double epsilon) {
  return FeatureCombo::difference(i, j, 1.0 - epsilon);
}

namespace {

double floored_gap(double gap, double floor) {
  const double g = std::abs(gap);
  if (g < floor) return floor;
  if (g == 0.0) throw DegenerateInstance("an arm sits exactly on the threshold; oracle allocation is unbounded");
  return g;
}

}  // namespace

DesignProblem oracle_problem(const ArmSet& arms, std::span<const double> true_f,
                             const LevelObjective& objective, double gamma, double gap_floor) {
  objective.validate();
  const std::size_t n = arms.size();
  if (true_f.size() != n) throw InvalidInput("true_f length does not match the arm count");
  DesignProblem p{arms, {}, gamma, {}, {}};
  if (objective.kind == LevelObjective::Kind::Explicit) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = floored_gap(true_f[i] - objective.alpha, gap_floor);
      p.targets.push_back(FeatureCombo::arm(i));
      p.weights.push_back(1.0 / (g * g));
    }
    return p;
  }
  if (n == 1) {
    // A lone arm is trivially the maximizer; any design is optimal.
    p.targets.push_back(FeatureCombo::arm(0));
    return p;
  }
  const double fmax = *std::max_element(true_f.begin(), true_f.end());
  const double level = (1.0 - objective.epsilon) * fmax;
  for (std::size_t i = 0; i < n; ++i) {
    const bool good = true_f[i] >= level;
    std::vector<std::size_t> group;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double diff = true_f[i] - (1.0 - objective.epsilon) * true_f[j];
      if (!good && !(diff < 0.0)) continue;
      const double g = floored_gap(diff, gap_floor);
      p.targets.push_back(pair_combo(i, j, objective.epsilon));
      p.weights.push_back(1.0 / (g * g));
      if (good) {
        p.groups.push_back({p.targets.size() - 1});
      } else {
        group.push_back(p.targets.size() - 1);
      }
    }
    if (!good) p.groups.push_back(std::move(group));
  }
  return p;
}

Design oracle_allocation(const ArmSet& arms, std::span<const double> true_f,
                         const LevelObjective& objective, double gamma, const FWConfig& cfg,
                         double gap_floor) {
  return frank_wolfe_design(oracle_problem(arms, true_f, objective, gamma, gap_floor), cfg).lambda;
}

double beta_bar(const ArmSet& arms, std::span<const double> true_f, double theta_norm, double h,
                double gamma, const LevelObjective& objective, const FWConfig& cfg) {
  objective.validate();
  if (!(theta_norm >= 0.0) || !(h >= 0.0)) throw InvalidInput("beta_bar needs theta_norm >= 0 and h >= 0");
  if (true_f.size() != arms.size()) throw InvalidInput("true_f length does not match the arm count");
  const double c = 4.0 * (std::sqrt(gamma) * theta_norm + h);
  if (c == 0.0) return 0.0;

  std::vector<FeatureCombo> targets;
  std::vector<double> gaps;
  const std::size_t n = arms.size();
  if (objective.kind == LevelObjective::Kind::Explicit) {
    for (std::size_t i = 0; i < n; ++i) {
      targets.push_back(FeatureCombo::arm(i));
      gaps.push_back(std::abs(true_f[i] - objective.alpha));
    }
  } else {
    for (auto [i, j] : all_ordered_pairs(n)) {
      targets.push_back(pair_combo(i, j, objective.epsilon));
      gaps.push_back(std::abs(true_f[i] - (1.0 - objective.epsilon) * true_f[j]));
    }
  }
  std::vector<double> levels = gaps;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  // Below the smallest gap no target is constrained and D = 0.
  if (levels.empty() || 2.0 * c < levels.front()) return 2.0 * c;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    DesignProblem p{arms, {}, gamma, {}, {}};
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (gaps[t] <= levels[k]) p.targets.push_back(targets[t]);
    }
    const double d = frank_wolfe_design(p, cfg).value;
    const double cand = std::max(levels[k], c * (2.0 + std::sqrt(std::max(d, 0.0))));
    const double next = k + 1 < levels.size() ? levels[k + 1] : std::numeric_limits<double>::infinity();
    if (cand < next) return cand;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace lset
