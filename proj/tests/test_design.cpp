#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "doctest.h"
#include "lset/design.hpp"
#include "lset/environment.hpp"
#include "lset/errors.hpp"
#include "oracles.hpp"

using namespace lset;

namespace {

ArmSet unit_arms(int n) { return ArmSet(Eigen::MatrixXd::Identity(n, n), KernelSpec::linear()); }

std::vector<FeatureCombo> arm_targets(std::size_t n) {
  std::vector<FeatureCombo> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(FeatureCombo::arm(i));
  return t;
}

/// Objective on a design restricted to `support`; +inf when the form is undefined.
double objective_or_inf(const DesignProblem& p, const std::vector<std::size_t>& support, const std::vector<double>& w) {
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.arms.size()));
  for (std::size_t k = 0; k < support.size(); ++k) lam(static_cast<Eigen::Index>(support[k])) = w[k];
  try {
    return design_objective(p, Design{lam}).value;
  } catch (const RankDeficiency&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

TEST_SUITE("design") {
  TEST_CASE("design_objective examples") {
    DesignProblem p{unit_arms(2), arm_targets(2), 0.0, {}, {}};
    const auto v = design_objective(p, Design::uniform(2));
    CHECK(v.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(v.argmax_target == 0);

    DesignProblem single{unit_arms(2), {FeatureCombo::arm(0)}, 0.0, {}, {}};
    CHECK(design_objective(single, Design::vertex(2, 0)).value == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("design_objective matches per-target Gram-space oracle (4-arm RBF)") {
    std::mt19937_64 g(41);
    const auto pts = oracle::random_points(g, 4, 2);
    ArmSet arms(pts, KernelSpec::squared_exponential(0.7));
    DesignProblem p{arms, {FeatureCombo::arm(0), FeatureCombo::difference(1, 2, 0.5), FeatureCombo::arm(3)}, 0.1,
                    {}, {}};
    const Eigen::VectorXd lam = oracle::random_simplex(g, 4);
    const Eigen::MatrixXd k = oracle::gram(pts, false, 0.7);
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t t = 0; t < p.targets.size(); ++t) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(4);
      for (const auto& term : p.targets[t].terms()) a(static_cast<Eigen::Index>(term.arm)) = term.coef;
      const double v = oracle::gram_space_form(k, lam, 0.1, a, a);
      if (v > best) {
        best = v;
        arg = t;
      }
    }
    const auto got = design_objective(p, Design{lam});
    CHECK(got.value == doctest::Approx(best).epsilon(1e-9));
    CHECK(got.argmax_target == arg);
  }

  TEST_CASE("Frank-Wolfe on two orthonormal arms converges to the uniform design") {
    DesignProblem p{unit_arms(2), arm_targets(2), 0.0, {}, {}};
    FWConfig cfg;
    cfg.init_vertex = std::nullopt;
    const auto r = frank_wolfe_design(p, cfg);
    // Grid search over the 1-simplex at resolution 1e-3.
    double best = std::numeric_limits<double>::infinity();
    double best_w = 0.0;
    for (int i = 1; i < 1000; ++i) {
      const double w = i / 1000.0;
      const double v = std::max(1.0 / w, 1.0 / (1.0 - w));
      if (v < best) {
        best = v;
        best_w = w;
      }
    }
    CHECK(std::abs(r.lambda[0] - best_w) <= 0.02);
    CHECK(r.value == doctest::Approx(best).epsilon(0.02));
    CHECK(r.lambda.valid());
  }

  TEST_CASE("Frank-Wolfe from a vertex with a single target concentrates on the best vertex") {
    Eigen::MatrixXd pts(3, 2);
    pts << 1, 0, 0, 1, 0.8, 0.6;
    ArmSet arms(pts, KernelSpec::linear());
    DesignProblem p{arms, {FeatureCombo::arm(0)}, 0.1, {}, {}};
    double vertex_min = std::numeric_limits<double>::infinity();
    std::size_t vertex_arg = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double v = design_objective(p, Design::vertex(3, i)).value;
      if (v < vertex_min) {
        vertex_min = v;
        vertex_arg = i;
      }
    }
    CHECK(vertex_arg == 0);
    const auto r = frank_wolfe_design(p, FWConfig{});
    CHECK(r.lambda[vertex_arg] > 0.95);
    CHECK(r.value == doctest::Approx(vertex_min).epsilon(0.02));
  }

  TEST_CASE("Frank-Wolfe on pair targets of a reduced Soare instance is within 5% of grid search") {
    InstanceSpec s;
    s.generator = GeneratorKind::Soare;
    s.n = 8;
    s.d = 3;
    s.threshold = ThresholdSpec::implicit_epsilon(0.5);
    const auto inst = generate_instance(s, 3);
    DesignProblem p{inst->arms, {}, 0.0, {}, {}};
    for (auto [i, j] : all_ordered_pairs(8)) p.targets.push_back(pair_combo(i, j, 0.5));
    FWConfig cfg;
    cfg.max_iters = 500;
    const auto r = frank_wolfe_design(p, cfg);
    std::vector<std::size_t> order(8);
    for (std::size_t i = 0; i < 8; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.lambda[a] > r.lambda[b]; });
    const std::vector<std::size_t> support(order.begin(), order.begin() + 3);
    double grid_min = std::numeric_limits<double>::infinity();
    for (const auto& w : oracle::simplex_grid(3, 50)) grid_min = std::min(grid_min, objective_or_inf(p, support, w));
    CHECK(std::isfinite(grid_min));
    CHECK(r.value <= 1.05 * grid_min);
  }

  TEST_CASE("property: FW output is on the simplex and never worse than its start") {
    std::mt19937_64 g(43);
    for (int rep = 0; rep < 15; ++rep) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(g() % 8);
      ArmSet arms(oracle::random_points(g, n, 2),
                  rep % 2 ? KernelSpec::linear() : KernelSpec::squared_exponential(0.5));
      DesignProblem p{arms, arm_targets(static_cast<std::size_t>(n)), 0.05, {}, {}};
      FWConfig cfg;
      cfg.max_iters = 100;
      if (rep % 3 == 0) cfg.step_rule = StepRule::Fixed, cfg.step = 0.5;
      const auto r = frank_wolfe_design(p, cfg);
      CHECK(r.lambda.valid());
      CHECK((r.lambda.weights.array() >= 0.0).all());
      CHECK(std::abs(r.lambda.weights.sum() - 1.0) <= 1e-9);
      CHECK(r.value <= design_objective(p, Design::uniform(static_cast<std::size_t>(n))).value + 1e-9);
      CHECK(r.value == doctest::Approx(design_objective(p, r.lambda).value).epsilon(1e-12));
      CHECK(frank_wolfe_design(p, cfg).lambda.weights == r.lambda.weights);
    }
  }

  TEST_CASE("property: design objective is convex along random segments") {
    std::mt19937_64 g(47);
    for (int rep = 0; rep < 30; ++rep) {
      const Eigen::Index n = 3 + static_cast<Eigen::Index>(g() % 6);
      ArmSet arms(oracle::random_points(g, n, 3), KernelSpec::squared_exponential(0.8));
      DesignProblem p{arms, arm_targets(static_cast<std::size_t>(n)), 0.01, {}, {}};
      const Eigen::VectorXd a = oracle::random_simplex(g, n);
      const Eigen::VectorXd b = oracle::random_simplex(g, n);
      const double ga = design_objective(p, Design{a}).value;
      const double gb = design_objective(p, Design{b}).value;
      const double gm = design_objective(p, Design{0.5 * (a + b)}).value;
      CHECK(gm <= 0.5 * (ga + gb) + 1e-9);
    }
  }

  TEST_CASE("FW config validation") {
    FWConfig c;
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    FWConfig f;
    f.step_rule = StepRule::Fixed;
    f.step = 1.5;
    CHECK_THROWS_AS(f.validate(), InvalidInput);
    DesignProblem empty{unit_arms(2), {}, 0.0, {}, {}};
    CHECK_THROWS_AS(frank_wolfe_design(empty, FWConfig{}), InvalidInput);
  }

  TEST_CASE("oracle allocation: two-arm explicit instance matches grid search") {
    const std::vector<double> f = {1.0, 0.2};
    const auto lam = oracle_allocation(unit_arms(2), f, LevelObjective::explicit_threshold(0.5), 0.0, FWConfig{});
    double best = std::numeric_limits<double>::infinity();
    double best_w = 0.0;
    for (int i = 1; i < 1000; ++i) {
      const double w = i / 1000.0;
      const double v = std::max(1.0 / (w * 0.25), 1.0 / ((1.0 - w) * 0.09));
      if (v < best) {
        best = v;
        best_w = w;
      }
    }
    CHECK(std::abs(lam[0] - best_w) <= 0.02);
  }

  TEST_CASE("oracle allocation with equal gaps equals the unweighted design") {
    std::mt19937_64 g(53);
    ArmSet arms(oracle::random_points(g, 5, 2), KernelSpec::linear());
    const std::vector<double> f = {1.0, -1.0, 1.0, -1.0, 1.0};
    const auto lam = oracle_allocation(arms, f, LevelObjective::explicit_threshold(0.0), 0.01, FWConfig{});
    DesignProblem p{arms, arm_targets(5), 0.01, {}, {}};
    const auto plain = frank_wolfe_design(p, FWConfig{});
    CHECK((lam.weights - plain.lambda.weights).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("oracle allocation favours the near-threshold arm") {
    const std::vector<double> f = {0.51, 1.5, -0.5};
    const auto lam = oracle_allocation(unit_arms(3), f, LevelObjective::explicit_threshold(0.5), 0.0, FWConfig{});
    CHECK(lam[0] > lam[1]);
    CHECK(lam[0] > lam[2]);
  }

  TEST_CASE("oracle allocation rejects a zero gap unless floored") {
    const std::vector<double> f = {0.5, 1.0};
    CHECK_THROWS_AS(oracle_problem(unit_arms(2), f, LevelObjective::explicit_threshold(0.5), 0.0), DegenerateInstance);
    const auto p = oracle_problem(unit_arms(2), f, LevelObjective::explicit_threshold(0.5), 0.0, 0.1);
    CHECK(p.weights[0] == doctest::Approx(100.0));
    CHECK(p.weights[1] == doctest::Approx(4.0));
  }

  TEST_CASE("property: scaling all oracle weights leaves the design unchanged") {
    std::mt19937_64 g(59);
    ArmSet arms(oracle::random_points(g, 6, 2), KernelSpec::squared_exponential(0.5));
    const std::vector<double> f = {0.9, -0.3, 0.2, 0.6, -0.8, 0.4};
    auto p = oracle_problem(arms, f, LevelObjective::explicit_threshold(0.1), 0.05);
    auto q = p;
    for (double& w : q.weights) w *= 8.0;
    const auto a = frank_wolfe_design(p, FWConfig{});
    const auto b = frank_wolfe_design(q, FWConfig{});
    CHECK((a.lambda.weights - b.lambda.weights).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(b.value == doctest::Approx(8.0 * a.value).epsilon(1e-10));
  }

  TEST_CASE("implicit oracle problem structure") {
    const std::vector<double> f = {1.0, 0.9, 0.2};
    const auto p = oracle_problem(unit_arms(3), f, LevelObjective::implicit_fraction(0.2), 0.0);
    // Good arms 0, 1 contribute one group per other arm; arm 2 one group of its witnesses.
    CHECK(p.groups.size() == 5);
    CHECK(p.groups.back().size() == 2);
    for (std::size_t t : p.groups.back()) {
      const auto& c = p.targets[t];
      double v = 0.0;
      for (const auto& term : c.terms()) v += term.coef * f[term.arm];
      CHECK(v < 0.0);
    }
    const auto lam = oracle_allocation(unit_arms(3), f, LevelObjective::implicit_fraction(0.2), 0.0, FWConfig{});
    CHECK(lam.valid());
  }

  TEST_CASE("beta_bar examples") {
    std::mt19937_64 g(61);
    ArmSet arms(oracle::random_points(g, 4, 2), KernelSpec::linear());
    const std::vector<double> f = {0.2, 0.7, -0.4, 0.9};
    CHECK(beta_bar(arms, f, 1.0, 0.0, 0.0, LevelObjective::explicit_threshold(0.5), FWConfig{}) == 0.0);

    // One arm, D = 1 whenever it is a target: the defining inequality gives exactly 4 h (2 + 1).
    ArmSet one(Eigen::MatrixXd::Ones(1, 1), KernelSpec::linear());
    const std::vector<double> f1 = {1.0};
    const double b = beta_bar(one, f1, 1.0, 0.1, 0.0, LevelObjective::explicit_threshold(0.5), FWConfig{});
    CHECK(b <= 1.2 + 1e-12);
    CHECK(b == doctest::Approx(1.2).epsilon(1e-9));
  }

  TEST_CASE("beta_bar matches a direct scan over a beta grid") {
    std::mt19937_64 g(67);
    ArmSet arms(oracle::random_points(g, 6, 1), KernelSpec::squared_exponential(0.5));
    const std::vector<double> f = {0.3, 0.45, 0.9, 0.1, 0.62, 0.51};
    const double h = 0.05, gamma = 0.01, tn = 1.0, alpha = 0.5;
    const double c = 4.0 * (std::sqrt(gamma) * tn + h);
    const FWConfig cfg;
    std::map<std::vector<std::size_t>, double> memo;
    auto d_of = [&](double beta) {
      std::vector<std::size_t> set;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (std::abs(f[i] - alpha) <= beta) set.push_back(i);
      }
      if (set.empty()) return 0.0;
      auto it = memo.find(set);
      if (it != memo.end()) return it->second;
      DesignProblem p{arms, {}, gamma, {}, {}};
      for (std::size_t i : set) p.targets.push_back(FeatureCombo::arm(i));
      return memo[set] = frank_wolfe_design(p, cfg).value;
    };
    double scan = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 20000; ++k) {
      const double beta = k * 1e-3;
      if (c * (2.0 + std::sqrt(d_of(beta))) <= beta) {
        scan = beta;
        break;
      }
    }
    const double got = beta_bar(arms, f, tn, h, gamma, LevelObjective::explicit_threshold(alpha), cfg);
    REQUIRE(std::isfinite(scan));
    CHECK(got <= scan + 1e-12);
    CHECK(got > scan - 1e-3 - 1e-12);
  }

  TEST_CASE("property: beta_bar is monotone in h and gamma") {
    std::mt19937_64 g(71);
    ArmSet arms(oracle::random_points(g, 5, 2), KernelSpec::squared_exponential(0.6));
    const std::vector<double> f = {0.3, 0.45, 0.9, 0.1, 0.62};
    const auto obj = LevelObjective::explicit_threshold(0.5);
    double prev = 0.0;
    for (double h : {0.0, 0.01, 0.02, 0.05, 0.1}) {
      const double b = beta_bar(arms, f, 1.0, h, 0.01, obj, FWConfig{});
      CHECK(b >= prev);
      prev = b;
    }
    prev = 0.0;
    for (double gamma : {0.0001, 0.001, 0.01, 0.1}) {
      const double b = beta_bar(arms, f, 1.0, 0.01, gamma, obj, FWConfig{});
      CHECK(b >= prev);
      prev = b;
    }
  }

  TEST_CASE("ordered pairs and pair combos") {
    const auto pairs = all_ordered_pairs(3);
    CHECK(pairs.size() == 6);
    for (auto [i, j] : pairs) CHECK(i != j);
    const auto c = pair_combo(0, 1, 0.5);
    CHECK(c.coef(0) == 1.0);
    CHECK(c.coef(1) == -0.5);
  }
}
