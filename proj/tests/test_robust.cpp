#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "lset/errors.hpp"
#include "lset/robust.hpp"
#include "lset/rng.hpp"
#include "oracles.hpp"

using namespace lset;

TEST_SUITE("robust") {
  TEST_CASE("catoni: constant samples") {
    const std::vector<double> z(20, 5.0);
    CHECK(catoni_mean(z, {0.05, 1.0}) == 5.0);
  }

  TEST_CASE("catoni: symmetric samples") {
    std::vector<double> z;
    for (int i = 0; i < 50; ++i) {
      z.push_back(-1.0);
      z.push_back(1.0);
    }
    CHECK(std::abs(catoni_mean(z, {0.05, 1.0})) <= 1e-9);
  }

  TEST_CASE("catoni: frozen root against an independent bracketing solver") {
    // scipy.optimize.brentq on the same influence sum, xtol 1e-15.
    const std::vector<double> z = {0.0, 1.0, 2.0, 10.0, 0.5, 1.5, -1.0, 3.0, 2.5, 0.7};
    CHECK(catoni_mean(z, {0.1, 4.0}) == doctest::Approx(1.8844900874059263).epsilon(1e-9));
  }

  TEST_CASE("catoni: sample-size and parameter errors") {
    CHECK(catoni_min_samples(0.05) == 8);
    const std::vector<double> seven(7, 1.0);
    const std::vector<double> eight = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK_THROWS_AS(catoni_mean(seven, {0.05, 1.0}), InsufficientSamples);
    CHECK_NOTHROW(catoni_mean(eight, {0.05, 1.0}));
    CHECK_THROWS_AS(catoni_mean(eight, {0.05, 0.0}), InvalidInput);
    CHECK_THROWS_AS(catoni_mean(eight, {0.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(catoni_mean(eight, {1.0, 1.0}), InvalidInput);
  }

  TEST_CASE("property: catoni is shift equivariant and stays in the sample hull") {
    std::mt19937_64 g(101);
    std::student_t_distribution<double> heavy(2.5);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> z(30 + g() % 100);
      for (double& v : z) v = heavy(g);
      const double vb = 0.5 + (g() % 10);
      const double m = catoni_mean(z, {0.01, vb});
      CHECK(m >= *std::min_element(z.begin(), z.end()));
      CHECK(m <= *std::max_element(z.begin(), z.end()));
      const double c = static_cast<double>(g() % 1000) / 37.0 - 13.0;
      std::vector<double> s = z;
      for (double& v : s) v += c;
      CHECK(std::abs(catoni_mean(s, {0.01, vb}) - (m + c)) <= 1e-9 * std::max(1.0, std::abs(m + c)));
    }
  }

  TEST_CASE("catoni: Monte Carlo deviation bound") {
    std::mt19937_64 g(103);
    std::normal_distribution<double> nd(0.3, 1.0);
    const double bound = 2.0 * std::sqrt(1.09 * 2.0 * std::log(40.0) / 200.0);
    int ok = 0;
    std::vector<double> z(200);
    for (int trial = 0; trial < 1000; ++trial) {
      for (double& v : z) v = nd(g);
      if (std::abs(catoni_mean(z, {0.05, 1.09}) - 0.3) <= bound) ++ok;
    }
    CHECK(ok >= 950);
  }

  TEST_CASE("rips: noiseless two-arm linear instance") {
    // Each IPS sample is theta_i / (lambda_i + gamma) when arm i is drawn and 0
    // otherwise, so the per-target estimate is fixed by the realized draw counts.
    // A huge second-moment bound makes the Catoni root the plain sample mean.
    ArmSet arms(Eigen::MatrixXd::Identity(2, 2), KernelSpec::linear());
    const std::vector<FeatureCombo> targets = {FeatureCombo::arm(0), FeatureCombo::arm(1)};
    const double gamma = 1e-7;
    const std::vector<double> theta = {0.7, 0.2};
    double avg[2] = {0.0, 0.0};
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) {
      fixture::TableOracle o(theta, 0.0, 1);
      Rng rng(static_cast<std::uint64_t>(rep), Stream::kDesign);
      const auto est = rips(arms, targets, Design::uniform(2), gamma, RipsParams{64, 0.1, 1e12}, o, rng);
      REQUIRE(o.samples_used() == 64);
      REQUIRE(est.tau == 64);
      for (std::size_t i = 0; i < 2; ++i) {
        const double n_i = static_cast<double>(o.pulls()[i]);
        const double expect = theta[i] / (0.5 + gamma) * n_i / 64.0;
        CHECK(est.W[i] == doctest::Approx(expect).epsilon(1e-3));
        avg[i] += est.W[i] / reps;
      }
    }
    // Unbiased over the draw randomness.
    CHECK(std::abs(avg[0] - 0.7) <= 1e-2);
    CHECK(std::abs(avg[1] - 0.2) <= 1e-2);
  }

  TEST_CASE("property: rips consumes exactly tau samples regardless of target count") {
    std::mt19937_64 g(107);
    ArmSet arms(oracle::random_points(g, 6, 2), KernelSpec::squared_exponential(0.5));
    for (std::size_t n_targets : {1u, 3u, 6u}) {
      std::vector<FeatureCombo> targets;
      for (std::size_t i = 0; i < n_targets; ++i) targets.push_back(FeatureCombo::arm(i));
      fixture::TableOracle o(std::vector<double>(6, 0.5), 1.0, 3);
      Rng rng(1, Stream::kDesign);
      rips(arms, targets, Design::uniform(6), 0.1, RipsParams{50, 0.1, 2.0}, o, rng);
      CHECK(o.samples_used() == 50);
    }
  }

  TEST_CASE("rips: zero signal stays inside the deviation bound") {
    std::mt19937_64 g(109);
    ArmSet arms(oracle::random_points(g, 5, 2), KernelSpec::linear());
    std::vector<FeatureCombo> targets;
    for (std::size_t i = 0; i < 5; ++i) targets.push_back(FeatureCombo::arm(i));
    const double sigma = 1.0, B = 1.0, delta = 0.1;
    const std::size_t tau = 4000;
    fixture::TableOracle o(std::vector<double>(5, 0.0), sigma, 5);
    Rng rng(2, Stream::kDesign);
    const Design lam{oracle::random_simplex(g, 5)};
    const auto est = rips(arms, targets, lam, 0.01, RipsParams{tau, delta, B * B + sigma * sigma}, o, rng);
    const double width = 4.0 * std::sqrt((B * B + sigma * sigma) * std::log(2.0 * 5 / delta) / tau);
    for (std::size_t t = 0; t < 5; ++t) CHECK(std::abs(est.W[t]) <= width * std::sqrt(est.norm2[t]));
  }

  TEST_CASE("rips: precondition and budget errors") {
    ArmSet arms(Eigen::MatrixXd::Identity(2, 2), KernelSpec::linear());
    const std::vector<FeatureCombo> targets = {FeatureCombo::arm(0), FeatureCombo::arm(1)};
    fixture::TableOracle o({0.7, 0.2}, 0.0, 1);
    Rng rng(7, Stream::kDesign);
    // 2 ln(2 / 0.1) = 5.99
    CHECK_THROWS_AS(rips(arms, targets, Design::uniform(2), 0.1, RipsParams{5, 0.1, 1.0}, o, rng),
                    InsufficientSamples);
    fixture::TableOracle small({0.7, 0.2}, 0.0, 1, 10);
    CHECK_THROWS_AS(rips(arms, targets, Design::uniform(2), 0.1, RipsParams{64, 0.1, 1.0}, small, rng),
                    BudgetExhausted);
  }

  TEST_CASE("rips is deterministic for a fixed design seed") {
    ArmSet arms(Eigen::MatrixXd::Identity(3, 3), KernelSpec::linear());
    const std::vector<FeatureCombo> targets = {FeatureCombo::arm(0), FeatureCombo::difference(1, 2, 0.5)};
    auto run = [&] {
      InstanceSpec s = fixture::linear_spec(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(0.1, 0.5, -0.2), 1.0,
                                            ThresholdSpec::explicit_alpha(0.0));
      Environment env = generate(s, 9);
      Rng rng(9, Stream::kDesign);
      return rips(arms, targets, Design::uniform(3), 0.01, RipsParams{100, 0.1, 2.0}, env, rng).W;
    };
    CHECK(run() == run());
  }
}
