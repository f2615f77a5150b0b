#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "lset/environment.hpp"
#include "lset/errors.hpp"
#include "lset/melk.hpp"
#include "lset/robust.hpp"
#include "oracles.hpp"

using namespace lset;

namespace {

Eigen::MatrixXd three_arms() {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 0.8, 0.6;
  return x;
}

MelkConfig base_cfg(double alpha, double sigma, double B = 1.0) {
  MelkConfig c;
  c.alpha = alpha;
  c.sigma = sigma;
  c.B = B;
  return c;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

void check_structure(const RunResult& r, std::size_t n, const MelkConfig& cfg) {
  std::set<std::size_t> g(r.G_hat.begin(), r.G_hat.end()), b(r.B_hat.begin(), r.B_hat.end()),
      a(r.active.begin(), r.active.end());
  for (std::size_t i : g) CHECK(b.count(i) == 0);
  CHECK(g.size() + b.size() + a.size() == n);
  std::vector<std::size_t> r_expect;
  for (std::size_t i = 0; i < n; ++i) {
    if (!b.count(i)) r_expect.push_back(i);
  }
  CHECK(sorted(r.R_hat) == r_expect);

  std::set<std::size_t> seen;
  std::size_t sum_n = 0;
  const double floor_samples = 2.0 * std::log(static_cast<double>(n) / cfg.delta);
  for (std::size_t k = 0; k < r.rounds.size(); ++k) {
    const auto& h = r.rounds[k];
    CHECK(h.t == static_cast<int>(k) + 1);
    CHECK(static_cast<double>(h.n_t) >= floor_samples);
    CHECK(h.delta_t == doctest::Approx(cfg.delta / (2.0 * h.t * h.t)));
    sum_n += h.n_t;
    if (k > 0) {
      // A_{t+1} is A_t minus the round's eliminations.
      std::set<std::size_t> prev(r.rounds[k - 1].active_arms.begin(), r.rounds[k - 1].active_arms.end());
      for (std::size_t i : r.rounds[k - 1].to_good) prev.erase(i);
      for (std::size_t i : r.rounds[k - 1].to_bad) prev.erase(i);
      CHECK(std::vector<std::size_t>(prev.begin(), prev.end()) == h.active_arms);
    }
    for (std::size_t i : h.to_good) CHECK(seen.insert(i).second);
    for (std::size_t i : h.to_bad) CHECK(seen.insert(i).second);
  }
  if (r.stop_reason != StopReason::BudgetExhausted) CHECK(r.total_samples == sum_n);
  if (cfg.beta_tilde > 0.0) CHECK(static_cast<int>(r.rounds.size()) <= tolerance_round_cap(cfg.beta_tilde));
}

}  // namespace

TEST_SUITE("melk") {
  TEST_CASE("round budget formula and tolerance cap") {
    CHECK(tolerance_round_cap(4.0) == 0);
    CHECK(tolerance_round_cap(0.5) == 3);
    CHECK(tolerance_round_cap(0.3) == 4);
    CHECK(tolerance_round_cap(0.0) > 1000);

    PhasedConfig c;
    c.delta = 0.1;
    c.B = 1.0;
    c.sigma = 1.0;
    const auto rb = round_budget(c, 2, 3.0, 10, 4);
    const double q = 16.0 * 16.0 * 3.0 * 2.0 * std::log(2.0 * 4.0 * 100.0 / 0.1);
    CHECK(rb.delta_t == doctest::Approx(0.0125));
    CHECK(rb.q_t == doctest::Approx(q));
    CHECK(rb.n_t == static_cast<std::size_t>(std::ceil(q)));
    // Tiny design value: the floor 2 ln(n / delta) and the Catoni minimum take over.
    const auto small = round_budget(c, 1, 0.0, 10, 4);
    CHECK(small.n_t >= static_cast<std::size_t>(std::ceil(2.0 * std::log(100.0))));
    CHECK(small.n_t >= catoni_min_samples(0.05 / 4.0));

    c.gamma = 0.5;
    c.gamma_decay = true;
    CHECK(design_gamma(c, 1) == doctest::Approx(0.05));
    CHECK(design_gamma(c, 5) == doctest::Approx(0.01));
  }

  TEST_CASE("noiseless three-arm linear instance") {
    ArmSet arms(three_arms(), KernelSpec::linear());
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      fixture::TableOracle o({1.0, 0.0, 0.8}, 0.0, seed);
      const auto cfg = base_cfg(0.5, 0.0);
      const auto r = run_melk(arms, o, cfg, seed);
      CHECK(sorted(r.G_hat) == std::vector<std::size_t>{0, 2});
      CHECK(r.B_hat == std::vector<std::size_t>{1});
      CHECK(sorted(r.R_hat) == std::vector<std::size_t>{0, 2});
      CHECK(r.stop_reason == StopReason::AllClassified);
      // Arm 2 sits 0.3 above alpha, inside the margin 2 * 2^-t until t = 3.
      CHECK(r.rounds.size() == 3);
      check_structure(r, 3, cfg);
    }
  }

  TEST_CASE("tolerance of 4 allows no rounds") {
    ArmSet arms(three_arms(), KernelSpec::linear());
    fixture::TableOracle o({1.0, 0.0, 0.8}, 0.0, 1);
    auto cfg = base_cfg(0.5, 0.0);
    cfg.beta_tilde = 4.0;
    const auto r = run_melk(arms, o, cfg, 1);
    CHECK(r.total_samples == 0);
    CHECK(o.samples_used() == 0);
    CHECK(r.rounds.empty());
    CHECK(sorted(r.R_hat) == std::vector<std::size_t>{0, 1, 2});
    CHECK(r.stop_reason == StopReason::ToleranceRoundCap);
  }

  TEST_CASE("property: structural invariants on noisy Soare instances") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto env = generate(fixture::soare_spec(8, 3, 1.0, ThresholdSpec::explicit_alpha(0.5)), seed);
      auto cfg = base_cfg(0.5, 1.0);
      cfg.beta_tilde = 0.25;
      const auto r = run_melk(env.arms(), env, cfg, seed);
      check_structure(r, 8, cfg);
      CHECK(r.total_samples == env.samples_used());
    }
  }

  TEST_CASE("property: noiseless soundness on random linear instances") {
    std::mt19937_64 g(211);
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const Eigen::MatrixXd pts = oracle::random_points(g, 6, 3);
      Eigen::VectorXd theta = oracle::random_points(g, 3, 1).col(0);
      const Eigen::VectorXd f = pts * theta;
      // Put alpha in the widest gap between sorted values so no arm is near it.
      std::vector<double> fs(f.data(), f.data() + f.size());
      std::sort(fs.begin(), fs.end());
      std::size_t best = 0;
      for (std::size_t k = 1; k + 1 < fs.size(); ++k) {
        if (fs[k + 1] - fs[k] > fs[best + 1] - fs[best]) best = k;
      }
      if (fs[best + 1] - fs[best] < 0.3) continue;
      const double alpha = 0.5 * (fs[best] + fs[best + 1]);
      ArmSet arms(pts, KernelSpec::linear());
      fixture::TableOracle o(std::vector<double>(f.data(), f.data() + f.size()), 0.0, seed);
      auto cfg = base_cfg(alpha, 0.0, std::max(1.0, std::ceil(f.cwiseAbs().maxCoeff())));
      cfg.gamma = 1e-9;
      const auto r = run_melk(arms, o, cfg, seed);
      CHECK(r.stop_reason == StopReason::AllClassified);
      for (std::size_t i : r.G_hat) CHECK(f(static_cast<Eigen::Index>(i)) > alpha);
      for (std::size_t i : r.B_hat) CHECK(f(static_cast<Eigen::Index>(i)) < alpha);
      ++checked;
    }
    CHECK(checked >= 3);
  }

  TEST_CASE("guarantee check: exact recovery") {
    ArmSet arms(three_arms(), KernelSpec::linear());
    fixture::TableOracle o({1.0, 0.0, 0.8}, 0.0, 3);
    const auto cfg = base_cfg(0.5, 0.0);
    const auto r = run_melk(arms, o, cfg, 3);
    const std::vector<double> f = {1.0, 0.0, 0.8};
    const auto rep = melk_classification_guarantee_check(r, arms, f, cfg, 1.0, 0.0);
    CHECK(rep.beta_bar == 0.0);
    CHECK(rep.ok());
  }

  TEST_CASE("guarantee check: empty good set") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 0, 0, 1, 0.6, 0.8;
    ArmSet arms(x, KernelSpec::linear());
    const std::vector<double> f = {-1.6, -2.0, -2.56};
    fixture::TableOracle o(f, 0.0, 4);
    const auto cfg = base_cfg(0.5, 0.0, 3.0);
    const auto r = run_melk(arms, o, cfg, 4);
    CHECK(r.R_hat.empty());
    CHECK(melk_classification_guarantee_check(r, arms, f, cfg, std::sqrt(1.6 * 1.6 + 4.0), 0.0).ok());
  }

  TEST_CASE("guarantee check flags violations") {
    ArmSet arms(three_arms(), KernelSpec::linear());
    const std::vector<double> f = {1.0, 0.0, 0.8};
    RunResult fake;
    fake.R_hat = {1};
    fake.G_hat = {1};
    fake.B_hat = {0, 2};
    const auto rep = melk_classification_guarantee_check(fake, arms, f, base_cfg(0.5, 0.0), 1.0, 0.0);
    CHECK_FALSE(rep.ok());
    CHECK(rep.missed_high == std::vector<std::size_t>{0, 2});
    CHECK(rep.spurious_low == std::vector<std::size_t>{1});
    CHECK(rep.good_missed_high == std::vector<std::size_t>{0, 2});
    CHECK(rep.good_spurious_low == std::vector<std::size_t>{1});
  }

  TEST_CASE("misspecified oracle keeps high arms in the returned set") {
    // f = linear part + a bounded perturbation of size at most h.
    Eigen::MatrixXd x(5, 2);
    x << 1, 0, 0, 1, 0.8, 0.6, 0.6, 0.8, 0.95, 0.31;
    ArmSet arms(x, KernelSpec::linear());
    const double h = 0.1;
    const Eigen::VectorXd lin = x * Eigen::Vector2d(1.0, 0.0);
    const std::vector<double> pert = {0.1, -0.1, -0.05, 0.1, -0.1};
    std::vector<double> f(5);
    for (std::size_t i = 0; i < 5; ++i) f[i] = lin(static_cast<Eigen::Index>(i)) + pert[i];
    auto cfg = base_cfg(0.5, 0.5, 2.0);
    cfg.beta_tilde = 0.25;
    int pass = 0;
    const int seeds = 25;
    for (int seed = 0; seed < seeds; ++seed) {
      fixture::TableOracle o(f, cfg.sigma, static_cast<std::uint64_t>(seed));
      const auto r = run_melk(arms, o, cfg, static_cast<std::uint64_t>(seed));
      const auto rep = melk_classification_guarantee_check(r, arms, f, cfg, 1.0, h);
      if (rep.missed_high.empty()) ++pass;
    }
    CHECK(pass >= static_cast<int>(std::ceil((1.0 - cfg.delta) * seeds)));
  }

  TEST_CASE("property: a larger minimum gap does not increase median samples") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Identity(2, 2);
    ArmSet arms(x, KernelSpec::linear());
    auto median_samples = [&](double alpha) {
      std::vector<std::size_t> s;
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        fixture::TableOracle o({1.0, 0.0}, 1.0, seed);
        s.push_back(run_melk(arms, o, base_cfg(alpha, 1.0), seed).total_samples);
      }
      std::sort(s.begin(), s.end());
      return s[12];
    };
    // Delta_min is 0.2 at alpha = 0.2 and 0.4 at alpha = 0.4.
    CHECK(median_samples(0.4) <= median_samples(0.2));
  }

  TEST_CASE("runs are deterministic given the seed") {
    auto spec = fixture::soare_spec(8, 3, 1.0, ThresholdSpec::explicit_alpha(0.5));
    auto once = [&] {
      auto env = generate(spec, 11);
      auto cfg = base_cfg(0.5, 1.0);
      cfg.beta_tilde = 0.25;
      return run_melk(env.arms(), env, cfg, 11).serialize();
    };
    CHECK(once() == once());
  }

  TEST_CASE("budget exhaustion returns a partial result") {
    ArmSet arms(three_arms(), KernelSpec::linear());
    fixture::TableOracle o({1.0, 0.0, 0.8}, 0.5, 1, 1000);
    const auto cfg = base_cfg(0.5, 0.5);
    const auto r = run_melk(arms, o, cfg, 1);
    CHECK(r.stop_reason == StopReason::BudgetExhausted);
    CHECK(r.total_samples == 1000);
    check_structure(r, 3, cfg);
    CHECK(r.snapshots.back().samples == 1000);
  }

  TEST_CASE("safety cap on rounds reports budget exhaustion") {
    ArmSet arms(Eigen::MatrixXd::Identity(2, 2), KernelSpec::linear());
    fixture::TableOracle o({0.5, 1.0}, 0.0, 1);
    auto cfg = base_cfg(0.5, 0.0);
    cfg.max_rounds = 3;
    const auto r = run_melk(arms, o, cfg, 1);
    CHECK(r.rounds.size() == 3);
    CHECK(r.stop_reason == StopReason::BudgetExhausted);
    CHECK(r.G_hat == std::vector<std::size_t>{1});
    CHECK(r.active == std::vector<std::size_t>{0});
  }

  TEST_CASE("batched mode") {
    ArmSet arms(three_arms(), KernelSpec::linear());
    fixture::TableOracle o({1.0, 0.0, 0.8}, 0.1, 2);
    auto cfg = base_cfg(0.5, 0.1);
    cfg.batch_size = 10;
    const auto r = run_melk(arms, o, cfg, 2);
    CHECK(r.stop_reason == StopReason::AllClassified);
    CHECK(sorted(r.G_hat) == std::vector<std::size_t>{0, 2});
    CHECK(r.B_hat == std::vector<std::size_t>{1});
    for (const auto& h : r.rounds) CHECK(h.n_t == 10);
    CHECK(r.total_samples == 10 * r.rounds.size());
  }

  TEST_CASE("config validation") {
    ArmSet arms(three_arms(), KernelSpec::linear());
    fixture::TableOracle o({1.0, 0.0, 0.8}, 0.0, 1);
    auto bad = [&](auto mutate) {
      auto c = base_cfg(0.5, 0.0);
      mutate(c);
      CHECK_THROWS_AS(run_melk(arms, o, c, 1), InvalidInput);
    };
    bad([](MelkConfig& c) { c.delta = 0.0; });
    bad([](MelkConfig& c) { c.delta = 1.0; });
    bad([](MelkConfig& c) { c.beta_tilde = -0.1; });
    bad([](MelkConfig& c) { c.B = 0.0; });
    bad([](MelkConfig& c) { c.gamma = -1.0; });
    bad([](MelkConfig& c) { c.batch_size = 0; });
    CHECK(o.samples_used() == 0);
  }
}
