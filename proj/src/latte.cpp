#include "lset/latte.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "lset/errors.hpp"

namespace lset {

void LatteConfig::validate(std::size_t n_arms) const {
  if (n_arms < 1) throw InvalidInput("LATTE needs at least one arm");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be >= 0");
  if (!(gamma_apt >= 0.0)) throw InvalidInput("gamma_apt must be >= 0");
  if (budget < 3 * n_arms) {
    throw InvalidInput("LATTE budget " + std::to_string(budget) + " is below 3K = " + std::to_string(3 * n_arms));
  }
}

double apt_index(std::size_t pulls, double mean_hat, double tau, double gamma_apt) {
  if (pulls == 0) return 0.0;
  return std::sqrt(static_cast<double>(pulls)) * (std::abs(mean_hat - tau) + gamma_apt);
}

double h2_omega(std::span<const double> means, double epsilon, double omega) {
  if (means.empty()) throw InvalidInput("h2_omega needs at least one mean");
  if (!(omega > 0.0)) throw InvalidInput("omega must be positive");
  const double level = (1.0 - epsilon) * *std::max_element(means.begin(), means.end());
  std::vector<double> gaps;
  for (double m : means) gaps.push_back(std::max(std::abs(m - level), omega));
  std::sort(gaps.begin(), gaps.end());
  double h = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) h = std::max(h, static_cast<double>(i + 1) / (gaps[i] * gaps[i]));
  return h;
}

namespace {

struct Stats {
  std::vector<std::size_t> pulls;
  std::vector<double> sums;

  explicit Stats(std::size_t k) : pulls(k, 0), sums(k, 0.0) {}
  double mean(std::size_t i) const { return pulls[i] ? sums[i] / static_cast<double>(pulls[i]) : 0.0; }
  void pull(std::size_t i, SamplingOracle& oracle) {
    sums[i] += oracle.observe(i);
    ++pulls[i];
  }
};

double log_term(double budget, int m) { return std::max(1.0, std::log(budget * std::pow(2.0, -m) / 3.0)); }

}  // namespace

LatteResult run_latte(std::size_t n_arms, SamplingOracle& oracle, const LatteConfig& cfg) {
  cfg.validate(n_arms);
  const std::size_t k = n_arms;
  const double t_total = static_cast<double>(cfg.budget);
  const std::size_t third = cfg.budget / 3;
  Stats st(k);
  LatteResult out;

  // Phase 1: doubling-schedule elimination towards a near-best arm.
  out.rounds = std::max(1, static_cast<int>(std::ceil(0.5 * std::log2(t_total / (3.0 * std::numbers::e)))));
  const int m_last = out.rounds;
  out.psi = static_cast<double>(third) /
            (static_cast<double>(k) * std::pow(2.0, m_last - 1) * log_term(t_total, m_last));
  std::vector<std::size_t> survivors(k);
  for (std::size_t i = 0; i < k; ++i) survivors[i] = i;
  std::size_t used = 0;
  std::size_t prev_target = 0;
  for (int m = 1; m <= m_last && survivors.size() > 1; ++m) {
    const double lt = log_term(t_total, m);
    std::size_t target = static_cast<std::size_t>(std::floor(out.psi * std::pow(2.0, m - 1) * lt));
    target = std::max({target, prev_target, std::size_t{1}});
    prev_target = target;
    for (std::size_t i : survivors) {
      while (st.pulls[i] < target && used < third) {
        st.pull(i, oracle);
        ++used;
      }
    }
    LattePhase1Round r;
    r.m = m;
    r.target_pulls = target;
    r.width = cfg.sigma * std::sqrt(2.0 * lt / static_cast<double>(target));
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i : survivors) best = std::max(best, st.mean(i));
    std::vector<std::size_t> keep;
    for (std::size_t i : survivors) {
      if (!(st.mean(i) + r.width < best - r.width)) keep.push_back(i);
    }
    survivors = std::move(keep);
    r.survivors = survivors;
    out.phase1.push_back(std::move(r));
  }
  for (std::size_t c = 0; used < third; ++c) {
    st.pull(survivors[c % survivors.size()], oracle);
    ++used;
  }
  out.phase_pulls[0] = used;
  out.best_arm = survivors.front();
  for (std::size_t i : survivors) {
    if (st.mean(i) > st.mean(out.best_arm)) out.best_arm = i;
  }

  // Phase 2: sharpen the estimate of the chosen arm and fix the threshold.
  for (std::size_t j = 0; j < third; ++j) st.pull(out.best_arm, oracle);
  out.phase_pulls[1] = third;
  const double mu_best = st.mean(out.best_arm);
  out.tau = cfg.additive_threshold ? mu_best - cfg.epsilon : (1.0 - cfg.epsilon) * mu_best;

  // Phase 3: APT against tau with the remaining budget.
  const std::size_t third_budget = cfg.budget - 2 * third;
  out.phase3_pulls.assign(k, 0);
  std::size_t used3 = 0;
  for (std::size_t i = 0; i < k && used3 < third_budget; ++i) {
    if (st.pulls[i] == 0) {
      st.pull(i, oracle);
      ++out.phase3_pulls[i];
      ++used3;
    }
  }
  while (used3 < third_budget) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      const double b = apt_index(st.pulls[i], st.mean(i), out.tau, cfg.gamma_apt);
      if (b < best) {
        best = b;
        arg = i;
      }
    }
    st.pull(arg, oracle);
    ++out.phase3_pulls[arg];
    ++used3;
  }
  out.phase_pulls[2] = used3;

  out.pulls = st.pulls;
  for (std::size_t i = 0; i < k; ++i) {
    out.means.push_back(st.mean(i));
    // The reference arm stands in for the maximizer, which is always in the set,
    // even if its own running mean drifted below tau during phase 3.
    if (i == out.best_arm || st.mean(i) >= out.tau) out.S_hat.push_back(i);
  }
  return out;
}

std::string LatteResult::serialize() const {
  nlohmann::json j;
  j["S_hat"] = S_hat;
  j["tau"] = tau;
  j["best_arm"] = best_arm;
  j["rounds"] = rounds;
  j["psi"] = psi;
  nlohmann::json p1 = nlohmann::json::array();
  for (const auto& r : phase1) {
    p1.push_back({{"m", r.m}, {"target_pulls", r.target_pulls}, {"width", r.width}, {"survivors", r.survivors}});
  }
  j["phase1"] = p1;
  j["phase_pulls"] = {phase_pulls[0], phase_pulls[1], phase_pulls[2]};
  j["pulls"] = pulls;
  j["means"] = means;
  j["phase3_pulls"] = phase3_pulls;
  return j.dump();
}

}  // namespace lset
