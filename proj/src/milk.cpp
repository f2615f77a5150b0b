#include "lset/milk.hpp"

#include <cmath>

#include "lset/design.hpp"
#include "lset/errors.hpp"
#include "lset/robust.hpp"
#include "lset/rng.hpp"

namespace lset {

void MilkConfig::validate() const {
  PhasedConfig::validate();
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
}

PairSet::PairSet(std::size_t n_arms) : n_(n_arms), active_(n_arms * n_arms, 1), first_count_(n_arms, 0) {
  for (std::size_t i = 0; i < n_; ++i) {
    active_[i * n_ + i] = 0;
    first_count_[i] = n_ - 1;
  }
  size_ = n_ * n_ - n_;
}

std::vector<std::pair<std::size_t, std::size_t>> PairSet::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (active_[i * n_ + j]) out.emplace_back(i, j);
    }
  }
  return out;
}

void PairSet::remove(std::size_t i, std::size_t j) {
  char& a = active_[i * n_ + j];
  if (!a) return;
  a = 0;
  --first_count_[i];
  --size_;
}

void PairSet::remove_arm(std::size_t arm) {
  for (std::size_t j = 0; j < n_; ++j) {
    remove(arm, j);
    remove(j, arm);
  }
}

std::vector<FeatureCombo> y_eps(const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double epsilon) {
  std::vector<FeatureCombo> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.push_back(pair_combo(i, j, epsilon));
  return out;
}

namespace {

enum : int { kActive = 0, kGood = 1, kBad = -1 };

Snapshot milk_snapshot(const std::vector<int>& status, const PairSet& ps,
                       const std::vector<std::pair<std::size_t, std::size_t>>& last_pairs,
                       const std::vector<double>& last_w, std::size_t samples, int round) {
  const std::size_t n = status.size();
  // An active arm is declared when none of its still-active pairs looked negative.
  std::vector<char> doubtful(n, 0);
  std::vector<char> estimated(n, 0);
  for (std::size_t k = 0; k < last_pairs.size(); ++k) {
    const auto [i, j] = last_pairs[k];
    if (!ps.contains(i, j)) continue;
    estimated[i] = 1;
    if (last_w[k] < 0.0) doubtful[i] = 1;
  }
  Snapshot s;
  s.samples = samples;
  s.round = round;
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] == kGood) {
      s.declared.push_back(i);
      s.certified.push_back(i);
      ++s.n_good;
    } else if (status[i] == kBad) {
      ++s.n_bad;
    } else {
      ++s.n_active;
      if (estimated[i] && !doubtful[i]) s.declared.push_back(i);
    }
  }
  return s;
}

}  // namespace

RunResult run_milk(const ArmSet& arms, SamplingOracle& oracle, const MilkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = arms.size();
  const std::size_t start = oracle.samples_used();
  PairSet ps(n);
  std::vector<int> status(n, kActive);
  std::size_t classified = 0;
  Rng design_rng(seed, Stream::kDesign);
  RunResult out;
  out.algorithm = "milk";
  out.stop_reason = StopReason::AllClassified;

  auto promote_finished = [&](RoundHistory* h) {
    for (std::size_t i = 0; i < n; ++i) {
      if (status[i] == kActive && ps.first_count(i) == 0) {
        status[i] = kGood;
        ++classified;
        if (h) h->to_good.push_back(i);
      }
    }
  };
  promote_finished(nullptr);

  std::vector<std::pair<std::size_t, std::size_t>> last_pairs;
  std::vector<double> last_w;
  out.snapshots.push_back(milk_snapshot(status, ps, last_pairs, last_w, 0, 0));
  const int cap = tolerance_round_cap(cfg.beta_tilde);

  for (int t = 1; classified < n; ++t) {
    if (t > cap) {
      out.stop_reason = StopReason::ToleranceRoundCap;
      break;
    }
    if (t > cfg.max_rounds) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
    const auto pairs = ps.pairs();
    DesignProblem p{arms, y_eps(pairs, cfg.epsilon), design_gamma(cfg, t), {}, {}};
    const FWResult fw = frank_wolfe_design(p, cfg.fw);
    const RoundBudget rb = round_budget(cfg, t, fw.value, n, pairs.size());

    RoundHistory h;
    h.t = t;
    h.delta_t = rb.delta_t;
    h.gamma = p.gamma;
    h.lambda.assign(fw.lambda.weights.data(), fw.lambda.weights.data() + n);
    h.g_value = fw.value;
    h.q_t = rb.q_t;
    h.n_t = rb.n_t;
    h.active_pairs = pairs;

    EstimateTable est;
    try {
      const InverseForm inv(arms, fw.lambda, p.gamma, cfg.fw.route);
      est = rips(inv, p.targets, fw.lambda,
                 RipsParams{rb.n_t, rb.delta_t, cfg.B * cfg.B + cfg.sigma * cfg.sigma}, oracle, design_rng);
    } catch (const BudgetExhausted&) {
      out.stop_reason = StopReason::BudgetExhausted;
      h.samples_after = oracle.samples_used() - start;
      out.rounds.push_back(std::move(h));
      break;
    }
    h.estimates = est.W;

    const double margin = 2.0 * std::pow(2.0, -t);
    std::vector<char> bad(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> cleared;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double w = est.W[k];
      if (w < -margin) {
        bad[pairs[k].first] = 1;
      } else if (w > margin) {
        cleared.push_back(pairs[k]);
      }
    }
    for (const auto& [i, j] : cleared) ps.remove(i, j);
    for (std::size_t i = 0; i < n; ++i) {
      if (!bad[i]) continue;
      ps.remove_arm(i);
      if (status[i] == kActive) {
        status[i] = kBad;
        ++classified;
        h.to_bad.push_back(i);
      }
    }
    promote_finished(&h);

    last_pairs = pairs;
    last_w = est.W;
    h.samples_after = oracle.samples_used() - start;
    out.rounds.push_back(std::move(h));
    out.snapshots.push_back(milk_snapshot(status, ps, last_pairs, last_w, oracle.samples_used() - start, t));
  }
  out.total_samples = oracle.samples_used() - start;
  if (out.snapshots.back().samples != out.total_samples) {
    out.snapshots.push_back(milk_snapshot(status, ps, last_pairs, last_w, out.total_samples,
                                          static_cast<int>(out.rounds.size())));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] == kGood) out.G_hat.push_back(i);
    if (status[i] == kBad) out.B_hat.push_back(i);
    if (status[i] == kActive) out.active.push_back(i);
    if (status[i] != kBad) out.R_hat.push_back(i);
  }
  return out;
}

}  // namespace lset
