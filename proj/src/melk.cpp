#include "lset/melk.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "lset/design.hpp"
#include "lset/errors.hpp"
#include "lset/gp.hpp"
#include "lset/robust.hpp"
#include "lset/rng.hpp"

namespace lset {

void MelkConfig::validate() const {
  PhasedConfig::validate();
  if (!std::isfinite(alpha)) throw InvalidInput("alpha must be finite");
  if (batch_size && *batch_size < 1) throw InvalidInput("batch size must be >= 1");
  if (!(batch_beta_sqrt > 0.0)) throw InvalidInput("batch_beta_sqrt must be positive");
}

namespace {

enum : int { kActive = 0, kGood = 1, kBad = -1 };

struct ArmTracker {
  std::vector<int> status;
  std::vector<double> estimate;
  std::size_t classified = 0;

  explicit ArmTracker(std::size_t n)
      : status(n, kActive), estimate(n, std::numeric_limits<double>::quiet_NaN()) {}

  std::vector<std::size_t> active() const {
    std::vector<std::size_t> a;
    for (std::size_t i = 0; i < status.size(); ++i) {
      if (status[i] == kActive) a.push_back(i);
    }
    return a;
  }

  Snapshot snapshot(std::size_t samples, int round, double alpha) const {
    Snapshot s;
    s.samples = samples;
    s.round = round;
    for (std::size_t i = 0; i < status.size(); ++i) {
      if (status[i] == kGood) {
        s.declared.push_back(i);
        s.certified.push_back(i);
        ++s.n_good;
      } else if (status[i] == kBad) {
        ++s.n_bad;
      } else {
        ++s.n_active;
        if (estimate[i] >= alpha) s.declared.push_back(i);
      }
    }
    return s;
  }

  void finish(RunResult& out) const {
    for (std::size_t i = 0; i < status.size(); ++i) {
      if (status[i] == kGood) out.G_hat.push_back(i);
      if (status[i] == kBad) out.B_hat.push_back(i);
      if (status[i] == kActive) out.active.push_back(i);
      if (status[i] != kBad) out.R_hat.push_back(i);
    }
  }
};

RunResult run_melk_batched(const ArmSet& arms, SamplingOracle& oracle, const MelkConfig& cfg,
                           std::uint64_t seed) {
  const std::size_t n = arms.size();
  const std::size_t start = oracle.samples_used();
  ArmTracker tr(n);
  Rng design_rng(seed, Stream::kDesign);
  GpPosterior gp(arms, cfg.sigma * cfg.sigma);
  RunResult out;
  out.algorithm = "melk";
  out.snapshots.push_back(tr.snapshot(0, 0, cfg.alpha));
  out.stop_reason = StopReason::AllClassified;
  std::vector<double> cdf(n);

  for (std::size_t b = 1; tr.classified < n; ++b) {
    if (b > cfg.max_batches) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
    const auto active = tr.active();
    DesignProblem p{arms, {}, design_gamma(cfg, static_cast<int>(b)), {}, {}};
    for (std::size_t i : active) p.targets.push_back(FeatureCombo::arm(i));
    const FWResult fw = frank_wolfe_design(p, cfg.fw);

    RoundHistory h;
    h.t = static_cast<int>(b);
    h.gamma = p.gamma;
    h.lambda.assign(fw.lambda.weights.data(), fw.lambda.weights.data() + n);
    h.g_value = fw.value;
    h.n_t = *cfg.batch_size;
    h.active_arms = active;

    std::partial_sum(fw.lambda.weights.data(), fw.lambda.weights.data() + n, cdf.begin());
    bool exhausted = false;
    for (std::size_t j = 0; j < *cfg.batch_size; ++j) {
      const std::size_t x = design_rng.categorical(cdf);
      try {
        gp.observe(x, oracle.observe(x));
      } catch (const BudgetExhausted&) {
        exhausted = true;
        break;
      }
    }
    const double w = cfg.batch_beta_sqrt;
    for (std::size_t i : active) {
      const double mu = gp.mean()(static_cast<Eigen::Index>(i));
      const double s = gp.stddev(i);
      tr.estimate[i] = mu;
      h.estimates.push_back(mu);
      if (mu - w * s > cfg.alpha) {
        tr.status[i] = kGood;
        h.to_good.push_back(i);
        ++tr.classified;
      } else if (mu + w * s < cfg.alpha) {
        tr.status[i] = kBad;
        h.to_bad.push_back(i);
        ++tr.classified;
      }
    }
    h.samples_after = oracle.samples_used() - start;
    out.rounds.push_back(std::move(h));
    out.snapshots.push_back(tr.snapshot(oracle.samples_used() - start, static_cast<int>(b), cfg.alpha));
    if (exhausted) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
  }
  out.total_samples = oracle.samples_used() - start;
  tr.finish(out);
  return out;
}

}  // namespace

RunResult run_melk(const ArmSet& arms, SamplingOracle& oracle, const MelkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.batch_size) return run_melk_batched(arms, oracle, cfg, seed);

  const std::size_t n = arms.size();
  const std::size_t start = oracle.samples_used();
  ArmTracker tr(n);
  Rng design_rng(seed, Stream::kDesign);
  RunResult out;
  out.algorithm = "melk";
  out.snapshots.push_back(tr.snapshot(0, 0, cfg.alpha));
  out.stop_reason = StopReason::AllClassified;
  const int cap = tolerance_round_cap(cfg.beta_tilde);

  for (int t = 1; tr.classified < n; ++t) {
    if (t > cap) {
      out.stop_reason = StopReason::ToleranceRoundCap;
      break;
    }
    if (t > cfg.max_rounds) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
    const auto active = tr.active();
    DesignProblem p{arms, {}, design_gamma(cfg, t), {}, {}};
    for (std::size_t i : active) p.targets.push_back(FeatureCombo::arm(i));
    const FWResult fw = frank_wolfe_design(p, cfg.fw);
    const RoundBudget rb = round_budget(cfg, t, fw.value, n, active.size());

    RoundHistory h;
    h.t = t;
    h.delta_t = rb.delta_t;
    h.gamma = p.gamma;
    h.lambda.assign(fw.lambda.weights.data(), fw.lambda.weights.data() + n);
    h.g_value = fw.value;
    h.q_t = rb.q_t;
    h.n_t = rb.n_t;
    h.active_arms = active;

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
    const double margin = 2.0 * std::pow(2.0, -t);
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      const double w = est.W[k];
      tr.estimate[i] = w;
      h.estimates.push_back(w);
      if (w < cfg.alpha - margin) {
        tr.status[i] = kBad;
        h.to_bad.push_back(i);
        ++tr.classified;
      } else if (w > cfg.alpha + margin) {
        tr.status[i] = kGood;
        h.to_good.push_back(i);
        ++tr.classified;
      }
    }
    h.samples_after = oracle.samples_used() - start;
    out.rounds.push_back(std::move(h));
    out.snapshots.push_back(tr.snapshot(oracle.samples_used() - start, t, cfg.alpha));
  }
  out.total_samples = oracle.samples_used() - start;
  if (out.snapshots.back().samples != out.total_samples) {
    out.snapshots.push_back(tr.snapshot(out.total_samples, static_cast<int>(out.rounds.size()), cfg.alpha));
  }
  tr.finish(out);
  return out;
}

GuaranteeReport melk_classification_guarantee_check(const RunResult& result, const ArmSet& arms,
                                                    std::span<const double> true_f, const MelkConfig& cfg,
                                                    double theta_norm, double h) {
  GuaranteeReport rep;
  rep.beta_bar = beta_bar(arms, true_f, theta_norm, h, cfg.gamma, LevelObjective::explicit_threshold(cfg.alpha),
                          cfg.fw);
  std::vector<char> in_r(true_f.size(), 0);
  std::vector<char> in_g(true_f.size(), 0);
  for (std::size_t i : result.R_hat) in_r[i] = 1;
  for (std::size_t i : result.G_hat) in_g[i] = 1;
  for (std::size_t i = 0; i < true_f.size(); ++i) {
    if (true_f[i] >= cfg.alpha + rep.beta_bar && !in_r[i]) rep.missed_high.push_back(i);
    if (in_r[i] && true_f[i] < cfg.alpha - cfg.beta_tilde - rep.beta_bar) rep.spurious_low.push_back(i);
    if (true_f[i] >= cfg.alpha + cfg.beta_tilde + rep.beta_bar && !in_g[i]) rep.good_missed_high.push_back(i);
    if (in_g[i] && true_f[i] < cfg.alpha - rep.beta_bar) rep.good_spurious_low.push_back(i);
  }
  return rep;
}

}  // namespace lset
