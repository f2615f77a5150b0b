#include "lset/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lset/errors.hpp"

namespace lset {

GpPosterior::GpPosterior(const ArmSet& arms, double noise_var, int refresh_every)
    : arms_(arms),
      noise_var_(noise_var),
      refresh_every_(refresh_every),
      mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arms.size()))),
      cov_(arms.gram()),
      counts_(arms.size(), 0),
      sums_(arms.size(), 0.0) {
  if (!(noise_var >= 0.0)) throw InvalidInput("GP noise variance must be >= 0");
  if (refresh_every < 1) throw InvalidInput("GP refresh interval must be >= 1");
}

double GpPosterior::variance(std::size_t i) const {
  return std::max(cov_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), 0.0);
}

double GpPosterior::stddev(std::size_t i) const { return std::sqrt(variance(i)); }

void GpPosterior::observe(std::size_t arm, double y) {
  if (arm >= arms_.size()) throw InvalidInput("GP observe: arm index out of range");
  ++counts_[arm];
  sums_[arm] += y;
  ++n_obs_;
  if (++since_refresh_ >= refresh_every_) {
    refresh();
    return;
  }
  const auto x = static_cast<Eigen::Index>(arm);
  const double d = cov_(x, x) + noise_var_;
  if (!(d > 0.0)) return;
  const Eigen::VectorXd k = cov_.col(x);
  mean_ += k * ((y - mean_(x)) / d);
  cov_.noalias() -= (k / d) * k.transpose();
}

void GpPosterior::refresh() {
  since_refresh_ = 0;
  std::vector<Eigen::Index> s;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] > 0) s.push_back(static_cast<Eigen::Index>(i));
  }
  const Eigen::MatrixXd& k = arms_.gram();
  const auto n = k.rows();
  const auto m = static_cast<Eigen::Index>(s.size());
  if (m == 0) {
    mean_.setZero();
    cov_ = k;
    return;
  }
  Eigen::MatrixXd kss(m, m);
  Eigen::MatrixXd kns(n, m);
  Eigen::VectorXd ybar(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto i = static_cast<std::size_t>(s[a]);
    for (Eigen::Index b = 0; b < m; ++b) kss(a, b) = k(s[a], s[b]);
    kss(a, a) += noise_var_ / static_cast<double>(counts_[i]);
    kns.col(a) = k.col(s[a]);
    ybar(a) = sums_[i] / static_cast<double>(counts_[i]);
  }
  const auto llt = cholesky_with_jitter(kss);
  mean_ = kns * llt.solve(ybar);
  const Eigen::MatrixXd half = llt.matrixL().solve(kns.transpose());
  cov_ = k;
  cov_.noalias() -= half.transpose() * half;
}

Eigen::VectorXd GpPosterior::lookahead_variance(std::size_t arm) const {
  const auto x = static_cast<Eigen::Index>(arm);
  Eigen::VectorXd v = cov_.diagonal();
  const double d = cov_(x, x) + noise_var_;
  if (d > 0.0) v.array() -= cov_.col(x).array().square() / d;
  return v;
}

void gp_posterior_dense(const ArmSet& arms, const std::vector<std::size_t>& obs_arms,
                        const std::vector<double>& y, double noise_var, Eigen::VectorXd& mean,
                        Eigen::VectorXd& var) {
  if (obs_arms.size() != y.size()) throw InvalidInput("observation arms and values differ in length");
  const Eigen::MatrixXd& k = arms.gram();
  const auto n = k.rows();
  const auto t = static_cast<Eigen::Index>(obs_arms.size());
  if (t == 0) {
    mean = Eigen::VectorXd::Zero(n);
    var = k.diagonal();
    return;
  }
  Eigen::MatrixXd kt(t, t);
  Eigen::MatrixXd kx(n, t);
  Eigen::VectorXd yt(t);
  for (Eigen::Index a = 0; a < t; ++a) {
    for (Eigen::Index b = 0; b < t; ++b) {
      kt(a, b) = k(static_cast<Eigen::Index>(obs_arms[a]), static_cast<Eigen::Index>(obs_arms[b]));
    }
    kt(a, a) += noise_var;
    kx.col(a) = k.col(static_cast<Eigen::Index>(obs_arms[a]));
    yt(a) = y[a];
  }
  const auto llt = cholesky_with_jitter(kt);
  mean = kx * llt.solve(yt);
  const Eigen::MatrixXd half = llt.matrixL().solve(kx.transpose());
  var = k.diagonal() - half.colwise().squaredNorm().transpose();
}

std::string policy_name(Policy p) {
  switch (p) {
    case Policy::Straddle: return "straddle";
    case Policy::Lse: return "lse";
    case Policy::LseImp: return "lse_imp";
    case Policy::TruVar: return "truvar";
  }
  return "unknown";
}

Policy parse_policy(const std::string& s) {
  for (auto p : {Policy::Straddle, Policy::Lse, Policy::LseImp, Policy::TruVar}) {
    if (policy_name(p) == s) return p;
  }
  throw InvalidInput("unknown baseline policy '" + s + "'");
}

void BaselineConfig::validate() const {
  objective.validate();
  if ((policy == Policy::LseImp) != (objective.kind == LevelObjective::Kind::Implicit)) {
    throw InvalidInput("lse_imp needs an implicit objective; the other policies need an explicit alpha");
  }
  if (!(beta_sqrt > 0.0)) throw InvalidInput("beta_sqrt must be positive");
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (!(B > 0.0)) throw InvalidInput("B must be positive");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) throw InvalidInput("checkpoints must be sorted");
}

BaselineState BaselineState::initial(std::size_t n) {
  BaselineState s;
  s.label.assign(n, Label::Unclassified);
  s.c_lo = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), -std::numeric_limits<double>::infinity());
  s.c_hi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
  return s;
}

std::size_t BaselineState::n_unclassified() const {
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), Label::Unclassified));
}

double interval_scale(const BaselineConfig& cfg, std::size_t samples, std::size_t n_arms) {
  if (cfg.policy == Policy::Straddle) return 1.96;
  if (!cfg.frequentist) return cfg.beta_sqrt;
  const double t = static_cast<double>(std::max<std::size_t>(samples, 1));
  const double n = static_cast<double>(n_arms);
  return std::sqrt((cfg.B * cfg.B + cfg.sigma * cfg.sigma) * std::log(2.0 * t * t * n * n / cfg.delta));
}

std::size_t acquire_next(const BaselineState& state, const GpPosterior& gp, const BaselineConfig& cfg) {
  const std::size_t n = state.label.size();
  std::vector<std::size_t> u;
  for (std::size_t i = 0; i < n; ++i) {
    if (state.label[i] == Label::Unclassified) u.push_back(i);
  }
  if (u.empty()) throw InvalidInput("acquire_next: no unclassified arms left");
  const double w = interval_scale(cfg, state.t, n);
  const double alpha = cfg.objective.alpha;
  std::size_t best = u.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t x : u) {
    const auto xi = static_cast<Eigen::Index>(x);
    double score = 0.0;
    switch (cfg.policy) {
      case Policy::Straddle:
      case Policy::Lse: {
        const double mu = gp.mean()(xi);
        const double s = gp.stddev(x);
        double hi = mu + w * s;
        double lo = mu - w * s;
        if (cfg.policy == Policy::Lse) {
          hi = std::min(hi, state.c_hi(xi));
          lo = std::max(lo, state.c_lo(xi));
        }
        score = std::min(hi - alpha, alpha - lo);
        break;
      }
      case Policy::LseImp:
        score = state.c_hi(xi) - state.c_lo(xi);
        break;
      case Policy::TruVar: {
        const double d = gp.cov()(xi, xi) + gp.noise_var();
        if (d > 0.0) {
          for (std::size_t v : u) {
            const double c = gp.cov()(static_cast<Eigen::Index>(v), xi);
            score += c * c / d;
          }
        }
        break;
      }
    }
    if (score > best_score) {
      best_score = score;
      best = x;
    }
  }
  return best;
}

void classify_step(BaselineState& state, const GpPosterior& gp, const BaselineConfig& cfg) {
  const std::size_t n = state.label.size();
  const double w = interval_scale(cfg, state.t, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = static_cast<Eigen::Index>(i);
    const double s = gp.stddev(i);
    const double lo = std::max(state.c_lo(xi), gp.mean()(xi) - w * s);
    const double hi = std::min(state.c_hi(xi), gp.mean()(xi) + w * s);
    if (lo <= hi) {
      state.c_lo(xi) = lo;
      state.c_hi(xi) = hi;
    }
  }
  if (cfg.policy != Policy::LseImp) {
    for (std::size_t i = 0; i < n; ++i) {
      if (state.label[i] != Label::Unclassified) continue;
      const auto xi = static_cast<Eigen::Index>(i);
      if (state.c_lo(xi) > cfg.objective.alpha) {
        state.label[i] = Label::High;
      } else if (state.c_hi(xi) < cfg.objective.alpha) {
        state.label[i] = Label::Low;
      }
    }
    return;
  }
  state.f_opt = -std::numeric_limits<double>::infinity();
  state.f_pes = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (state.label[i] == Label::Low) continue;
    state.f_opt = std::max(state.f_opt, state.c_hi(static_cast<Eigen::Index>(i)));
    state.f_pes = std::max(state.f_pes, state.c_lo(static_cast<Eigen::Index>(i)));
  }
  const double scale = 1.0 - cfg.objective.epsilon;
  for (std::size_t i = 0; i < n; ++i) {
    if (state.label[i] != Label::Unclassified) continue;
    const auto xi = static_cast<Eigen::Index>(i);
    if (state.c_lo(xi) >= scale * state.f_opt) {
      state.label[i] = Label::High;
    } else if (state.c_hi(xi) <= scale * state.f_pes) {
      state.label[i] = Label::Low;
    }
  }
}

std::vector<std::size_t> declared_set(const BaselineState& state, const GpPosterior& gp, const BaselineConfig& cfg) {
  double level = cfg.objective.alpha;
  if (cfg.objective.kind == LevelObjective::Kind::Implicit) {
    level = (1.0 - cfg.objective.epsilon) * gp.mean().maxCoeff();
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < state.label.size(); ++i) {
    if (state.label[i] == Label::High ||
        (state.label[i] == Label::Unclassified && gp.mean()(static_cast<Eigen::Index>(i)) >= level)) {
      out.push_back(i);
    }
  }
  return out;
}

namespace {

Snapshot take_snapshot(const BaselineState& state, const GpPosterior& gp, const BaselineConfig& cfg,
                       std::size_t samples) {
  Snapshot s;
  s.samples = samples;
  s.round = static_cast<int>(samples);
  s.declared = declared_set(state, gp, cfg);
  for (std::size_t i = 0; i < state.label.size(); ++i) {
    if (state.label[i] == Label::High) {
      s.certified.push_back(i);
      ++s.n_good;
    } else if (state.label[i] == Label::Low) {
      ++s.n_bad;
    } else {
      ++s.n_active;
    }
  }
  return s;
}

}  // namespace

RunResult run_baseline(const ArmSet& arms, SamplingOracle& oracle, const BaselineConfig& cfg) {
  cfg.validate();
  const std::size_t n = arms.size();
  const double noise_var = cfg.frequentist ? 1.0 : cfg.sigma * cfg.sigma;
  GpPosterior gp(arms, noise_var, cfg.refresh_every);
  BaselineState state = BaselineState::initial(n);
  classify_step(state, gp, cfg);

  RunResult out;
  out.algorithm = policy_name(cfg.policy);
  out.stop_reason = StopReason::AllClassified;
  out.snapshots.push_back(take_snapshot(state, gp, cfg, 0));
  std::size_t next_cp = 0;
  while (next_cp < cfg.checkpoints.size() && cfg.checkpoints[next_cp] == 0) ++next_cp;

  std::size_t samples = 0;
  while (state.n_unclassified() > 0) {
    if (samples >= cfg.budget) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
    const std::size_t x = acquire_next(state, gp, cfg);
    double y = 0.0;
    try {
      y = oracle.observe(x);
    } catch (const BudgetExhausted&) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
    ++samples;
    gp.observe(x, y);
    state.t = samples;
    const auto before = state.label;
    classify_step(state, gp, cfg);
    bool at_checkpoint = false;
    while (next_cp < cfg.checkpoints.size() && cfg.checkpoints[next_cp] <= samples) {
      at_checkpoint = true;
      ++next_cp;
    }
    if (at_checkpoint || before != state.label) out.snapshots.push_back(take_snapshot(state, gp, cfg, samples));
  }
  if (out.snapshots.back().samples != samples) out.snapshots.push_back(take_snapshot(state, gp, cfg, samples));

  for (std::size_t i = 0; i < n; ++i) {
    if (state.label[i] == Label::High) out.G_hat.push_back(i);
    if (state.label[i] == Label::Low) out.B_hat.push_back(i);
    if (state.label[i] == Label::Unclassified) out.active.push_back(i);
  }
  out.R_hat = declared_set(state, gp, cfg);
  out.total_samples = samples;
  return out;
}

}  // namespace lset
