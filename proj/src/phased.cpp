#include "lset/phased.hpp"

#include <cmath>
#include <limits>

#include "lset/errors.hpp"
#include "lset/robust.hpp"

namespace lset {

void PhasedConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (!(gamma >= 0.0)) throw InvalidInput("gamma must be >= 0");
  if (gamma_decay && !(gamma > 0.0)) throw InvalidInput("gamma decay needs a positive base gamma");
  if (!(beta_tilde >= 0.0)) throw InvalidInput("beta_tilde must be >= 0");
  if (!(B > 0.0)) throw InvalidInput("B must be positive");
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be >= 0");
  if (max_rounds < 1) throw InvalidInput("max_rounds must be >= 1");
  fw.validate();
}

int tolerance_round_cap(double beta_tilde) {
  if (beta_tilde == 0.0) return std::numeric_limits<int>::max();
  return static_cast<int>(std::ceil(std::log2(4.0 / beta_tilde)));
}

double design_gamma(const PhasedConfig& cfg, int design_index) {
  if (!cfg.gamma_decay) return cfg.gamma;
  return cfg.gamma / (10.0 * design_index);
}

RoundBudget round_budget(const PhasedConfig& cfg, int t, double g_value, std::size_t n_arms,
                         std::size_t n_targets) {
  if (!std::isfinite(g_value) || g_value < 0.0) {
    throw NumericalError("design objective is not a finite nonnegative number");
  }
  const double td = static_cast<double>(t);
  const double n = static_cast<double>(n_arms);
  RoundBudget rb;
  rb.delta_t = cfg.delta / (2.0 * td * td);
  rb.q_t = 16.0 * std::pow(4.0, td) * g_value * (cfg.B * cfg.B + cfg.sigma * cfg.sigma) *
           std::log(2.0 * td * td * n * n / cfg.delta);
  const double floor_samples = 2.0 * std::log(n / cfg.delta);
  const double want = std::ceil(std::max(rb.q_t, floor_samples));
  if (!(want < 1e15)) throw NumericalError("round sample count overflows");
  rb.n_t = static_cast<std::size_t>(std::max(want, 1.0));
  const std::size_t catoni_floor = catoni_min_samples(rb.delta_t / static_cast<double>(n_targets));
  if (rb.n_t < catoni_floor) rb.n_t = catoni_floor;
  return rb;
}

}  // namespace lset
