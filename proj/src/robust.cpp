#include "lset/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lset/errors.hpp"

namespace lset {

double catoni_log_term(double delta_prime) {
  if (!(delta_prime > 0.0 && delta_prime < 1.0)) throw InvalidInput("delta' must lie in (0, 1)");
  return std::log(2.0 / delta_prime);
}

std::size_t catoni_min_samples(double delta_prime) {
  return static_cast<std::size_t>(std::floor(2.0 * catoni_log_term(delta_prime))) + 1;
}

namespace {

inline double psi(double x) {
  const double ax = std::abs(x);
  const double v = std::log1p(ax + 0.5 * x * x);
  return x < 0.0 ? -v : v;
}

inline double psi_prime(double x) {
  const double ax = std::abs(x);
  return (1.0 + ax) / (1.0 + ax + 0.5 * x * x);
}

}  // namespace

double catoni_mean(std::span<const double> samples, const RobustMeanParams& params) {
  const double log_term = catoni_log_term(params.delta_prime);
  const double n = static_cast<double>(samples.size());
  if (!(n > 2.0 * log_term)) {
    throw InsufficientSamples("Catoni needs n > 2 ln(2/delta') = " + std::to_string(2.0 * log_term) +
                              ", got n = " + std::to_string(samples.size()));
  }
  if (!(params.variance_bound > 0.0)) throw InvalidInput("Catoni variance bound must be positive");

  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double zmin = *mn_it;
  const double zmax = *mx_it;
  if (zmin == zmax) return zmin;

  const double a = std::sqrt(2.0 * log_term /
                             (n * params.variance_bound * (1.0 + 2.0 * log_term / (n - 2.0 * log_term))));

  // Safeguarded Newton on the decreasing function S(mu) = sum psi(a (z - mu)).
  double lo = zmin - 1.0;
  double hi = zmax + 1.0;
  double mu = std::clamp(std::accumulate(samples.begin(), samples.end(), 0.0) / n, zmin, zmax);
  for (int iter = 0; iter < 300; ++iter) {
    double s = 0.0;
    double ds = 0.0;
    for (double z : samples) {
      const double x = a * (z - mu);
      s += psi(x);
      ds += psi_prime(x);
    }
    if (s == 0.0) break;
    if (s > 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    double next = mu + s / (a * ds);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double tol = 1e-10 * std::max(1.0, std::abs(next));
    const bool done = std::abs(next - mu) < tol || hi - lo < tol;
    mu = next;
    if (done) break;
  }
  return std::clamp(mu, zmin, zmax);
}

EstimateTable rips(const InverseForm& inv, std::span<const FeatureCombo> targets,
                   const Design& lambda, const RipsParams& params, SamplingOracle& oracle,
                   Rng& design_rng) {
  const std::size_t n_arms = inv.arms().size();
  lambda.validate(n_arms);
  if (targets.empty()) throw InvalidInput("rips needs at least one target");
  if (!(params.delta > 0.0 && params.delta < 1.0)) throw InvalidInput("rips delta must lie in (0, 1)");
  if (!(params.second_moment >= 0.0)) throw InvalidInput("rips second moment must be >= 0");
  for (const auto& v : targets) v.validate(n_arms);
  const double n_targets = static_cast<double>(targets.size());
  if (static_cast<double>(params.tau) < 2.0 * std::log(n_targets / params.delta)) {
    throw InsufficientSamples("rips needs tau >= 2 ln(|V|/delta); got tau = " + std::to_string(params.tau));
  }
  const double delta_prime = params.delta / n_targets;

  std::vector<double> cdf(n_arms);
  std::partial_sum(lambda.weights.data(), lambda.weights.data() + n_arms, cdf.begin());
  std::vector<std::uint32_t> drawn(params.tau);
  std::vector<double> y(params.tau);
  for (std::size_t j = 0; j < params.tau; ++j) {
    drawn[j] = static_cast<std::uint32_t>(design_rng.categorical(cdf));
    y[j] = oracle.observe(drawn[j]);
  }

  EstimateTable out;
  out.lambda = lambda;
  out.tau = params.tau;
  out.W.resize(targets.size());
  out.norm2.resize(targets.size());
  std::vector<double> z(params.tau);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Eigen::VectorXd r = inv.response(targets[t]);
    double norm2 = 0.0;
    for (const auto& term : targets[t].terms()) norm2 += term.coef * r(static_cast<Eigen::Index>(term.arm));
    norm2 = std::max(norm2, 0.0);
    out.norm2[t] = norm2;
    for (std::size_t j = 0; j < params.tau; ++j) z[j] = r(drawn[j]) * y[j];
    const double vb = params.second_moment * norm2;
    out.W[t] = vb > 0.0 ? catoni_mean(z, {delta_prime, vb}) : 0.0;
  }
  return out;
}

EstimateTable rips(const ArmSet& arms, std::span<const FeatureCombo> targets, const Design& lambda,
                   double gamma, const RipsParams& params, SamplingOracle& oracle, Rng& design_rng) {
  const InverseForm inv(arms, lambda, gamma);
  return rips(inv, targets, lambda, params, oracle, design_rng);
}

}  // namespace lset
