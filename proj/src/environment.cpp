#include "lset/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lset/errors.hpp"

namespace lset {

namespace {

Eigen::MatrixXd grid_points(int m, int dim) {
  const int count = dim == 1 ? m : m * m;
  Eigen::MatrixXd pts(count, dim);
  int r = 0;
  for (int i = 1; i <= m; ++i) {
    if (dim == 1) {
      pts(r++, 0) = static_cast<double>(i) / m;
      continue;
    }
    for (int j = 1; j <= m; ++j) {
      pts(r, 0) = static_cast<double>(i) / m;
      pts(r, 1) = static_cast<double>(j) / m;
      ++r;
    }
  }
  return pts;
}

}  // namespace

void InstanceSpec::validate() const {
  switch (generator) {
    case GeneratorKind::GpDraw:
      if (grid < 1) throw InvalidInput("gp_draw grid must be >= 1");
      if (grid_dim != 1 && grid_dim != 2) throw InvalidInput("gp_draw grid_dim must be 1 or 2");
      if (!(lengthscale > 0.0)) throw InvalidInput("lengthscale must be positive");
      break;
    case GeneratorKind::Cosine1d:
      if (n_points < 2) throw InvalidInput("cosine_1d needs n_points >= 2");
      if (!(lengthscale > 0.0)) throw InvalidInput("lengthscale must be positive");
      break;
    case GeneratorKind::CosineSine2d:
      if (grid < 1) throw InvalidInput("cosine_sine_2d grid must be >= 1");
      if (!(lengthscale > 0.0)) throw InvalidInput("lengthscale must be positive");
      break;
    case GeneratorKind::Soare:
      if (n < 2 || d < 2) throw InvalidInput("soare needs n >= 2 and d >= 2");
      if (!(xi_range >= 0.0)) throw InvalidInput("soare xi_range must be >= 0");
      break;
    case GeneratorKind::ExplicitLinear:
      if (points.rows() < 1 || points.cols() < 1) throw InvalidInput("explicit_linear needs points");
      if (theta.size() != points.cols()) throw InvalidInput("explicit_linear theta dimension mismatch");
      break;
    case GeneratorKind::Bandit:
      if (means.empty()) throw InvalidInput("bandit needs at least one mean");
      break;
  }
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be >= 0");
  if (B && !(*B > 0.0)) throw InvalidInput("B must be positive");
  switch (threshold.kind) {
    case ThresholdSpec::Kind::Quantile:
      if (!(threshold.value > 0.0 && threshold.value < 1.0)) throw InvalidInput("quantile must lie in (0, 1)");
      break;
    case ThresholdSpec::Kind::Implicit:
      if (!(threshold.value > 0.0 && threshold.value < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
      break;
    case ThresholdSpec::Kind::Explicit:
      if (!std::isfinite(threshold.value)) throw InvalidInput("alpha must be finite");
      break;
  }
}

double quantile_threshold(std::span<const double> values, double q) {
  if (values.size() < 2) throw InvalidInput("quantile threshold needs at least two values");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const auto n = static_cast<long>(s.size());
  long k = std::lround(q * static_cast<double>(n));
  k = std::clamp(k, 1L, n - 1);
  return 0.5 * (s[static_cast<std::size_t>(k - 1)] + s[static_cast<std::size_t>(k)]);
}

std::shared_ptr<const Instance> generate_instance(const InstanceSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed, Stream::kInstance);
  Eigen::MatrixXd pts;
  KernelSpec kernel = KernelSpec::linear();
  std::vector<double> f;
  std::optional<double> theta_norm;

  switch (spec.generator) {
    case GeneratorKind::GpDraw: {
      pts = grid_points(spec.grid, spec.grid_dim);
      kernel = KernelSpec::squared_exponential(spec.lengthscale);
      const ArmSet tmp(pts, kernel);
      Eigen::MatrixXd k = tmp.gram();
      const Eigen::Index n = k.rows();
      k.diagonal().array() += 1e-8 * k.trace() / static_cast<double>(n);
      Eigen::LLT<Eigen::MatrixXd> llt;
      try {
        llt = cholesky_with_jitter(k);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string("gp_draw generation failed: ") + e.what());
      }
      Eigen::VectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
      const Eigen::VectorXd fv = llt.matrixL() * z;
      f.assign(fv.data(), fv.data() + n);
      theta_norm = z.norm();
      break;
    }
    case GeneratorKind::Cosine1d: {
      pts.resize(spec.n_points, 1);
      for (int i = 0; i < spec.n_points; ++i) pts(i, 0) = static_cast<double>(i) / (spec.n_points - 1);
      kernel = KernelSpec::squared_exponential(spec.lengthscale);
      for (int i = 0; i < spec.n_points; ++i) f.push_back(std::cos(spec.frequency * pts(i, 0)));
      break;
    }
    case GeneratorKind::CosineSine2d: {
      pts = grid_points(spec.grid, 2);
      kernel = KernelSpec::squared_exponential(spec.lengthscale);
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        f.push_back(std::cos(2.0 * std::numbers::pi * pts(i, 0)) * std::sin(2.0 * std::numbers::pi * pts(i, 1)));
      }
      break;
    }
    case GeneratorKind::Soare: {
      pts = Eigen::MatrixXd::Zero(spec.n, spec.d);
      pts(0, 0) = 1.0;
      pts(1, 1) = 1.0;
      for (int i = 2; i < spec.n; ++i) {
        const double xi = rng.uniform(-spec.xi_range, spec.xi_range);
        const double angle = std::numbers::pi / 4.0 * (1.0 + xi);
        pts(i, 0) = std::cos(angle);
        pts(i, 1) = std::sin(angle);
      }
      for (int i = 0; i < spec.n; ++i) f.push_back(pts(i, 0));
      theta_norm = 1.0;
      break;
    }
    case GeneratorKind::ExplicitLinear: {
      pts = spec.points;
      const Eigen::VectorXd fv = pts * spec.theta;
      f.assign(fv.data(), fv.data() + fv.size());
      theta_norm = spec.theta.norm();
      break;
    }
    case GeneratorKind::Bandit: {
      const auto k = static_cast<Eigen::Index>(spec.means.size());
      pts = Eigen::MatrixXd::Identity(k, k);
      f = spec.means;
      theta_norm = Eigen::Map<const Eigen::VectorXd>(spec.means.data(), k).norm();
      break;
    }
  }

  auto inst = std::make_shared<Instance>(Instance{spec, seed, ArmSet(std::move(pts), kernel), std::move(f),
                                                  spec.sigma, 1.0, theta_norm, {}});
  double fmax_abs = 0.0;
  for (double v : inst->true_f) fmax_abs = std::max(fmax_abs, std::abs(v));
  inst->B = spec.B ? *spec.B : std::max(1.0, std::ceil(fmax_abs));
  switch (spec.threshold.kind) {
    case ThresholdSpec::Kind::Explicit:
      inst->objective = LevelObjective::explicit_threshold(spec.threshold.value);
      break;
    case ThresholdSpec::Kind::Quantile:
      inst->objective = LevelObjective::explicit_threshold(quantile_threshold(inst->true_f, spec.threshold.value));
      break;
    case ThresholdSpec::Kind::Implicit:
      inst->objective = LevelObjective::implicit_fraction(spec.threshold.value);
      break;
  }
  return inst;
}

Environment::Environment(std::shared_ptr<const Instance> instance, std::uint64_t noise_seed,
                         std::optional<std::size_t> budget)
    : instance_(std::move(instance)), noise_(noise_seed, Stream::kNoise), budget_(budget) {}

std::optional<std::size_t> Environment::remaining() const {
  if (!budget_) return std::nullopt;
  return *budget_ - used_;
}

double Environment::observe(std::size_t arm) {
  if (arm >= instance_->true_f.size()) throw InvalidInput("observe: arm index out of range");
  if (budget_ && used_ >= *budget_) throw BudgetExhausted("sampling budget of " + std::to_string(*budget_) + " exhausted");
  ++used_;
  const double noise = instance_->sigma > 0.0 ? instance_->sigma * noise_.normal() : 0.0;
  return instance_->true_f[arm] + noise;
}

Environment generate(const InstanceSpec& spec, std::uint64_t seed) {
  return Environment(generate_instance(spec, seed), seed, spec.budget);
}

TrueSets true_sets_and_gaps(std::span<const double> true_f, const LevelObjective& objective) {
  objective.validate();
  TrueSets out;
  if (true_f.empty()) return out;
  if (objective.kind == LevelObjective::Kind::Explicit) {
    out.level = objective.alpha;
  } else {
    out.level = (1.0 - objective.epsilon) * *std::max_element(true_f.begin(), true_f.end());
  }
  out.delta_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < true_f.size(); ++i) {
    const double gap = std::abs(true_f[i] - out.level);
    out.gaps.push_back(gap);
    out.delta_min = std::min(out.delta_min, gap);
    const bool good = objective.kind == LevelObjective::Kind::Explicit ? true_f[i] > out.level
                                                                        : true_f[i] >= out.level;
    if (good) out.good.push_back(i);
  }
  out.degenerate = out.delta_min == 0.0;
  return out;
}

bool membership_check(std::span<const double> true_f, double epsilon, std::size_t arm) {
  if (arm >= true_f.size()) throw InvalidInput("membership_check: arm index out of range");
  const double fmax = *std::max_element(true_f.begin(), true_f.end());
  return true_f[arm] >= (1.0 - epsilon) * fmax;
}

bool pairwise_membership(std::span<const double> true_f, double epsilon, std::size_t arm) {
  if (arm >= true_f.size()) throw InvalidInput("pairwise_membership: arm index out of range");
  for (double other : true_f) {
    if (true_f[arm] - (1.0 - epsilon) * other < 0.0) return false;
  }
  return true;
}

std::string generator_name(GeneratorKind g) {
  switch (g) {
    case GeneratorKind::GpDraw: return "gp_draw";
    case GeneratorKind::Cosine1d: return "cosine_1d";
    case GeneratorKind::CosineSine2d: return "cosine_sine_2d";
    case GeneratorKind::Soare: return "soare";
    case GeneratorKind::ExplicitLinear: return "explicit_linear";
    case GeneratorKind::Bandit: return "bandit";
  }
  return "unknown";
}

GeneratorKind parse_generator(const std::string& s) {
  for (auto g : {GeneratorKind::GpDraw, GeneratorKind::Cosine1d, GeneratorKind::CosineSine2d, GeneratorKind::Soare,
                 GeneratorKind::ExplicitLinear, GeneratorKind::Bandit}) {
    if (generator_name(g) == s) return g;
  }
  throw InvalidInput("unknown generator '" + s + "'");
}

}  // namespace lset
