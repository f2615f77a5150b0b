#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lset/environment.hpp"
#include "lset/errors.hpp"
#include "lset/oracle.hpp"

namespace fixture {

/// Table-driven oracle with Gaussian noise from the standard library generator.
class TableOracle : public lset::SamplingOracle {
 public:
  TableOracle(std::vector<double> f, double sigma, std::uint64_t seed, std::size_t budget = SIZE_MAX)
      : f_(std::move(f)), sigma_(sigma), g_(seed), budget_(budget) {}

  double observe(std::size_t arm) override {
    if (used_ >= budget_) throw lset::BudgetExhausted("fixture budget exhausted");
    ++used_;
    if (pulls_.size() < f_.size()) pulls_.resize(f_.size(), 0);
    ++pulls_[arm];
    return f_.at(arm) + sigma_ * n_(g_);
  }
  std::size_t samples_used() const override { return used_; }
  const std::vector<std::size_t>& pulls() const { return pulls_; }

 private:
  std::vector<double> f_;
  double sigma_;
  std::mt19937_64 g_;
  std::normal_distribution<double> n_{0.0, 1.0};
  std::size_t budget_;
  std::size_t used_ = 0;
  std::vector<std::size_t> pulls_;
};

inline lset::InstanceSpec linear_spec(const Eigen::MatrixXd& pts, const Eigen::VectorXd& theta, double sigma,
                                      lset::ThresholdSpec thr) {
  lset::InstanceSpec s;
  s.generator = lset::GeneratorKind::ExplicitLinear;
  s.points = pts;
  s.theta = theta;
  s.sigma = sigma;
  s.threshold = thr;
  return s;
}

inline lset::InstanceSpec soare_spec(int n, int d, double sigma, lset::ThresholdSpec thr) {
  lset::InstanceSpec s;
  s.generator = lset::GeneratorKind::Soare;
  s.n = n;
  s.d = d;
  s.sigma = sigma;
  s.threshold = thr;
  return s;
}

}  // namespace fixture
