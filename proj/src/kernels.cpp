#include "lset/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "lset/errors.hpp"

namespace lset {

void KernelSpec::validate() const {
  if (kind == KernelKind::SquaredExponential && !(lengthscale > 0.0)) {
    throw InvalidInput("squared exponential lengthscale must be positive");
  }
}

double kernel_eval(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) {
    throw InvalidInput("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                       std::to_string(y.size()) + ")");
  }
  switch (k.kind) {
    case KernelKind::Linear:
      return x.dot(y);
    case KernelKind::SquaredExponential: {
      const double d2 = (x - y).squaredNorm();
      return std::exp(-d2 / (2.0 * k.lengthscale * k.lengthscale));
    }
  }
  return 0.0;
}

ArmSet::ArmSet(Eigen::MatrixXd points, KernelSpec kernel) : data_(std::make_shared<Data>()) {
  kernel.validate();
  if (points.rows() < 1) throw InvalidInput("ArmSet needs at least one arm");
  if (points.cols() < 1) throw InvalidInput("ArmSet points need dimension >= 1");
  data_->points = std::move(points);
  data_->kernel = kernel;
  const Eigen::Index n = data_->points.rows();
  auto& g = data_->gram;
  g.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_eval(kernel, data_->points.row(i).transpose(),
                                   data_->points.row(j).transpose());
      g(i, j) = v;
      g(j, i) = v;
    }
  }
}

const Eigen::MatrixXd& ArmSet::features() const {
  std::call_once(data_->features_once, [this] {
    if (data_->kernel.kind == KernelKind::Linear) {
      data_->features = data_->points;
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data_->gram);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double top = std::max(ev.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) > 1e-14 * top) keep.push_back(i);
    }
    Eigen::MatrixXd f(data_->gram.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      f.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
    }
    data_->features = std::move(f);
  });
  return data_->features;
}

void FeatureCombo::add(std::size_t arm, double coef) {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), arm,
                             [](const Term& t, std::size_t a) { return t.arm < a; });
  if (it != terms_.end() && it->arm == arm) {
    it->coef += coef;
    if (it->coef == 0.0) terms_.erase(it);
  } else if (coef != 0.0) {
    terms_.insert(it, Term{arm, coef});
  }
}

double FeatureCombo::coef(std::size_t arm) const {
  for (const auto& t : terms_) {
    if (t.arm == arm) return t.coef;
  }
  return 0.0;
}

void FeatureCombo::validate(std::size_t n_arms) const {
  if (terms_.empty()) throw InvalidInput("feature combo has no nonzero coefficient");
  for (const auto& t : terms_) {
    if (t.arm >= n_arms) {
      throw InvalidInput("feature combo refers to arm " + std::to_string(t.arm) + " of " +
                         std::to_string(n_arms));
    }
  }
}

Design Design::uniform(std::size_t n) {
  return Design{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n))};
}

Design Design::vertex(std::size_t n, std::size_t i) {
  Design d{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  d.weights(static_cast<Eigen::Index>(i)) = 1.0;
  return d;
}

bool Design::valid() const {
  if (weights.size() == 0) return false;
  if ((weights.array() < 0.0).any()) return false;
  return std::abs(weights.sum() - 1.0) <= 1e-9;
}

void Design::validate(std::size_t n_arms) const {
  if (size() != n_arms) {
    throw InvalidInput("design has " + std::to_string(size()) + " weights for " +
                       std::to_string(n_arms) + " arms");
  }
  if (!valid()) throw InvalidInput("design weights must be nonnegative and sum to 1");
}

Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  double jitter = 1e-10;
  const Eigen::Index n = m.rows();
  for (int attempt = 0; attempt < 5; ++attempt, jitter *= 10.0) {
    llt.compute(m + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "Cholesky failed after jitter up to 1e-6; eigenvalue range [" << es.eigenvalues().minCoeff()
      << ", " << es.eigenvalues().maxCoeff() << "]";
  throw NumericalError(msg.str());
}

InverseForm::InverseForm(const ArmSet& arms, const Design& lambda, double gamma, InverseRoute route)
    : arms_(arms), gamma_(gamma), route_(route) {
  lambda.validate(arms.size());
  if (!(gamma >= 0.0)) throw InvalidInput("regularization gamma must be >= 0");
  if (route_ == InverseRoute::Auto) {
    route_ = (arms.kernel().kind == KernelKind::Linear || gamma == 0.0) ? InverseRoute::Dense
                                                                          : InverseRoute::KernelTrick;
  }
  if (route_ == InverseRoute::KernelTrick) {
    if (!(gamma > 0.0)) {
      throw InvalidInput("kernel-trick route needs gamma > 0; use the dense route for gamma = 0");
    }
    build_kernel_trick(lambda);
  } else {
    build_dense(lambda);
  }
}

void InverseForm::build_kernel_trick(const Design& lambda) {
  // Zero-weight arms are dropped from the support.
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < lambda.weights.size(); ++i) {
    if (lambda.weights(i) > 0.0) support.push_back(i);
  }
  const auto s = static_cast<Eigen::Index>(support.size());
  const auto n = static_cast<Eigen::Index>(arms_.size());
  const Eigen::MatrixXd& k = arms_.gram();
  Eigen::VectorXd root(s);
  for (Eigen::Index a = 0; a < s; ++a) root(a) = std::sqrt(lambda.weights(support[a]));

  Eigen::MatrixXd ks(s, s);
  Eigen::MatrixXd c(s, n);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) ks(a, b) = root(a) * root(b) * k(support[a], support[b]);
    ks(a, a) += gamma_;
    c.row(a) = root(a) * k.row(support[a]);
  }
  const auto llt = cholesky_with_jitter(ks);
  z_ = llt.matrixL().solve(c);
}

void InverseForm::build_dense(const Design& lambda) {
  const Eigen::MatrixXd& f = arms_.features();
  const Eigen::Index dim = f.cols();
  Eigen::MatrixXd a = f.transpose() * lambda.weights.asDiagonal() * f;
  a.diagonal().array() += gamma_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  const double cutoff = gamma_ > 0.0 ? 0.0 : 1e-12 * top;
  Eigen::VectorXd inv_ev(dim);
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (ev(i) > cutoff && ev(i) > 0.0) {
      inv_ev(i) = 1.0 / ev(i);
    } else {
      inv_ev(i) = 0.0;
      null_cols.push_back(i);
    }
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  w_ = f * v * inv_ev.asDiagonal() * v.transpose();
  unsupported_.assign(arms_.size(), 0);
  for (std::size_t i = 0; i < arms_.size(); ++i) unsupported_[i] = lambda[i] == 0.0;
  null_basis_.resize(dim, static_cast<Eigen::Index>(null_cols.size()));
  for (std::size_t c = 0; c < null_cols.size(); ++c) {
    null_basis_.col(static_cast<Eigen::Index>(c)) = v.col(null_cols[c]);
  }
}

double InverseForm::range_leak(const FeatureCombo& u) const {
  if (route_ != InverseRoute::Dense || null_basis_.cols() == 0) return 0.0;
  // phi_i with lambda_i > 0 lies in range(A) exactly; only the unsupported
  // terms can leave it, and testing them alone keeps eigenvalue truncation on
  // ill-conditioned kernels from reading as a missing direction.
  const Eigen::MatrixXd& f = arms_.features();
  Eigen::VectorXd fu = Eigen::VectorXd::Zero(f.cols());
  bool any = false;
  for (const auto& t : u.terms()) {
    if (!unsupported_[t.arm]) continue;
    fu += t.coef * f.row(static_cast<Eigen::Index>(t.arm)).transpose();
    any = true;
  }
  if (!any) return 0.0;
  return (null_basis_.transpose() * fu).norm() / std::max(1.0, fu.norm());
}

bool InverseForm::in_range(const FeatureCombo& u) const { return range_leak(u) <= 1e-8; }

void InverseForm::require_in_range(const FeatureCombo& u) const {
  const double leak = range_leak(u);
  if (leak > 1e-8) {
    throw RankDeficiency("direction lies outside range(A(lambda)) (relative leak " + std::to_string(leak) +
                         "); singular design with gamma = 0");
  }
}

double InverseForm::entry(std::size_t i, std::size_t j) const {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  if (route_ == InverseRoute::KernelTrick) {
    return (arms_.gram()(a, b) - z_.col(a).dot(z_.col(b))) / gamma_;
  }
  return w_.row(a).dot(arms_.features().row(b));
}

double InverseForm::bilinear(const FeatureCombo& u, const FeatureCombo& v) const {
  if (route_ == InverseRoute::KernelTrick) {
    double kuv = 0.0;
    Eigen::VectorXd zu = Eigen::VectorXd::Zero(z_.rows());
    Eigen::VectorXd zv = Eigen::VectorXd::Zero(z_.rows());
    for (const auto& a : u.terms()) {
      zu += a.coef * z_.col(static_cast<Eigen::Index>(a.arm));
      for (const auto& b : v.terms()) kuv += a.coef * b.coef * arms_.k(a.arm, b.arm);
    }
    for (const auto& b : v.terms()) zv += b.coef * z_.col(static_cast<Eigen::Index>(b.arm));
    return (kuv - zu.dot(zv)) / gamma_;
  }
  require_in_range(u);
  if (!(&u == &v)) require_in_range(v);
  const Eigen::MatrixXd& f = arms_.features();
  Eigen::VectorXd wu = Eigen::VectorXd::Zero(w_.cols());
  Eigen::VectorXd fv = Eigen::VectorXd::Zero(f.cols());
  for (const auto& a : u.terms()) wu += a.coef * w_.row(static_cast<Eigen::Index>(a.arm)).transpose();
  for (const auto& b : v.terms()) fv += b.coef * f.row(static_cast<Eigen::Index>(b.arm)).transpose();
  return wu.dot(fv);
}

Eigen::VectorXd InverseForm::response(const FeatureCombo& u) const {
  if (route_ == InverseRoute::KernelTrick) {
    Eigen::VectorXd ku = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arms_.size()));
    Eigen::VectorXd zu = Eigen::VectorXd::Zero(z_.rows());
    for (const auto& a : u.terms()) {
      const auto i = static_cast<Eigen::Index>(a.arm);
      ku += a.coef * arms_.gram().col(i);
      zu += a.coef * z_.col(i);
    }
    return (ku - z_.transpose() * zu) / gamma_;
  }
  require_in_range(u);
  Eigen::VectorXd wu = Eigen::VectorXd::Zero(w_.cols());
  for (const auto& a : u.terms()) wu += a.coef * w_.row(static_cast<Eigen::Index>(a.arm)).transpose();
  return arms_.features() * wu;
}

double reg_inv_quadform(const ArmSet& arms, const FeatureCombo& u, const FeatureCombo& v,
                        const Design& lambda, double gamma) {
  if (!(gamma > 0.0)) {
    throw InvalidInput("reg_inv_quadform needs gamma > 0; use dense_inv_quadform for gamma = 0");
  }
  u.validate(arms.size());
  v.validate(arms.size());
  return InverseForm(arms, lambda, gamma, InverseRoute::KernelTrick).bilinear(u, v);
}

double dense_inv_quadform(const ArmSet& arms, const FeatureCombo& u, const FeatureCombo& v,
                          const Design& lambda, double gamma) {
  u.validate(arms.size());
  v.validate(arms.size());
  return InverseForm(arms, lambda, gamma, InverseRoute::Dense).bilinear(u, v);
}

}  // namespace lset
