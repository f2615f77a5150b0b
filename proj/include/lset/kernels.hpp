#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace lset {

enum class KernelKind { Linear, SquaredExponential };

struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  /// Only read for SquaredExponential: k(x,y) = exp(-|x-y|^2 / (2 l^2)).
  double lengthscale = 1.0;

  static KernelSpec linear() { return {KernelKind::Linear, 1.0}; }
  static KernelSpec squared_exponential(double ell) { return {KernelKind::SquaredExponential, ell}; }

  void validate() const;
};

double kernel_eval(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Finite design space. Rows of `points()` are the arms; index i is arm i.
///
/// Immutable and cheap to copy (shared storage). The Gram matrix is computed
/// once at construction; an explicit feature factorization (F with F F^T = K)
/// is built lazily the first time `features()` is requested.
class ArmSet {
  struct Data {
    Eigen::MatrixXd points;
    KernelSpec kernel;
    Eigen::MatrixXd gram;
    mutable std::once_flag features_once;
    mutable Eigen::MatrixXd features;
  };

 public:
  ArmSet(Eigen::MatrixXd points, KernelSpec kernel);

  std::size_t size() const { return static_cast<std::size_t>(data_->points.rows()); }
  int dim() const { return static_cast<int>(data_->points.cols()); }
  const Eigen::MatrixXd& points() const { return data_->points; }
  const KernelSpec& kernel() const { return data_->kernel; }
  const Eigen::MatrixXd& gram() const { return data_->gram; }
  double k(std::size_t i, std::size_t j) const {
    return data_->gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  /// Explicit features: the points themselves for the linear kernel, otherwise
  /// V sqrt(L) from the eigendecomposition K = V L V^T (negative eigenvalues
  /// clipped, null columns dropped).
  const Eigen::MatrixXd& features() const;

 private:
  std::shared_ptr<Data> data_;
};

/// Sparse combination sum_i c_i phi(x_i) over arm indices, kept sorted by arm.
class FeatureCombo {
 public:
  struct Term {
    std::size_t arm;
    double coef;
  };

  FeatureCombo() = default;

  static FeatureCombo arm(std::size_t i) {
    FeatureCombo c;
    c.add(i, 1.0);
    return c;
  }
  /// phi(x_i) - scale * phi(x_j); coefficients merge when i == j.
  static FeatureCombo difference(std::size_t i, std::size_t j, double scale) {
    FeatureCombo c;
    c.add(i, 1.0);
    c.add(j, -scale);
    return c;
  }

  void add(std::size_t arm, double coef);
  std::span<const Term> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  double coef(std::size_t arm) const;

  /// Throws InvalidInput on out-of-range arms or an all-zero combo.
  void validate(std::size_t n_arms) const;

  bool operator==(const FeatureCombo&) const = default;

 private:
  std::vector<Term> terms_;
};

inline bool operator==(const FeatureCombo::Term& a, const FeatureCombo::Term& b) {
  return a.arm == b.arm && a.coef == b.coef;
}

/// Probability vector over arms.
struct Design {
  Eigen::VectorXd weights;

  static Design uniform(std::size_t n);
  static Design vertex(std::size_t n, std::size_t i);

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  double operator[](std::size_t i) const { return weights(static_cast<Eigen::Index>(i)); }
  /// Nonnegative and sums to one within 1e-9.
  bool valid() const;
  void validate(std::size_t n_arms) const;
};

/// Which algebraic route evaluates <u, (A(lambda) + gamma I)^{-1} v>.
enum class InverseRoute {
  /// s x s system over the support of lambda (requires gamma > 0).
  KernelTrick,
  /// Explicit features; pseudo-inverse when gamma == 0.
  Dense,
  /// Dense for the linear kernel or gamma == 0, kernel trick otherwise.
  Auto,
};

/// Factorized inverse of A^(gamma)(lambda) = sum_i lambda_i phi_i phi_i^T + gamma I.
///
/// Built once per design; every query afterwards is O(s) or O(D) per term.
class InverseForm {
 public:
  InverseForm(const ArmSet& arms, const Design& lambda, double gamma,
              InverseRoute route = InverseRoute::Auto);

  InverseRoute route() const { return route_; }
  double gamma() const { return gamma_; }
  const ArmSet& arms() const { return arms_; }

  /// <phi_i, A^{-1} phi_j>.
  double entry(std::size_t i, std::size_t j) const;
  /// <u, A^{-1} v>.
  double bilinear(const FeatureCombo& u, const FeatureCombo& v) const;
  /// ||u||^2 in the A^{-1} norm.
  double quad(const FeatureCombo& u) const { return bilinear(u, u); }
  /// r_i = <u, A^{-1} phi_i> for every arm i.
  Eigen::VectorXd response(const FeatureCombo& u) const;

  /// False only on the pseudo-inverse path when u leaves range(A).
  bool in_range(const FeatureCombo& u) const;

 private:
  void build_kernel_trick(const Design& lambda);
  void build_dense(const Design& lambda);
  double range_leak(const FeatureCombo& u) const;
  void require_in_range(const FeatureCombo& u) const;

  ArmSet arms_;
  double gamma_;
  InverseRoute route_;
  // kernel trick: Z = L^{-1} diag(sqrt(lambda_S)) K_{S,:}
  Eigen::MatrixXd z_;
  // dense: W = F A^+, null-space basis for the range test
  Eigen::MatrixXd w_;
  Eigen::MatrixXd null_basis_;
  std::vector<char> unsupported_;
};

/// Kernel-trick evaluation of <u, (A(lambda) + gamma I)^{-1} v>; gamma > 0.
double reg_inv_quadform(const ArmSet& arms, const FeatureCombo& u, const FeatureCombo& v,
                        const Design& lambda, double gamma);

/// Explicit-feature evaluation; gamma >= 0, pseudo-inverse when singular.
/// Throws RankDeficiency when u or v is outside range(A).
double dense_inv_quadform(const ArmSet& arms, const FeatureCombo& u, const FeatureCombo& v,
                          const Design& lambda, double gamma);

/// Cholesky of a symmetric PSD matrix, adding 1e-10 * 10^k to the diagonal
/// (k = 0..4) until it succeeds. Throws NumericalError with the last jitter and
/// a condition estimate otherwise.
Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& m);

}  // namespace lset
