#pragma once

// Brute-force reference computations used only by the tests. Nothing here
// calls into the library's linear algebra, so agreement is a real cross-check.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double ell) {
  return std::exp(-(x - y).squaredNorm() / (2.0 * ell * ell));
}

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& pts, bool linear, double ell) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k(i, j) = linear ? pts.row(i).dot(pts.row(j)) : rbf(pts.row(i).transpose(), pts.row(j).transpose(), ell);
    }
  }
  return k;
}

/// <u, (sum_i lambda_i phi_i phi_i^T + gamma I)^{-1} v> for u = sum a_i phi_i, v = sum b_i phi_i.
/// Works in the span of the features: with K = F F^T (eigen square root), the operator
/// restricted to span(phi) is F^T diag(lambda) F + gamma I in F-coordinates.
inline double gram_space_form(const Eigen::MatrixXd& k, const Eigen::VectorXd& lambda, double gamma,
                              const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd f = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd a_op =
      f.transpose() * lambda.asDiagonal() * f + gamma * Eigen::MatrixXd::Identity(k.rows(), k.cols());
  const Eigen::VectorXd fu = f.transpose() * a;
  const Eigen::VectorXd fv = f.transpose() * b;
  return fu.dot(a_op.fullPivLu().solve(fv));
}

/// Textbook GP posterior at every arm from an observation list.
inline void gp_posterior(const Eigen::MatrixXd& k, const std::vector<std::size_t>& obs,
                         const std::vector<double>& y, double noise_var, Eigen::VectorXd& mean,
                         Eigen::VectorXd& var) {
  const Eigen::Index n = k.rows();
  const Eigen::Index t = static_cast<Eigen::Index>(obs.size());
  mean = Eigen::VectorXd::Zero(n);
  var = k.diagonal();
  if (t == 0) return;
  Eigen::MatrixXd kt(t, t);
  Eigen::MatrixXd kx(n, t);
  Eigen::VectorXd yt(t);
  for (Eigen::Index a = 0; a < t; ++a) {
    yt(a) = y[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < t; ++b) {
      kt(a, b) = k(static_cast<Eigen::Index>(obs[static_cast<std::size_t>(a)]),
                   static_cast<Eigen::Index>(obs[static_cast<std::size_t>(b)]));
    }
    for (Eigen::Index x = 0; x < n; ++x) kx(x, a) = k(x, static_cast<Eigen::Index>(obs[static_cast<std::size_t>(a)]));
  }
  kt.diagonal().array() += noise_var;
  const Eigen::MatrixXd inv = kt.inverse();
  mean = kx * inv * yt;
  for (Eigen::Index x = 0; x < n; ++x) var(x) = k(x, x) - kx.row(x) * inv * kx.row(x).transpose();
}

inline Eigen::VectorXd random_simplex(std::mt19937_64& g, Eigen::Index n) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = e(g);
  return w / w.sum();
}

inline Eigen::MatrixXd random_points(std::mt19937_64& g, Eigen::Index n, Eigen::Index d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd p(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p(i, j) = u(g);
  }
  return p;
}

/// All points of the simplex over `k` coordinates on a grid of step 1/steps.
inline std::vector<std::vector<double>> simplex_grid(int k, int steps) {
  std::vector<std::vector<double>> out;
  std::vector<int> c(static_cast<std::size_t>(k), 0);
  auto rec = [&](auto&& self, int idx, int left) -> void {
    if (idx == k - 1) {
      c[static_cast<std::size_t>(idx)] = left;
      std::vector<double> w;
      for (int v : c) w.push_back(static_cast<double>(v) / steps);
      out.push_back(std::move(w));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[static_cast<std::size_t>(idx)] = v;
      self(self, idx + 1, left - v);
    }
  };
  rec(rec, 0, steps);
  return out;
}

}  // namespace oracle
