#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace dfhf {

using BlockOperator = std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>;
// Preconditioner applied to residual columns, given the current Ritz values.
using BlockPreconditioner = std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&, const Eigen::VectorXd&)>;

struct LobpcgResult {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;  // Euclidean-orthonormal
  int iterations = 0;
  double max_residual = 0.0;
  bool converged = false;
};

namespace detail {

// Orthonormal basis of range(s) via the Gram spectrum; drops near-dependent directions.
inline Eigen::MatrixXcd svqb(const Eigen::MatrixXcd& s, double drop = 1e-14) {
  Eigen::VectorXd scale = s.colwise().norm().transpose();
  for (int j = 0; j < scale.size(); ++j) scale[j] = scale[j] > 0.0 ? 1.0 / scale[j] : 0.0;
  const Eigen::MatrixXcd sn = s * scale.asDiagonal();
  const Eigen::MatrixXcd g = sn.adjoint() * sn;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (g + g.adjoint()));
  const double top = es.eigenvalues().maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < g.rows(); ++i)
    if (es.eigenvalues()[i] > drop * top) keep.push_back(i);
  Eigen::MatrixXcd out(s.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) =
        sn * es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()[keep[j]]);
  return out;
}

}  // namespace detail

// Lowest k = x0.cols() eigenpairs of a Hermitian operator (block LOBPCG with
// full Rayleigh-Ritz on [X, W, P]). Converged when every residual norm is at
// most tol * max(1, |lambda|).
inline LobpcgResult lobpcg(const BlockOperator& apply, const BlockPreconditioner& precond, const Eigen::MatrixXcd& x0,
                           double tol, int max_iter) {
  const Eigen::Index k = x0.cols();
  require(k > 0 && x0.rows() >= 3 * k, "lobpcg: block too large for the dimension");
  LobpcgResult res;
  Eigen::MatrixXcd x = detail::svqb(x0);
  require(x.cols() == k, "lobpcg: initial block is rank deficient");
  Eigen::MatrixXcd ax = apply(x);
  {
    const Eigen::MatrixXcd h = x.adjoint() * ax;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()));
    x = x * es.eigenvectors();
    ax = ax * es.eigenvectors();
    res.values = es.eigenvalues();
  }
  Eigen::MatrixXcd p;
  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::MatrixXcd r = ax - x * res.values.asDiagonal();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < k; ++j)
      worst = std::max(worst, r.col(j).norm() / std::max(1.0, std::abs(res.values[j])));
    res.max_residual = worst;
    res.iterations = it;
    if (worst <= tol) {
      res.converged = true;
      break;
    }
    if (it == max_iter) break;
    Eigen::MatrixXcd w = precond(r, res.values);
    w -= x * (x.adjoint() * w);
    Eigen::MatrixXcd s(x.rows(), k + w.cols() + p.cols());
    s.leftCols(k) = x;
    s.middleCols(k, w.cols()) = w;
    if (p.cols() > 0) s.rightCols(p.cols()) = p;
    const Eigen::MatrixXcd q = detail::svqb(s);
    const Eigen::MatrixXcd aq = apply(q);
    const Eigen::MatrixXcd h = q.adjoint() * aq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()));
    const Eigen::MatrixXcd c = es.eigenvectors().leftCols(k);
    const Eigen::MatrixXcd xn = q * c;
    p = xn - x * (x.adjoint() * xn);
    x = xn;
    ax = aq * c;
    res.values = es.eigenvalues().head(k);
  }
  res.vectors = x;
  return res;
}

}  // namespace dfhf
