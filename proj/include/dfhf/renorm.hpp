#pragma once

#include <cmath>

#include "density.hpp"

namespace dfhf {

enum class Direction { ToRelativistic, ToNonrelativistic };

struct OverlapPack {
  Eigen::MatrixXcd S;
  Eigen::MatrixXcd S_tilde;        // S = I + S_tilde/4c^2 (to relativistic), I - S_tilde/4c^2 (to nonrelativistic)
  Eigen::MatrixXcd S_tilde_large;  // nonrelativistic only: <L K_L u_m, L K_L u_n>, used by the first-order form
  Direction direction = Direction::ToRelativistic;
  double c = 0.0;
  double min_eig_inverse = 0.0;    // spectrum of S^{-1}
  double max_eig_inverse = 0.0;
};

struct Renormalized {
  DensityMatrix exact;        // rank-q projector
  DensityMatrix first_order;  // S^{-1} replaced by its first-order expansion
  OverlapPack pack;
};

namespace detail {

inline Eigen::MatrixXcd l2_gram(const Lattice& lat, const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return lat.cell_volume() * a.adjoint() * b;
}

inline void require_pure(const DensityMatrix& g, const char* who) {
  for (int n = 0; n < g.rank(); ++n)
    if (std::abs(g.occupations()[n] - 1.0) > 1e-10)
      throw InvalidArgument(std::string(who) + ": occupations must all be 1 (integer-filled state)");
}

// Orbitals V S^{-1/2} spanning range(V), orthonormal when S = Gram(V).
inline Eigen::MatrixXcd lowdin(const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (s + s.adjoint()));
  if (es.eigenvalues().minCoeff() <= 1e-14 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw SingularOverlapError("renormalize: overlap matrix is singular");
  return v * es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace detail

inline Renormalized renormalize(const DensityMatrix& in, double c, Direction dir) {
  require(c > 0.0, "renormalize: c must be positive");
  detail::require_pure(in, "renormalize");
  const Lattice& lat = in.lattice();
  const int q = in.rank();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(q, q);
  const double f = 1.0 / (4.0 * c * c);
  Renormalized out;
  out.pack.direction = dir;
  out.pack.c = c;
  Eigen::MatrixXcd v;
  int comps = 0;
  Eigen::MatrixXcd first;
  if (dir == Direction::ToRelativistic) {
    require(in.components() == 2, "renormalize: to_relativistic takes a 2-spinor state");
    v.resize(4 * lat.size(), q);
    Eigen::MatrixXcd lu(2 * lat.size(), q);
    for (int n = 0; n < q; ++n) {
      const SpinorField u = in.orbital(n);
      lu.col(n) = apply_symbol(PauliGradient{}, u).values();
      v.col(n) = spinor_map(SpinorMap::S_c, u, c).values();
    }
    comps = 4;
    out.pack.S_tilde = detail::l2_gram(lat, lu, lu);
    out.pack.S = detail::l2_gram(lat, v, v);
    first = id - f * out.pack.S_tilde;
  } else {
    require(in.components() == 4, "renormalize: to_nonrelativistic takes a 4-spinor state");
    const Eigen::Index half = 2 * lat.size();
    v = in.orbitals().topRows(half);
    const Eigen::MatrixXcd small = in.orbitals().bottomRows(half);
    Eigen::MatrixXcd lv(half, q);
    for (int n = 0; n < q; ++n) lv.col(n) = apply_symbol(PauliGradient{}, SpinorField(in.lattice_ptr(), 2, v.col(n))).values();
    comps = 2;
    out.pack.S_tilde = 4.0 * c * c * detail::l2_gram(lat, small, small);
    out.pack.S_tilde_large = detail::l2_gram(lat, lv, lv);
    out.pack.S = detail::l2_gram(lat, v, v);
    first = id + f * out.pack.S_tilde_large;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (out.pack.S + out.pack.S.adjoint()));
  if (es.eigenvalues().minCoeff() <= 1e-14) throw SingularOverlapError("renormalize: overlap matrix is singular");
  out.pack.min_eig_inverse = 1.0 / es.eigenvalues().maxCoeff();
  out.pack.max_eig_inverse = 1.0 / es.eigenvalues().minCoeff();
  out.exact = DensityMatrix(in.lattice_ptr(), comps, detail::lowdin(v, out.pack.S), Eigen::VectorXd::Ones(q));
  out.first_order = compress(in.lattice_ptr(), comps, v, first, 0.0);
  return out;
}

// || S^{-1} - (I -+ S_tilde/4c^2) ||_{S1(C^q)}.
inline double expansion_residual(const OverlapPack& p) {
  const Eigen::Index q = p.S.rows();
  const double f = 1.0 / (4.0 * p.c * p.c);
  const double sign = p.direction == Direction::ToRelativistic ? -1.0 : 1.0;
  const Eigen::MatrixXcd r = p.S.inverse() - (Eigen::MatrixXcd::Identity(q, q) + sign * f * p.S_tilde);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (r + r.adjoint()));
  return es.eigenvalues().cwiseAbs().sum();
}

}  // namespace dfhf
