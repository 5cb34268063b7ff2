#pragma once

#include <vector>

#include <Eigen/Dense>

#include "model.hpp"

namespace dfhf {

// Dense matrices of the mean-field operators acting on grid-value vectors
// (component-blocked). Used for SCF eigensolves and as test oracles.
namespace dense_ops {

// kernel(r) = (1/M) sum_k symbol(k) exp(i k.r) for a per-mode symbol.
template <class Symbol>
ComplexField symbol_kernel(const Lattice& lat, Symbol&& symbol) {
  ComplexField s(lat.size());
  for (int i = 0; i < lat.size(); ++i) s[i] = symbol(i);
  return from_fourier(lat, s) / static_cast<double>(lat.size());
}

// M x M matrix with entries kernel(x - y).
template <class Scalar, class Kernel>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> circulant(const Lattice& lat, const Kernel& kernel) {
  const int m = lat.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(m, m);
  for (int y = 0; y < m; ++y)
    for (int x = 0; x < m; ++x) out(x, y) = kernel[lat.difference_index(x, y)];
  return out;
}

inline Eigen::MatrixXcd kinetic_matrix(const Lattice& lat, int comps) {
  const int m = lat.size();
  const Eigen::MatrixXcd t = circulant<cplx>(lat, symbol_kernel(lat, [&lat](int i) { return cplx(0.5 * lat.k2()[i]); }));
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(comps) * m, static_cast<Eigen::Index>(comps) * m);
  for (int c = 0; c < comps; ++c) a.block(c * m, c * m, m, m) = t;
  return a;
}

inline Eigen::MatrixXcd dirac_matrix(const Lattice& lat, double c) {
  const int m = lat.size();
  const double c2 = c * c;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(4 * m, 4 * m);
  for (int i = 0; i < 2 * m; ++i) a(i, i) = c2;
  for (int i = 2 * m; i < 4 * m; ++i) a(i, i) = -c2;
  const auto kz = circulant<cplx>(lat, symbol_kernel(lat, [&](int i) { return cplx(c * lat.k(2)[i]); }));
  const auto km = circulant<cplx>(lat, symbol_kernel(lat, [&](int i) { return c * cplx(lat.k(0)[i], -lat.k(1)[i]); }));
  const auto kp = circulant<cplx>(lat, symbol_kernel(lat, [&](int i) { return c * cplx(lat.k(0)[i], lat.k(1)[i]); }));
  for (int off : {0, 2}) {
    const int r = off == 0 ? 0 : 2 * m, s = off == 0 ? 2 * m : 0;
    a.block(r, s, m, m) = kz;
    a.block(r, s + m, m, m) = km;
    a.block(r + m, s, m, m) = kp;
    a.block(r + m, s + m, m, m) = -kz;
  }
  return a;
}

inline void add_diagonal_potential(Eigen::MatrixXcd& a, const RealField& v, int comps) {
  const int m = static_cast<int>(v.size());
  for (int c = 0; c < comps; ++c)
    for (int x = 0; x < m; ++x) a(c * m + x, c * m + x) += v[x];
}

// Adds -W_2 built entrywise from gamma(x, y).
inline void subtract_exchange(Eigen::MatrixXcd& a, const DensityMatrix& g) {
  if (g.rank() == 0) return;
  const Lattice& lat = g.lattice();
  const int m = lat.size(), comps = g.components();
  const Eigen::MatrixXd w = circulant<double>(lat, coulomb_kernel_grid(lat));
  const Eigen::MatrixXcd& u = g.orbitals();
  for (int ca = 0; ca < comps; ++ca)
    for (int cb = 0; cb < comps; ++cb) {
      const Eigen::MatrixXcd kern =
          u.middleRows(ca * m, m) * g.occupations().asDiagonal() * u.middleRows(cb * m, m).adjoint();
      a.block(ca * m, cb * m, m, m) -= kern.cwiseProduct(w);
    }
}

inline Eigen::MatrixXcd mean_field_matrix(const DensityMatrix& g) {
  const int d = static_cast<int>(g.dim());
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
  add_diagonal_potential(a, direct_potential(g), g.components());
  subtract_exchange(a, g);
  return a;
}

inline Eigen::MatrixXcd fock_matrix(const System& sys, const DensityMatrix& g) {
  require(g.components() == 2, "fock_matrix: HF acts on 2-spinors");
  Eigen::MatrixXcd a = kinetic_matrix(sys.lattice(), 2);
  add_diagonal_potential(a, -sys.potential.v, 2);
  if (g.rank() > 0) {
    add_diagonal_potential(a, direct_potential(g), 2);
    subtract_exchange(a, g);
  }
  return a;
}

inline Eigen::MatrixXcd df_matrix(const System& sys, const DensityMatrix& g, double c) {
  require(g.components() == 4, "df_matrix: DF acts on 4-spinors");
  Eigen::MatrixXcd a = dirac_matrix(sys.lattice(), c);
  add_diagonal_potential(a, -sys.potential.v, 4);
  if (g.rank() > 0) {
    add_diagonal_potential(a, direct_potential(g), 4);
    subtract_exchange(a, g);
  }
  return a;
}

}  // namespace dense_ops
}  // namespace dfhf
