#pragma once

#include <cstdint>
#include <random>

#include "density.hpp"
#include "operators.hpp"

namespace dfhf {

using Rng = std::mt19937_64;

// Fourier coefficients ~ (1+|k|^2)^{-s/2-3/4} * complex gaussian, so the
// sample sits in H^s with room to spare. Normalized to unit L2 norm.
inline SpinorField random_field(const LatticePtr& lat, int comps, double s, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ComplexField> hat(comps, ComplexField(lat->size()));
  for (int a = 0; a < comps; ++a)
    for (int i = 0; i < lat->size(); ++i) {
      const double w = std::pow(1.0 + lat->k2()[i], -0.5 * s - 0.75);
      const double re = g(rng), im = g(rng);
      hat[a][i] = w * cplx(re, im);
    }
  SpinorField u = detail::from_fourier_components(lat, hat);
  return cplx(1.0 / norm(u)) * u;
}

// Zero-mean version: the k = 0 coefficient is removed in every component.
inline SpinorField random_mean_free_field(const LatticePtr& lat, int comps, double s, Rng& rng) {
  SpinorField u = random_field(lat, comps, s, rng);
  for (int a = 0; a < comps; ++a) u.component(a).array() -= u.component(a).mean();
  return cplx(1.0 / norm(u)) * u;
}

// Orthonormal (L2) columns spanning `count` random fields.
inline Eigen::MatrixXcd random_orbitals(const LatticePtr& lat, int comps, int count, double s, Rng& rng) {
  Eigen::MatrixXcd u(static_cast<Eigen::Index>(comps) * lat->size(), count);
  for (int n = 0; n < count; ++n) u.col(n) = random_field(lat, comps, s, rng).values();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(u);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(u.rows(), count);
  return q / std::sqrt(lat->cell_volume());
}

// Random state of the given rank; occupations uniform in [0, 1] unless pure.
inline DensityMatrix random_density(const LatticePtr& lat, int comps, int rank, double s, Rng& rng, bool pure = false) {
  Eigen::MatrixXcd u = random_orbitals(lat, comps, rank, s, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd occ(rank);
  for (int n = 0; n < rank; ++n) occ[n] = pure ? 1.0 : unit(rng);
  return DensityMatrix(lat, comps, std::move(u), std::move(occ));
}

}  // namespace dfhf
