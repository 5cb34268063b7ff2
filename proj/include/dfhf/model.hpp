#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "coulomb.hpp"

namespace dfhf {

struct ModelParams {
  LatticePtr lattice;
  NuclearModel nuclear;
  double q = 1.0;
  double c = 137.035999;

  double kappa() const { return 2.0 * (q + nuclear.z) / c; }
  double lambda0() const { return 1.0 - std::max(q, nuclear.z) / c; }
  double a_c() const {
    return std::numbers::pi / (4.0 * c * std::sqrt((1.0 - kappa()) * lambda0()));
  }
  double L_c(double R) const { return 2.0 * a_c() * R; }
  double A_c(double R) const { return std::max(1.0 / (1.0 - 2.0 * a_c() * R), (2.0 + a_c() * q) / 2.0); }
  // R_c^DF; NaN when the square root has a nonpositive argument.
  double R_df() const {
    const double s = 1.0 - kappa() - std::numbers::pi * q / (4.0 * c);
    return s > 0.0 ? q / std::sqrt(s) + 1.0 : std::numeric_limits<double>::quiet_NaN();
  }
  bool assumption_1() const {
    const double rdf = R_df();
    return kappa() < 1.0 - std::numbers::pi * q / (4.0 * c) && std::isfinite(rdf) && rdf < 1.0 / (2.0 * a_c());
  }
  // c >= max{1, 4q + 4z, 4 pi R0}.
  bool assumption_c(double r0) const {
    return c >= std::max({1.0, 4.0 * q + 4.0 * nuclear.z, 4.0 * std::numbers::pi * r0});
  }
  // Existence hypothesis of the HF minimizer.
  bool hf_existence_flag() const { return q <= nuclear.z - 1.0; }
};

// R0 = max{2 + 4q, 1 + x2 + 4(pi + 2 sqrt2 z)(1 + x2)^2}, x2 = ||gamma_HF||_{X^2}.
inline double r0_bound(double q, double z, double x2_norm_hf) {
  const double t = 1.0 + x2_norm_hf;
  return std::max(2.0 + 4.0 * q, 1.0 + x2_norm_hf + 4.0 * (std::numbers::pi + 2.0 * std::numbers::sqrt2 * z) * t * t);
}

enum class EigenMethod { Auto, Dense, Iterative };

struct ScfSettings {
  double tol_energy = 1e-10;
  double tol_density = 1e-8;
  double damping = 0.5;
  int max_iter = 200;
  EigenMethod eigen_method = EigenMethod::Auto;
  int dense_limit = 512;   // Auto switches to the iterative solver above this dimension
  int extra_states = 6;    // computed beyond q to resolve degeneracy and the Fermi gap
};

struct EnergyReport {
  double total = 0.0;
  double kinetic = 0.0;
  double nuclear_attraction = 0.0;
  double hartree_direct = 0.0;
  double exchange = 0.0;
  Eigen::VectorXd eigenvalues;  // computed eigenvalues of the final mean-field operator
  double fermi = 0.0;
  double fermi_gap = std::numeric_limits<double>::infinity();
  double delta_mass = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> flags;
};

// Everything a solver needs that does not depend on gamma.
struct System {
  ModelParams params;
  NuclearPotential potential;

  explicit System(ModelParams p) : params(std::move(p)), potential(nuclear_potential(params.nuclear, *params.lattice)) {
    require(params.q >= 0.0, "System: q must be nonnegative");
    require(params.c > 0.0, "System: c must be positive");
  }

  const Lattice& lattice() const { return *params.lattice; }
  const LatticePtr& lattice_ptr() const { return params.lattice; }
};

// Two-body energies (1/2)Tr[W_1 gamma gamma] and (1/2)Tr[W_2 gamma gamma].
inline std::pair<double, double> two_body_energies(const DensityMatrix& g) {
  const Lattice& lat = g.lattice();
  const RealField rho = one_particle_density(g);
  const double direct = 0.5 * lat.cell_volume() * rho.dot(coulomb_convolve(lat, rho));
  double exch = 0.0;
  for (int m = 0; m < g.rank(); ++m)
    for (int n = m; n < g.rank(); ++n) {
      const ComplexField fk = to_fourier(lat, pointwise_inner(g.orbital(m), g.orbital(n)));
      double s = 0.0;
      for (int i = 0; i < lat.size(); ++i) s += coulomb_symbol(lat.k2()[i]) * std::norm(fk[i]);
      exch += (m == n ? 1.0 : 2.0) * g.occupations()[m] * g.occupations()[n] * lat.volume() * s;
    }
  return {direct, 0.5 * exch};
}

inline double nuclear_attraction(const System& sys, const DensityMatrix& g) {
  return sys.lattice().cell_volume() * sys.potential.v.dot(one_particle_density(g));
}

}  // namespace dfhf
