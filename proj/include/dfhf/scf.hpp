#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "model.hpp"

namespace dfhf {

// One Fock/DF build: eigenvalues of the mean-field operator and the aufbau state.
struct FillStep {
  FillResult fill;
  Eigen::VectorXd eigenvalues;
};

struct ScfTrace {
  std::vector<double> energies;      // accepted iterates, nonincreasing up to roundoff
  std::vector<double> density_steps; // L1 change of rho per accepted step
  int halvings = 0;
};

struct ScfOutcome {
  DensityMatrix gamma;  // aufbau state of the last operator build
  FillStep last;
  int iterations = 0;
  bool converged = false;
  ScfTrace trace;
};

inline double density_l1(const Lattice& lat, const RealField& a, const RealField& b) {
  return lat.cell_volume() * (a - b).cwiseAbs().sum();
}

// Damped fixed-point loop gamma <- (1 - t) gamma + t fill(gamma). t is halved
// whenever the energy would go up and restored after three accepted steps.
template <class Energy, class Fill>
ScfOutcome run_scf(const DensityMatrix& g0, Energy&& energy, Fill&& fill, const ScfSettings& s) {
  require(s.damping > 0.0 && s.damping <= 1.0, "scf: damping must lie in (0, 1]");
  require(s.max_iter >= 1, "scf: max_iter must be positive");
  const Lattice& lat = g0.lattice();
  ScfOutcome out;
  DensityMatrix g = g0;
  double e = energy(g);
  RealField rho = one_particle_density(g);
  double t = s.damping;
  int streak = 0;
  out.trace.energies.push_back(e);
  for (int it = 1; it <= s.max_iter; ++it) {
    out.last = fill(g);
    out.iterations = it;
    DensityMatrix cand;
    double ec = 0.0;
    for (;;) {
      cand = t >= 1.0 ? out.last.fill.gamma : mix(g, out.last.fill.gamma, t);
      ec = energy(cand);
      const double noise = 1e-12 * std::max(1.0, std::abs(e));
      if (ec <= e + noise || t < 1e-6) break;
      t *= 0.5;
      streak = 0;
      ++out.trace.halvings;
    }
    const RealField rho_c = one_particle_density(cand);
    const double de = std::abs(ec - e), dr = density_l1(lat, rho_c, rho);
    g = std::move(cand);
    e = ec;
    rho = rho_c;
    out.trace.energies.push_back(e);
    out.trace.density_steps.push_back(dr);
    if (++streak >= 3) t = s.damping;
    if (de <= s.tol_energy && dr <= s.tol_density) {
      out.converged = true;
      break;
    }
  }
  out.gamma = out.last.fill.gamma;
  return out;
}

}  // namespace dfhf
