#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "density.hpp"

namespace dfhf {

struct NuclearModel {
  double z = 0.0;
  double sigma = 1.0;  // Gaussian width; the charge sits at the box midpoint
};

// 4 pi / |k|^2 with the k = 0 mode removed (neutralizing background).
inline double coulomb_symbol(double k2) { return k2 > 0.0 ? 4.0 * std::numbers::pi / k2 : 0.0; }

inline ComplexField coulomb_convolve(const Lattice& lat, const ComplexField& f) {
  return apply_multiplier(lat, f, [&lat](int i) { return coulomb_symbol(lat.k2()[i]); });
}

inline RealField coulomb_convolve(const Lattice& lat, const RealField& f) {
  return coulomb_convolve(lat, f.cast<cplx>().eval()).real();
}

// Grid kernel w(r) with (W*f)(x) = sum_y w(x - y) f(y).
inline RealField coulomb_kernel_grid(const Lattice& lat) {
  ComplexField wk(lat.size());
  for (int i = 0; i < lat.size(); ++i) wk[i] = coulomb_symbol(lat.k2()[i]);
  return (from_fourier(lat, wk) / static_cast<double>(lat.size())).real();
}

inline std::array<RealField, 3> gradient(const Lattice& lat, const RealField& f) {
  std::array<RealField, 3> g;
  const ComplexField fk = to_fourier(lat, f.cast<cplx>().eval());
  for (int ax = 0; ax < 3; ++ax) {
    ComplexField gk(lat.size());
    for (int i = 0; i < lat.size(); ++i) gk[i] = cplx(0.0, lat.k(ax)[i]) * fk[i];
    g[ax] = from_fourier(lat, gk).real();
  }
  return g;
}

inline RealField laplacian(const Lattice& lat, const RealField& f) {
  return apply_multiplier_real(lat, f, [&lat](int i) { return -lat.k2()[i]; });
}

struct NuclearPotential {
  RealField v;
  std::array<RealField, 3> grad;
  RealField laplacian;
  std::vector<std::string> warnings;
};

// V = mu * 1/|x| for the Gaussian charge z exp(-r^2/2sigma^2)/(2pi sigma^2)^{3/2}.
inline NuclearPotential nuclear_potential(const NuclearModel& model, const Lattice& lat) {
  require(model.z >= 0.0, "nuclear_potential: charge must be nonnegative");
  require(model.sigma > 0.0, "nuclear_potential: sigma must be positive");
  NuclearPotential out;
  const double h = lat.spacing();
  if (model.sigma < 0.5 * h)
    throw InvalidArgument("nuclear_potential: sigma " + std::to_string(model.sigma) +
                          " is below half the grid spacing " + std::to_string(h));
  if (model.sigma < h)
    out.warnings.push_back("nuclear_potential: sigma " + std::to_string(model.sigma) +
                           " is below the grid spacing " + std::to_string(h));

  const double half = 0.5 * lat.box_length();
  ComplexField vk(lat.size());
  for (int i = 0; i < lat.size(); ++i) {
    const Vec3 k = lat.wavevector(i);
    const cplx phase = std::exp(cplx(0.0, -(k[0] + k[1] + k[2]) * half));
    const double mu = model.z * std::exp(-0.5 * model.sigma * model.sigma * lat.k2()[i]);
    vk[i] = coulomb_symbol(lat.k2()[i]) * mu * phase / lat.volume();
  }
  out.v = from_fourier(lat, vk).real();
  for (int ax = 0; ax < 3; ++ax) {
    ComplexField gk(lat.size());
    for (int i = 0; i < lat.size(); ++i) gk[i] = cplx(0.0, lat.k(ax)[i]) * vk[i];
    out.grad[ax] = from_fourier(lat, gk).real();
  }
  ComplexField lk(lat.size());
  for (int i = 0; i < lat.size(); ++i) lk[i] = -lat.k2()[i] * vk[i];
  out.laplacian = from_fourier(lat, lk).real();
  return out;
}

struct MeanFieldParts {
  SpinorField direct;    // W_1 psi
  SpinorField exchange;  // W_2 psi
};

// W_1 psi = (W * rho) psi, W_2 psi = sum_n lambda_n u_n [W * (u_n^dagger psi)].
inline MeanFieldParts apply_mean_field(const DensityMatrix& g, const SpinorField& psi) {
  if (g.lattice_ptr() != psi.lattice_ptr()) throw InvalidArgument("apply_mean_field: lattice mismatch");
  require(g.components() == psi.components(), "apply_mean_field: component mismatch");
  const Lattice& lat = psi.lattice();
  MeanFieldParts out{multiply(coulomb_convolve(lat, one_particle_density(g)), psi),
                     SpinorField(psi.lattice_ptr(), psi.components())};
  for (int n = 0; n < g.rank(); ++n) {
    const SpinorField u = g.orbital(n);
    const ComplexField pot = coulomb_convolve(lat, pointwise_inner(u, psi));
    SpinorField term = multiply(pot, u);
    term *= g.occupations()[n];
    out.exchange += term;
  }
  return out;
}

// Direct potential W * rho_gamma as a real field.
inline RealField direct_potential(const DensityMatrix& g) {
  return coulomb_convolve(g.lattice(), one_particle_density(g));
}

}  // namespace dfhf
