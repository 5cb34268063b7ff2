#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "df.hpp"
#include "renorm.hpp"

namespace dfhf {

struct CorrectionReport {
  double c = 0.0;
  double e2_total = 0.0;
  double e2_eigen_term = 0.0;
  double e2_direct_term = 0.0;
  double e2_exchange_term = 0.0;
  double e_mv = 0.0;
  double e_d = 0.0;
  double e_so = 0.0;
  double consistency_residual = 0.0;  // |4c^2 e2_total - (e_mv + e_d + e_so)|
};

struct Decomposition {
  double e_mv = 0.0;
  double e_d = 0.0;
  double e_so = 0.0;
};

namespace detail {

inline double integrate(const Lattice& lat, const ComplexField& a, const ComplexField& b) {
  // Real part of int a b; every double sum below is real after summing (m, n) and (n, m).
  return lat.cell_volume() * (a.cwiseProduct(b)).sum().real();
}

// Orbitals scaled by sqrt(occupation); the plain orbitals for a pure state.
inline std::vector<SpinorField> orbital_list(const DensityMatrix& g) {
  std::vector<SpinorField> out;
  for (int n = 0; n < g.rank(); ++n) {
    require(g.occupations()[n] >= 0.0, "correction: negative occupation");
    out.push_back(cplx(std::sqrt(g.occupations()[n])) * g.orbital(n));
  }
  return out;
}

inline RealField density_of(const std::vector<SpinorField>& u) {
  RealField rho = RealField::Zero(u.front().lattice().size());
  for (const auto& f : u) rho += pointwise_inner(f, f).real();
  return rho;
}

// The three lines of the trace-form correction for unit-occupation orbitals
// u_n (2-spinors, not necessarily normalized) with eigenvalue shifts e_n.
inline std::array<double, 3> e2_lines(const System& sys, const std::vector<SpinorField>& u, const Eigen::VectorXd& e,
                                      double c) {
  const Lattice& lat = sys.lattice();
  const double f = 1.0 / (4.0 * c * c);
  const int q = static_cast<int>(u.size());
  std::vector<SpinorField> lu;
  for (const auto& x : u) lu.push_back(apply_symbol(PauliGradient{}, x));
  const RealField vt = -sys.potential.v + coulomb_convolve(lat, density_of(u));
  double eig = 0.0, dir = 0.0, exch = 0.0;
  for (int n = 0; n < q; ++n) {
    eig -= f * e[n] * inner(lu[n], lu[n]).real();
    dir += f * inner(lu[n], multiply(vt, lu[n])).real();
  }
  for (int m = 0; m < q; ++m)
    for (int n = 0; n < q; ++n)
      exch -= f * integrate(lat, pointwise_inner(u[n], u[m]), coulomb_convolve(lat, pointwise_inner(lu[m], lu[n])));
  return {eig, dir, exch};
}

inline SpinorField sigma_component(int i, const SpinorField& u) {
  SpinorField out(u.lattice_ptr(), 2);
  const auto a = u.component(0), b = u.component(1);
  switch (i) {
    case 0:
      out.component(0) = b;
      out.component(1) = a;
      break;
    case 1:
      out.component(0) = cplx(0.0, -1.0) * b;
      out.component(1) = cplx(0.0, 1.0) * a;
      break;
    default:
      out.component(0) = a;
      out.component(1) = -b;
  }
  return out;
}

// p_k u = -i d_k u.
inline SpinorField momentum(int k, const SpinorField& u) {
  const int axis = k;
  return apply_symbol(Multiplier{[axis](const Vec3& kv) { return kv[axis]; }}, u);
}

inline double levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  return ((i + 1) % 3 == j) ? 1.0 : -1.0;
}

}  // namespace detail

// allow_fractional evaluates the same trace forms with occupation weights;
// the sweep uses it when the HF shell is open.
inline Decomposition e2_decompose(const System& sys, const DensityMatrix& g, bool allow_fractional = false) {
  require(g.components() == 2, "e2_decompose: HF state must be 2-component");
  if (!allow_fractional) detail::require_pure(g, "e2_decompose");
  const Lattice& lat = sys.lattice();
  const auto u = detail::orbital_list(g);
  const int q = g.rank();
  Decomposition d;
  if (q == 0) return d;
  const RealField w1 = coulomb_convolve(lat, one_particle_density(g));
  const RealField lap_vt = -sys.potential.laplacian + laplacian(lat, w1);
  const auto grad_w1 = gradient(lat, w1);
  std::array<RealField, 3> grad_vt;
  for (int ax = 0; ax < 3; ++ax) grad_vt[ax] = -sys.potential.grad[ax] + grad_w1[ax];

  std::vector<std::array<SpinorField, 3>> pu(q);
  for (int n = 0; n < q; ++n)
    for (int k = 0; k < 3; ++k) pu[n][k] = detail::momentum(k, u[n]);

  for (int n = 0; n < q; ++n) {
    const SpinorField lap = laplacian(u[n]);
    d.e_mv -= 0.5 * inner(lap, lap).real();
    d.e_d += 0.5 * inner(u[n], multiply(lap_vt, u[n])).real();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double eps = detail::levi_civita(i, j, k);
          if (eps == 0.0) continue;
          d.e_so += eps * inner(u[n], multiply(grad_vt[j], detail::sigma_component(i, pu[n][k]))).real();
        }
  }

  // Exchange parts: kernels Delta W (symbol -|k|^2 W_hat) and d_j W (symbol i k_j W_hat);
  // grad_y W(x - y) = -(grad W)(x - y).
  auto lap_w = [&lat](const ComplexField& f) {
    return apply_multiplier(lat, f, [&lat](int i) { return -lat.k2()[i] * coulomb_symbol(lat.k2()[i]); });
  };
  auto grad_w = [&lat](int j, const ComplexField& f) {
    return apply_multiplier(lat, f, [&lat, j](int i) { return cplx(0.0, lat.k(j)[i]) * coulomb_symbol(lat.k2()[i]); });
  };
  for (int m = 0; m < q; ++m)
    for (int n = 0; n < q; ++n) {
      const ComplexField outer = pointwise_inner(u[n], u[m]);
      d.e_d -= 0.5 * detail::integrate(lat, outer, lap_w(pointwise_inner(u[m], u[n])));
      ComplexField acc = ComplexField::Zero(lat.size());
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            const double eps = detail::levi_civita(i, j, k);
            if (eps == 0.0) continue;
            acc -= eps * grad_w(j, pointwise_inner(u[m], detail::sigma_component(i, pu[n][k])));
          }
      d.e_so -= detail::integrate(lat, outer, acc);
    }
  return d;
}

inline CorrectionReport e2_total(const System& sys, const DensityMatrix& g, const Eigen::VectorXd& eigenvalues, double c,
                                 bool with_decomposition = true, bool allow_fractional = false) {
  require(g.components() == 2, "e2_total: HF state must be 2-component");
  if (!allow_fractional) detail::require_pure(g, "e2_total");
  require(eigenvalues.size() == g.rank(), "e2_total: one eigenvalue per orbital");
  CorrectionReport r;
  r.c = c;
  if (g.rank() == 0) return r;
  const auto lines = detail::e2_lines(sys, detail::orbital_list(g), eigenvalues, c);
  r.e2_eigen_term = lines[0];
  r.e2_direct_term = lines[1];
  r.e2_exchange_term = lines[2];
  r.e2_total = lines[0] + lines[1] + lines[2];
  if (with_decomposition) {
    const Decomposition d = e2_decompose(sys, g, allow_fractional);
    r.e_mv = d.e_mv;
    r.e_d = d.e_d;
    r.e_so = d.e_so;
    r.consistency_residual = std::abs(4.0 * c * c * r.e2_total - (d.e_mv + d.e_d + d.e_so));
  }
  return r;
}

// Correction evaluated on the large components K_L u_{c,n} of a DF ground
// state with eigenvalues lambda_n^c (unshifted).
inline double e2_tilde_df(const System& sys, const DensityMatrix& g, const Eigen::VectorXd& eigenvalues, double c) {
  require(g.components() == 4, "e2_tilde_df: DF state must be 4-component");
  detail::require_pure(g, "e2_tilde_df");
  require(eigenvalues.size() == g.rank(), "e2_tilde_df: one eigenvalue per orbital");
  if (g.rank() == 0) return 0.0;
  std::vector<SpinorField> large;
  for (int n = 0; n < g.rank(); ++n) large.push_back(large_block(g.orbital(n)));
  const auto lines = detail::e2_lines(sys, large, eigenvalues.array() - c * c, c);
  return lines[0] + lines[1] + lines[2];
}

// || [L,[L,V]]u - (-Delta V)u - 2i sigma.((grad V) x grad)u || / ||u||_{H^2}.
inline double commutator_residual(const RealField& v, const SpinorField& u) {
  require(u.components() == 2, "commutator_residual takes a 2-spinor");
  const Lattice& lat = u.lattice();
  require(v.size() == lat.size(), "commutator_residual: potential size mismatch");
  auto L = [](const SpinorField& f) { return apply_symbol(PauliGradient{}, f); };
  const SpinorField lhs = L(L(multiply(v, u))) - cplx(2.0) * L(multiply(v, L(u))) + multiply(v, L(L(u)));
  SpinorField rhs = multiply(RealField(-laplacian(lat, v)), u);
  const auto gv = gradient(lat, v);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const double eps = detail::levi_civita(i, j, k);
        if (eps == 0.0) continue;
        // d_k u = i p_k u
        SpinorField t = multiply(gv[j], detail::sigma_component(i, detail::momentum(k, u)));
        rhs += cplx(0.0, 2.0 * eps) * (cplx(0.0, 1.0) * t);
      }
  return norm(lhs - rhs) / sobolev_norm(u, 2.0);
}

}  // namespace dfhf
