#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hf.hpp"

namespace dfhf {

// D^c - V + W_1 - W_2 for a fixed gamma.
class DfApplier {
 public:
  DfApplier(const System& sys, const DensityMatrix& g, double c)
      : sys_(sys), g_(g), c_(c), local_(-sys.potential.v + direct_potential(g)) {
    require(g.components() == 4, "DfApplier: DF acts on 4-spinors");
    require(g.lattice_ptr() == sys.lattice_ptr(), "DfApplier: lattice mismatch");
  }

  SpinorField operator()(const SpinorField& psi) const {
    require(psi.components() == 4, "df_apply_operator: psi must be a 4-spinor");
    if (psi.lattice_ptr() != sys_.lattice_ptr()) throw InvalidArgument("df_apply_operator: lattice mismatch");
    SpinorField out = apply_symbol(Dirac{c_}, psi);
    out += multiply(local_, psi);
    const Lattice& lat = psi.lattice();
    for (int n = 0; n < g_.rank(); ++n) {
      const SpinorField u = g_.orbital(n);
      SpinorField term = multiply(coulomb_convolve(lat, pointwise_inner(u, psi)), u);
      term *= g_.occupations()[n];
      out -= term;
    }
    return out;
  }

 private:
  const System& sys_;
  const DensityMatrix& g_;
  double c_;
  RealField local_;
};

inline SpinorField df_apply_operator(const System& sys, const DensityMatrix& g, const SpinorField& psi, double c) {
  return DfApplier(sys, g, c)(psi);
}

// <u, (D^c - c^2) u>, evaluated per mode so the rest mass cancels exactly.
inline double dirac_kinetic(const SpinorField& u, double c) {
  require(u.components() == 4, "dirac_kinetic takes a 4-spinor");
  const Lattice& lat = u.lattice();
  const auto hat = detail::fourier_components(u);
  double acc = 0.0;
  for (int i = 0; i < lat.size(); ++i) {
    cplx s0, s1;
    detail::sigma_dot(lat.wavevector(i), hat[2][i], hat[3][i], s0, s1);
    acc += 2.0 * c * (std::conj(hat[0][i]) * s0 + std::conj(hat[1][i]) * s1).real();
    acc -= 2.0 * c * c * (std::norm(hat[2][i]) + std::norm(hat[3][i]));
  }
  return lat.volume() * acc;
}

inline EnergyReport df_energy(const System& sys, const DensityMatrix& g, double c) {
  require(g.components() == 4, "df_energy: DF acts on 4-spinors");
  EnergyReport r;
  if (g.rank() == 0) return r;
  for (int n = 0; n < g.rank(); ++n) r.kinetic += g.occupations()[n] * dirac_kinetic(g.orbital(n), c);
  r.nuclear_attraction = nuclear_attraction(sys, g);
  std::tie(r.hartree_direct, r.exchange) = two_body_energies(g);
  r.total = r.kinetic - r.nuclear_attraction + r.hartree_direct - r.exchange;
  return r;
}

// Spectral calculus of the dense D^c_gamma: P^{+-} and eigenpairs.
class MeanFieldSpectrum {
 public:
  MeanFieldSpectrum(const System& sys, const DensityMatrix& g, double c)
      : lat_(sys.lattice_ptr()), c_(c), f_(dense_ops::df_matrix(sys, g, c)) {
    const Eigen::VectorXd& w = f_.values();
    first_positive_ = static_cast<int>(w.size());
    for (int i = 0; i < w.size(); ++i)
      if (w[i] > 0.0) {
        first_positive_ = i;
        break;
      }
    min_abs_ = w.cwiseAbs().minCoeff();
  }

  const Eigen::VectorXd& values() const { return f_.values(); }
  int first_positive() const { return first_positive_; }
  double min_abs_eigenvalue() const { return min_abs_; }

  void check_gap(double tol = 1e-8) const {
    if (min_abs_ <= tol)
      throw NearKernelError("D^c_gamma has eigenvalue " + std::to_string(min_abs_) + " within " + std::to_string(tol) +
                                " of 0; the projector is ill-defined",
                            min_abs_);
  }

  // P^{+-} applied to grid-value columns.
  Eigen::MatrixXcd project(const Eigen::MatrixXcd& v, Sign sign) const {
    check_gap();
    const bool plus = sign == Sign::Plus;
    return f_.apply_function([plus](double x) { return (x > 0.0) == plus ? 1.0 : 0.0; }, v);
  }

  // Positive eigenpairs lo..hi counted from the first positive one, L2-normalized.
  EigenSystem positive_pairs(int count) const {
    const int lo = first_positive_;
    const int hi = std::min<int>(static_cast<int>(f_.dim()) - 1, lo + count - 1);
    require(lo <= hi, "MeanFieldSpectrum: no positive eigenvalues");
    EigenSystem es = f_.eigenpairs(lo, hi);
    es.vectors /= std::sqrt(lat_->cell_volume());
    return es;
  }

 private:
  LatticePtr lat_;
  double c_;
  SpectralFactorization f_;
  int first_positive_ = 0;
  double min_abs_ = 0.0;
};

inline SpinorField positive_projector(const System& sys, const DensityMatrix& g, double c, const SpinorField& psi,
                                      Sign sign) {
  require(psi.components() == 4, "positive_projector: psi must be a 4-spinor");
  MeanFieldSpectrum spec(sys, g, c);
  return SpinorField(psi.lattice_ptr(), 4, spec.project(psi.values(), sign).col(0));
}

// Dense P^{+-}_{c,gamma} (4M x 4M).
inline Eigen::MatrixXcd positive_projector_matrix(const System& sys, const DensityMatrix& g, double c, Sign sign) {
  MeanFieldSpectrum spec(sys, g, c);
  const Eigen::Index d = 4 * static_cast<Eigen::Index>(sys.lattice().size());
  return spec.project(Eigen::MatrixXcd::Identity(d, d), sign);
}

// P gamma P for P = P^{sign} of `spec`; rank may drop.
inline DensityMatrix sandwich(const MeanFieldSpectrum& spec, const DensityMatrix& g, Sign sign) {
  if (g.rank() == 0) return g;
  const Eigen::MatrixXcd b = spec.project(g.orbitals(), sign);
  DensityMatrix out =
      compress(g.lattice_ptr(), 4, b, g.occupations().cast<cplx>().asDiagonal().toDenseMatrix(), 1e-13, 1e-12);
  return out;
}

// Lambda^{sign}_c gamma Lambda^{sign}_c with the free projectors.
inline DensityMatrix free_sandwich(const DensityMatrix& g, double c, Sign sign) {
  require(g.components() == 4, "free_sandwich: gamma must be 4-component");
  if (g.rank() == 0) return g;
  Eigen::MatrixXcd b(g.dim(), g.rank());
  for (int n = 0; n < g.rank(); ++n) b.col(n) = project_free(g.orbital(n), c, sign).values();
  return compress(g.lattice_ptr(), 4, b, g.occupations().cast<cplx>().asDiagonal().toDenseMatrix(), 1e-13, 1e-12);
}

// T_c(gamma) = P^+_{c,gamma} gamma P^+_{c,gamma}.
inline DensityMatrix tc_map(const System& sys, const DensityMatrix& g, double c) {
  require(g.components() == 4, "tc_map: gamma must be 4-component");
  const DensityMatrix t = sandwich(MeanFieldSpectrum(sys, g, c), g, Sign::Plus);
  Eigen::VectorXd occ = t.occupations();
  for (int i = 0; i < occ.size(); ++i) occ[i] = std::clamp(occ[i], 0.0, 1.0);
  return DensityMatrix(t.lattice_ptr(), 4, t.orbitals(), occ);
}

inline double xc_distance(const DensityMatrix& a, const DensityMatrix& b, double c) {
  return matrix_norm(difference(a, b), XcNorm{c});
}

inline double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return difference(a, b).occupations().norm();
}

struct DfGroundState {
  DensityMatrix gamma;
  EnergyReport report;                  // eigenvalues stored shifted by -c^2
  Eigen::VectorXd orbital_eigenvalues;  // lambda_n^c (unshifted), aligned with gamma's orbitals
  double fermi_unshifted = 0.0;         // nu_c
  double projector_residual = std::numeric_limits<double>::quiet_NaN();
  int states_near_cut = 0;
  ScfTrace trace;
};

struct DfOptions {
  std::optional<DensityMatrix> initial;  // warm start; the free-particle lowest states otherwise
  bool check_projector = true;
};

inline DfGroundState solve_df(const System& sys, const ScfSettings& settings, const DfOptions& opt = {}) {
  const ModelParams& p = sys.params;
  const double c = p.c, c2 = c * c;
  require(p.q >= 1.0, "solve_df: q must be at least 1");
  require(p.kappa() < 1.0, "solve_df: kappa_c must be below 1");
  const int nstates = detail::states_wanted(p.q, settings.extra_states, 2 * static_cast<Eigen::Index>(sys.lattice().size()));
  const double lo = -c2, hi = 1e-12 * c2;  // window (0, c^2] after the shift; the free k = 0 state sits on c^2

  auto fill = [&](const DensityMatrix& g) {
    const MeanFieldSpectrum spec(sys, g, c);
    EigenSystem es = spec.positive_pairs(nstates);
    FillStep st;
    st.eigenvalues = es.values.array() - c2;
    st.fill = aufbau_fill(st.eigenvalues, es.vectors, p.q, lo, hi, sys.lattice_ptr(), 4);
    return st;
  };
  DensityMatrix g0;
  if (opt.initial) {
    g0 = *opt.initial;
    require(g0.components() == 4 && g0.lattice_ptr() == sys.lattice_ptr(), "solve_df: bad initial state");
  } else {
    const DensityMatrix empty(sys.lattice_ptr(), 4);
    g0 = detail::lowest_states(sys.lattice_ptr(), 4, MeanFieldSpectrum(sys, empty, c).positive_pairs(nstates).vectors, p.q);
  }
  auto energy = [&](const DensityMatrix& g) { return df_energy(sys, g, c).total; };
  ScfOutcome o = run_scf(g0, energy, fill, settings);

  DfGroundState res;
  res.gamma = o.gamma;
  res.orbital_eigenvalues = detail::eigenvalues_of_occupied(o.last).array() + c2;
  res.report = df_energy(sys, o.gamma, c);
  res.report.eigenvalues = o.last.eigenvalues;
  res.report.fermi = o.last.fill.fermi;
  res.fermi_unshifted = o.last.fill.fermi + c2;
  res.report.fermi_gap = o.last.fill.gap;
  res.report.delta_mass = o.last.fill.delta_mass;
  res.report.iterations = o.iterations;
  res.report.converged = o.converged;
  for (int i = 0; i < o.last.eigenvalues.size(); ++i)
    if (std::abs(o.last.eigenvalues[i]) <= 1e-6 * c2) ++res.states_near_cut;
  if (res.states_near_cut > 0) res.report.flags.push_back("eigenvalues within 1e-6 c^2 of the c^2 cut");
  if (!p.assumption_1()) res.report.flags.push_back("assumption on c (kappa_c, R_c^DF < 1/2a_c) not met");
  for (const auto& w : sys.potential.warnings) res.report.flags.push_back(w);
  if (!o.converged) res.report.flags.push_back("SCF did not converge within max_iter");
  if (opt.check_projector) {
    const MeanFieldSpectrum spec(sys, o.gamma, c);
    res.projector_residual = frobenius_distance(sandwich(spec, o.gamma, Sign::Plus), o.gamma);
    if (res.projector_residual > 10.0 * settings.tol_density)
      res.report.flags.push_back("self-consistency P+ gamma P+ = gamma violated beyond 10 tol_density");
  }
  res.trace = std::move(o.trace);
  return res;
}

// --------------------------------------------------------------- retraction

struct RetractionTrace {
  int iterations = 0;               // T_c applications after the first
  std::vector<double> step_norms;   // ||T^{n+1} - T^n||_{X_c}
  std::vector<double> ratios;
  double L_c = 0.0;
  double A_c = 0.0;
  double R = 0.0;
  double final_residual = 0.0;      // last step norm / c^2
  bool converged = false;
  bool non_contraction = false;
};

// Iterates T_c until ||T^{n+1} - T^n||_{X_c} <= tol c^2. No contraction
// hypothesis is checked here; L_c, A_c and R are left at zero.
inline std::pair<DensityMatrix, RetractionTrace> iterate_tc(const System& sys, const DensityMatrix& g, double c, double tol,
                                                            int max_iter) {
  RetractionTrace tr;
  const double c2 = c * c;
  DensityMatrix cur = g;
  DensityMatrix next = tc_map(sys, cur, c);
  double d = xc_distance(next, cur, c);
  tr.step_norms.push_back(d);
  int bad = 0;
  while (d > tol * c2 && tr.iterations < max_iter) {
    cur = std::move(next);
    next = tc_map(sys, cur, c);
    const double dn = xc_distance(next, cur, c);
    const double ratio = d > 0.0 ? dn / d : 0.0;
    tr.step_norms.push_back(dn);
    tr.ratios.push_back(ratio);
    ++tr.iterations;
    d = dn;
    bad = ratio > 1.0 ? bad + 1 : 0;
    if (bad >= 3) {
      tr.non_contraction = true;
      break;
    }
  }
  tr.final_residual = d / c2;
  tr.converged = d <= tol * c2;
  return {std::move(next), std::move(tr)};
}

// theta_c(gamma) = lim T_c^n(gamma), only inside the contraction regime 2 a_c R < 1.
inline std::pair<DensityMatrix, RetractionTrace> retract_theta(const System& sys, const DensityMatrix& g, double c,
                                                               double R, double tol, int max_iter) {
  ModelParams p = sys.params;
  p.c = c;
  require(p.kappa() < 1.0, "retract_theta: kappa_c must be below 1");
  if (!(2.0 * p.a_c() * R < 1.0))
    throw InvalidArgument("retract_theta: 2 a_c R = " + std::to_string(2.0 * p.a_c() * R) +
                          " >= 1, outside the contraction hypothesis of the retraction lemma");
  auto out = iterate_tc(sys, g, c, tol, max_iter);
  out.second.R = R;
  out.second.L_c = p.L_c(R);
  out.second.A_c = p.A_c(R);
  return out;
}

struct Admissibility {
  double trace_term = 0.0;     // (1/c) || gamma |D|^{1/2} ||_{S1}
  double residual_term = 0.0;  // (A_c/c^2) || T_c(gamma) - gamma ||_{X_c}
  double A_c = 0.0;
  double L_c = 0.0;
  bool member = false;
  double tc_distance = 0.0;    // || T_c(gamma) - gamma ||_{X_c}
  double negative_part = 0.0;  // || P^- gamma P^- ||_{X_c}
  double error_bound = std::numeric_limits<double>::quiet_NaN();  // bound on |E_c - calE_c|, when L_c < 1
  double R0 = std::numeric_limits<double>::quiet_NaN();
};

// || gamma |D|^{1/2} ||_{S1}: singular values are sqrt(eig(L G L)), G = <u_m, |D| u_n>.
inline double trace_abs_dirac_half(const DensityMatrix& g, double c) {
  if (g.rank() == 0) return 0.0;
  Eigen::MatrixXcd du(g.dim(), g.rank());
  for (int n = 0; n < g.rank(); ++n) du.col(n) = abs_dirac_power(g.orbital(n), c, 1.0).values();
  const Eigen::MatrixXcd gm = g.lattice().cell_volume() * g.orbitals().adjoint() * du;
  const Eigen::MatrixXcd h = g.occupations().asDiagonal() * gm * g.occupations().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()));
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

// x2_norm_hf < 0 skips R0.
inline Admissibility admissibility_check(const System& sys, const DensityMatrix& g, double c, double R,
                                         double x2_norm_hf = -1.0) {
  ModelParams p = sys.params;
  p.c = c;
  require(p.kappa() < 1.0, "admissibility_check: kappa_c must be below 1");
  Admissibility a;
  a.A_c = p.A_c(R);
  a.L_c = p.L_c(R);
  a.trace_term = trace_abs_dirac_half(g, c) / c;
  const MeanFieldSpectrum spec(sys, g, c);
  DensityMatrix t = sandwich(spec, g, Sign::Plus);
  a.tc_distance = xc_distance(t, g, c);
  a.residual_term = a.A_c / (c * c) * a.tc_distance;
  a.member = 2.0 * p.a_c() * R < 1.0 && a.trace_term + a.residual_term < R;
  a.negative_part = matrix_norm(sandwich(spec, g, Sign::Minus), XcNorm{c});
  if (a.L_c < 1.0) {
    const double k = p.kappa(), l0 = p.lambda0();
    const double cst = 5.0 * std::numbers::pi * std::numbers::pi /
                       (4.0 * (1.0 - k) * (1.0 - k) * std::pow(l0, 1.5) * (1.0 - a.L_c) * (1.0 - a.L_c));
    a.error_bound = cst * (3.0 * R / c + 3.0 * p.q / c + 1.0) / (c * c * c) * a.tc_distance * a.tc_distance +
                    3.0 * a.negative_part;
  }
  if (x2_norm_hf >= 0.0) a.R0 = r0_bound(p.q, p.nuclear.z, x2_norm_hf);
  return a;
}

}  // namespace dfhf
