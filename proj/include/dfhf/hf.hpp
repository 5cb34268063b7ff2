#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "dense.hpp"
#include "dense_ops.hpp"
#include "lobpcg.hpp"
#include "scf.hpp"

namespace dfhf {

// Applies H_0 - V + W_1 - W_2 for a fixed gamma; the direct potential is
// formed once.
class FockApplier {
 public:
  FockApplier(const System& sys, const DensityMatrix& g)
      : sys_(sys), g_(g), local_(-sys.potential.v + direct_potential(g)) {
    require(g.components() == 2, "FockApplier: HF acts on 2-spinors");
    require(g.lattice_ptr() == sys.lattice_ptr(), "FockApplier: lattice mismatch");
  }

  SpinorField operator()(const SpinorField& psi) const {
    require(psi.components() == 2, "hf_apply_fock: psi must be a 2-spinor");
    if (psi.lattice_ptr() != sys_.lattice_ptr()) throw InvalidArgument("hf_apply_fock: lattice mismatch");
    SpinorField out = apply_symbol(SchrodingerKinetic{}, psi);
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

  Eigen::MatrixXcd apply_block(const Eigen::MatrixXcd& x) const {
    Eigen::MatrixXcd y(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      y.col(j) = (*this)(SpinorField(sys_.lattice_ptr(), 2, x.col(j))).values();
    return y;
  }

 private:
  const System& sys_;
  const DensityMatrix& g_;
  RealField local_;
};

inline SpinorField hf_apply_fock(const System& sys, const DensityMatrix& g, const SpinorField& psi) {
  return FockApplier(sys, g)(psi);
}

inline double kinetic_energy(const DensityMatrix& g) {
  double t = 0.0;
  for (int n = 0; n < g.rank(); ++n) {
    const SpinorField u = g.orbital(n);
    t += g.occupations()[n] * inner(u, apply_symbol(SchrodingerKinetic{}, u)).real();
  }
  return t;
}

inline EnergyReport hf_energy(const System& sys, const DensityMatrix& g) {
  require(g.components() == 2, "hf_energy: HF acts on 2-spinors");
  EnergyReport r;
  if (g.rank() == 0) return r;
  r.kinetic = kinetic_energy(g);
  r.nuclear_attraction = nuclear_attraction(sys, g);
  std::tie(r.hartree_direct, r.exchange) = two_body_energies(g);
  r.total = r.kinetic - r.nuclear_attraction + r.hartree_direct - r.exchange;
  return r;
}

struct HfResult {
  DensityMatrix gamma;
  Eigen::VectorXd orbital_eigenvalues;  // eigenvalue of each orbital of gamma
  EnergyReport report;
  ScfTrace trace;
};

namespace detail {

inline int states_wanted(double q, int extra, Eigen::Index dim) {
  return static_cast<int>(std::min<Eigen::Index>(dim, static_cast<Eigen::Index>(std::ceil(q - 1e-12)) + extra));
}

inline Eigen::VectorXd eigenvalues_of_occupied(const FillStep& st) {
  std::vector<double> v;
  for (int i = 0; i < st.fill.occupations.size(); ++i)
    if (st.fill.occupations[i] > 0.0) v.push_back(st.eigenvalues[i]);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Lowest plane waves (both spin directions) as a starting block.
inline Eigen::MatrixXcd plane_wave_block(const LatticePtr& lat, int comps, int count) {
  std::vector<int> modes(lat->size());
  for (int i = 0; i < lat->size(); ++i) modes[i] = i;
  std::stable_sort(modes.begin(), modes.end(), [&](int a, int b) { return lat->k2()[a] < lat->k2()[b]; });
  Eigen::MatrixXcd x(static_cast<Eigen::Index>(comps) * lat->size(), count);
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXcd eta = Eigen::VectorXcd::Zero(comps);
    eta[j % comps] = 1.0;
    x.col(j) = plane_wave(lat, modes[j / comps], eta).values();
  }
  return x;
}

// Integer occupation of the lowest ceil(q) states without degeneracy splitting.
inline DensityMatrix lowest_states(const LatticePtr& lat, int comps, const Eigen::MatrixXcd& vecs, double q) {
  const int n = static_cast<int>(std::ceil(q - 1e-12));
  Eigen::VectorXd occ = Eigen::VectorXd::Ones(n);
  if (n > 0) occ[n - 1] = q - (n - 1);
  return DensityMatrix(lat, comps, vecs.leftCols(n), occ);
}

}  // namespace detail

// Eigen-solver for the HF mean-field operator: dense below the configured
// dimension, block LOBPCG (warm-started) above it.
class HfEigenSolver {
 public:
  HfEigenSolver(const System& sys, const ScfSettings& s) : sys_(sys), s_(s) {
    dim_ = 2 * static_cast<Eigen::Index>(sys.lattice().size());
    nstates_ = detail::states_wanted(sys.params.q, s.extra_states, dim_);
    iterative_ = s.eigen_method == EigenMethod::Iterative ||
                 (s.eigen_method == EigenMethod::Auto && dim_ > s.dense_limit);
  }

  // Ascending eigenpairs with L2-normalized eigenvectors.
  EigenSystem solve(const DensityMatrix& g) {
    const double scale = 1.0 / std::sqrt(sys_.lattice().cell_volume());
    if (!iterative_) {
      SpectralFactorization f(dense_ops::fock_matrix(sys_, g));
      EigenSystem es = f.eigenpairs(0, nstates_ - 1);
      es.vectors *= scale;
      return es;
    }
    const FockApplier op(sys_, g);
    const Lattice& lat = sys_.lattice();
    auto precond = [&lat](const Eigen::MatrixXcd& r, const Eigen::VectorXd&) {
      Eigen::MatrixXcd out(r.rows(), r.cols());
      const int m = lat.size();
      for (Eigen::Index j = 0; j < r.cols(); ++j)
        for (int a = 0; a < 2; ++a)
          out.col(j).segment(a * m, m) =
              apply_multiplier(lat, r.col(j).segment(a * m, m).eval(), [&lat](int i) { return 1.0 / (1.0 + 0.5 * lat.k2()[i]); });
      return out;
    };
    if (warm_.cols() != nstates_) warm_ = detail::plane_wave_block(sys_.lattice_ptr(), 2, nstates_);
    LobpcgResult lr = lobpcg([&op](const Eigen::MatrixXcd& x) { return op.apply_block(x); }, precond, warm_, 1e-10, 1000);
    if (!lr.converged) throw Error("HF iterative eigensolver did not converge (residual " + std::to_string(lr.max_residual) + ")");
    warm_ = lr.vectors;
    return {lr.values, lr.vectors * scale};
  }

  bool iterative() const { return iterative_; }

 private:
  const System& sys_;
  ScfSettings s_;
  Eigen::Index dim_ = 0;
  int nstates_ = 0;
  bool iterative_ = false;
  Eigen::MatrixXcd warm_;
};

inline HfResult solve_hf(const System& sys, const ScfSettings& settings) {
  const ModelParams& p = sys.params;
  require(p.q >= 1.0, "solve_hf: q must be at least 1");
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(sys.lattice().size());
  if (p.q > static_cast<double>(dim)) throw InvalidArgument("solve_hf: q exceeds the discrete dimension");

  HfEigenSolver solver(sys, settings);
  const DensityMatrix empty(sys.lattice_ptr(), 2);
  const DensityMatrix g0 = detail::lowest_states(sys.lattice_ptr(), 2, solver.solve(empty).vectors, p.q);

  auto energy = [&](const DensityMatrix& g) { return hf_energy(sys, g).total; };
  auto fill = [&](const DensityMatrix& g) {
    EigenSystem es = solver.solve(g);
    FillStep st;
    st.eigenvalues = es.values;
    st.fill = aufbau_fill(es.values, es.vectors, p.q, -std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(), sys.lattice_ptr(), 2);
    return st;
  };
  ScfOutcome o = run_scf(g0, energy, fill, settings);

  HfResult res;
  res.gamma = o.gamma;
  res.orbital_eigenvalues = detail::eigenvalues_of_occupied(o.last);
  res.report = hf_energy(sys, o.gamma);
  res.report.eigenvalues = o.last.eigenvalues;
  res.report.fermi = o.last.fill.fermi;
  res.report.fermi_gap = o.last.fill.gap;
  res.report.delta_mass = o.last.fill.delta_mass;
  res.report.iterations = o.iterations;
  res.report.converged = o.converged;
  if (!p.hf_existence_flag()) res.report.flags.push_back("q > z - 1: outside the HF existence hypothesis");
  for (const auto& w : sys.potential.warnings) res.report.flags.push_back(w);
  if (!o.converged) res.report.flags.push_back("SCF did not converge within max_iter");
  res.trace = std::move(o.trace);
  return res;
}

}  // namespace dfhf
