#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "operators.hpp"

namespace dfhf {

// gamma = sum_n lambda_n |u_n><u_n| with L2-orthonormal orbitals stored as
// the columns of `orbitals` (grid values, component-blocked).
class DensityMatrix {
 public:
  DensityMatrix() = default;

  DensityMatrix(LatticePtr lat, int components) : lat_(std::move(lat)), comps_(components) {
    require(comps_ == 2 || comps_ == 4, "DensityMatrix: components must be 2 or 4");
    orbitals_.resize(static_cast<Eigen::Index>(comps_) * lat_->size(), 0);
  }

  DensityMatrix(LatticePtr lat, int components, Eigen::MatrixXcd orbitals, Eigen::VectorXd occupations)
      : lat_(std::move(lat)), comps_(components), orbitals_(std::move(orbitals)), occ_(std::move(occupations)) {
    require(comps_ == 2 || comps_ == 4, "DensityMatrix: components must be 2 or 4");
    require(orbitals_.rows() == static_cast<Eigen::Index>(comps_) * lat_->size(),
            "DensityMatrix: orbital length does not match components * M");
    require(orbitals_.cols() == occ_.size(), "DensityMatrix: one occupation per orbital");
  }

  static DensityMatrix from_fields(const std::vector<SpinorField>& orbitals, const Eigen::VectorXd& occ) {
    require(!orbitals.empty(), "DensityMatrix::from_fields: no orbitals");
    Eigen::MatrixXcd u(orbitals.front().dim(), static_cast<Eigen::Index>(orbitals.size()));
    for (size_t n = 0; n < orbitals.size(); ++n) {
      orbitals.front().check_same(orbitals[n]);
      u.col(static_cast<Eigen::Index>(n)) = orbitals[n].values();
    }
    return DensityMatrix(orbitals.front().lattice_ptr(), orbitals.front().components(), std::move(u), occ);
  }

  const Lattice& lattice() const { return *lat_; }
  const LatticePtr& lattice_ptr() const { return lat_; }
  int components() const { return comps_; }
  int rank() const { return static_cast<int>(occ_.size()); }
  Eigen::Index dim() const { return orbitals_.rows(); }
  const Eigen::MatrixXcd& orbitals() const { return orbitals_; }
  const Eigen::VectorXd& occupations() const { return occ_; }
  double trace() const { return occ_.sum(); }

  SpinorField orbital(int n) const { return SpinorField(lat_, comps_, orbitals_.col(n)); }

  // L2 Gram matrix of the orbitals.
  Eigen::MatrixXcd gram() const { return lat_->cell_volume() * orbitals_.adjoint() * orbitals_; }

  // gamma acting on grid-value vectors: dV * U diag(lambda) U^*.
  Eigen::MatrixXcd dense() const {
    return lat_->cell_volume() * orbitals_ * occ_.asDiagonal() * orbitals_.adjoint();
  }

  // Empty string when the Gamma_q constraints hold.
  std::string invariant_violation(double q, double tol = 1e-10) const {
    if (rank() > 0 && (gram() - Eigen::MatrixXcd::Identity(rank(), rank())).cwiseAbs().maxCoeff() > tol)
      return "orbitals are not orthonormal";
    for (int n = 0; n < rank(); ++n)
      if (occ_[n] < -tol || occ_[n] > 1.0 + tol) return "occupation outside [0, 1]";
    if (trace() > q + 1e-9) return "trace exceeds q";
    return {};
  }

 private:
  LatticePtr lat_;
  int comps_ = 0;
  Eigen::MatrixXcd orbitals_;
  Eigen::VectorXd occ_;
};

// Spectral form of the finite-rank Hermitian operator B C B^* (L2 adjoint),
// where B holds arbitrary grid-value columns and C is Hermitian. Directions
// whose Gram eigenvalue is below gram_tol * max, and eigenvalues with
// |mu| <= drop_tol, are discarded. Eigenvalues may be negative.
inline DensityMatrix compress(const LatticePtr& lat, int comps, const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& c,
                              double drop_tol = 1e-13, double gram_tol = 1e-12) {
  if (b.cols() == 0) return DensityMatrix(lat, comps);
  const Eigen::MatrixXcd g = lat->cell_volume() * b.adjoint() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ge(0.5 * (g + g.adjoint()));
  const double gmax = std::max(ge.eigenvalues().maxCoeff(), 0.0);
  std::vector<int> keep;
  for (int i = 0; i < g.rows(); ++i)
    if (gmax > 0.0 && ge.eigenvalues()[i] > gram_tol * gmax) keep.push_back(i);
  if (keep.empty()) return DensityMatrix(lat, comps);
  const int r = static_cast<int>(keep.size());
  Eigen::MatrixXcd vk(g.rows(), r);
  Eigen::VectorXd sq(r);
  for (int j = 0; j < r; ++j) {
    vk.col(j) = ge.eigenvectors().col(keep[j]);
    sq[j] = std::sqrt(ge.eigenvalues()[keep[j]]);
  }
  const Eigen::MatrixXcd q = b * vk * sq.cwiseInverse().asDiagonal();
  Eigen::MatrixXcd h = sq.asDiagonal() * vk.adjoint() * c * vk * sq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> he(0.5 * (h + h.adjoint()));
  std::vector<int> occ_idx;
  // Descending order: the largest occupations first.
  for (int i = r - 1; i >= 0; --i)
    if (std::abs(he.eigenvalues()[i]) > drop_tol) occ_idx.push_back(i);
  Eigen::MatrixXcd u(b.rows(), static_cast<Eigen::Index>(occ_idx.size()));
  Eigen::VectorXd mu(static_cast<Eigen::Index>(occ_idx.size()));
  for (size_t j = 0; j < occ_idx.size(); ++j) {
    u.col(static_cast<Eigen::Index>(j)) = q * he.eigenvectors().col(occ_idx[j]);
    mu[static_cast<Eigen::Index>(j)] = he.eigenvalues()[occ_idx[j]];
  }
  return DensityMatrix(lat, comps, std::move(u), std::move(mu));
}

// (1 - t) a + t b, re-diagonalized.
inline DensityMatrix mix(const DensityMatrix& a, const DensityMatrix& b, double t) {
  require(a.lattice_ptr() == b.lattice_ptr() && a.components() == b.components(), "mix: incompatible states");
  Eigen::MatrixXcd basis(a.dim(), a.rank() + b.rank());
  basis << a.orbitals(), b.orbitals();
  Eigen::VectorXd w(a.rank() + b.rank());
  w << (1.0 - t) * a.occupations(), t * b.occupations();
  return compress(a.lattice_ptr(), a.components(), basis, w.cast<cplx>().asDiagonal().toDenseMatrix());
}

// a - b as a signed finite-rank operator.
inline DensityMatrix difference(const DensityMatrix& a, const DensityMatrix& b) {
  require(a.lattice_ptr() == b.lattice_ptr() && a.components() == b.components(), "difference: incompatible states");
  Eigen::MatrixXcd basis(a.dim(), a.rank() + b.rank());
  basis << a.orbitals(), b.orbitals();
  Eigen::VectorXd w(a.rank() + b.rank());
  w << a.occupations(), -b.occupations();
  return compress(a.lattice_ptr(), a.components(), basis, w.cast<cplx>().asDiagonal().toDenseMatrix(), 0.0);
}

inline RealField one_particle_density(const DensityMatrix& g) {
  const int m = g.lattice().size();
  RealField rho = RealField::Zero(m);
  for (int n = 0; n < g.rank(); ++n)
    for (int a = 0; a < g.components(); ++a)
      rho += g.occupations()[n] * g.orbitals().col(n).segment(static_cast<Eigen::Index>(a) * m, m).cwiseAbs2();
  return rho;
}

// ---------------------------------------------------------------- norms

struct TraceNorm {};
struct SchattenNorm {
  double p;
};
struct XNorm {
  double s;
};
struct XcNorm {
  double c;
};
using NormKind = std::variant<TraceNorm, SchattenNorm, XNorm, XcNorm>;

// Trace norm of A gamma A for the Hermitian multiplier A given by `symbol`.
template <class Symbol>
double sandwiched_trace_norm(const DensityMatrix& g, Symbol&& symbol) {
  if (g.rank() == 0) return 0.0;
  Eigen::MatrixXcd b(g.dim(), g.rank());
  const Multiplier mult{std::forward<Symbol>(symbol)};
  for (int n = 0; n < g.rank(); ++n) b.col(n) = apply_symbol(mult, g.orbital(n)).values();
  const DensityMatrix s = compress(g.lattice_ptr(), g.components(), b,
                                   g.occupations().cast<cplx>().asDiagonal().toDenseMatrix(), 0.0);
  return s.occupations().cwiseAbs().sum();
}

inline double matrix_norm(const DensityMatrix& g, const NormKind& which) {
  return std::visit(
      [&](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, TraceNorm>) {
          return g.occupations().cwiseAbs().sum();
        } else if constexpr (std::is_same_v<T, SchattenNorm>) {
          require(w.p >= 1.0, "Schatten norm needs p >= 1");
          // Orbitals of a DensityMatrix are orthonormal, so occupations are its spectrum.
          return std::pow(g.occupations().cwiseAbs().array().pow(w.p).sum(), 1.0 / w.p);
        } else if constexpr (std::is_same_v<T, XNorm>) {
          const double s = w.s;
          return sandwiched_trace_norm(g, [s](const Vec3& k) {
            return std::pow(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2], 0.25 * s);
          });
        } else {
          const double c2 = w.c * w.c;
          return sandwiched_trace_norm(g, [c2](const Vec3& k) {
            return std::pow(c2 * c2 + c2 * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), 0.25);
          });
        }
      },
      which);
}

// --------------------------------------------------------------- aufbau

struct FillResult {
  DensityMatrix gamma;
  Eigen::VectorXd occupations;  // aligned with the input eigenvalues
  double fermi = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  double delta_mass = 0.0;      // occupation carried by a split Fermi level
  int last_index = -1;          // index of the highest (partially) occupied state
};

inline double default_degeneracy_tol(double nu) { return 1e-8 * std::max(1.0, std::abs(nu)); }

// Fills the lowest in-window states with occupation 1 until q is used up; a
// degenerate level straddling the budget shares the remainder equally.
// `orbitals` columns are L2-normalized eigenvectors (may be empty when only
// occupations are wanted). degeneracy_tol < 0 selects the default rule.
inline FillResult aufbau_fill(const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXcd& orbitals, double q,
                              double lo, double hi, const LatticePtr& lat = nullptr, int comps = 0,
                              double degeneracy_tol = -1.0) {
  require(q >= 0.0, "aufbau_fill: q must be nonnegative");
  require(lo < hi, "aufbau_fill: empty window");
  const int n = static_cast<int>(eigenvalues.size());
  for (int i = 1; i < n; ++i) require(eigenvalues[i] >= eigenvalues[i - 1], "aufbau_fill: eigenvalues not sorted");
  FillResult res;
  res.occupations = Eigen::VectorXd::Zero(n);
  std::vector<int> in_window;
  for (int i = 0; i < n; ++i)
    if (eigenvalues[i] > lo && eigenvalues[i] < hi) in_window.push_back(i);
  if (q > 0.0) {
    if (in_window.empty()) throw InvalidArgument("aufbau_fill: no eigenvalue inside the window");
    if (static_cast<double>(in_window.size()) < q - 1e-12)
      throw InvalidArgument("aufbau_fill: fewer in-window states than q");
  }

  double budget = q;
  size_t pos = 0;
  while (budget > 1e-12 && pos < in_window.size()) {
    const double level = eigenvalues[in_window[pos]];
    const double tol = degeneracy_tol >= 0.0 ? degeneracy_tol : default_degeneracy_tol(level);
    size_t end = pos;
    while (end < in_window.size() && eigenvalues[in_window[end]] - level <= tol) ++end;
    const double g = static_cast<double>(end - pos);
    const double each = budget >= g - 1e-12 ? 1.0 : budget / g;
    if (each < 1.0) res.delta_mass = budget;
    for (size_t j = pos; j < end; ++j) res.occupations[in_window[j]] = each;
    budget -= each * g;
    res.fermi = eigenvalues[in_window[end - 1]];
    res.last_index = in_window[end - 1];
    pos = end;
  }
  if (res.last_index >= 0 && res.last_index + 1 < n) res.gap = eigenvalues[res.last_index + 1] - res.fermi;

  if (lat) {
    std::vector<int> occ;
    for (int i = 0; i < n; ++i)
      if (res.occupations[i] > 0.0) occ.push_back(i);
    Eigen::MatrixXcd u(orbitals.rows(), static_cast<Eigen::Index>(occ.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(occ.size()));
    for (size_t j = 0; j < occ.size(); ++j) {
      u.col(static_cast<Eigen::Index>(j)) = orbitals.col(occ[j]);
      w[static_cast<Eigen::Index>(j)] = res.occupations[occ[j]];
    }
    res.gamma = DensityMatrix(lat, comps, std::move(u), std::move(w));
  }
  return res;
}

}  // namespace dfhf
