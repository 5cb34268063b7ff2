#pragma once

#include <algorithm>
#include <complex>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#include <lapacke.h>

#include "errors.hpp"

namespace dfhf {

inline constexpr int kDenseCap = 8192;

struct EigenSystem {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // Euclidean-orthonormal columns
};

// Largest |A_ij - conj(A_ji)|, relative to max(1, max|A_ij|).
inline double hermiticity_defect(const Eigen::MatrixXcd& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline void check_hermitian(const Eigen::MatrixXcd& a, double tol = 1e-10) {
  if (a.rows() != a.cols()) throw InvalidArgument("eigensolve: matrix is not square");
  const double defect = hermiticity_defect(a);
  if (defect > tol)
    throw NonHermitianError("eigensolve: operator is not Hermitian (defect " + std::to_string(defect) + ")");
}

inline void check_cap(Eigen::Index d, int cap) {
  if (d > cap)
    throw DimensionCapError("eigensolve: dimension " + std::to_string(d) + " exceeds cap " + std::to_string(cap));
}

inline void lapack_check(lapack_int info, const char* routine) {
  if (info != 0) throw Error(std::string(routine) + " failed with info " + std::to_string(info));
}

// Full Hermitian eigendecomposition (divide and conquer).
inline EigenSystem eigensolve_hermitian(Eigen::MatrixXcd a, int cap = kDenseCap) {
  check_cap(a.rows(), cap);
  check_hermitian(a);
  a = (0.5 * (a + a.adjoint())).eval();
  const lapack_int n = static_cast<lapack_int>(a.rows());
  EigenSystem es;
  es.values.resize(n);
  // zheev rather than zheevd: the divide-and-conquer driver in the system
  // LAPACK returns wrong vectors for n of a few hundred with split spectra.
  if (n > 0) lapack_check(LAPACKE_zheev(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, es.values.data()), "zheev");
  es.vectors = std::move(a);
  return es;
}

// Eigenpairs with ascending indices lo..hi (0-based, inclusive).
inline EigenSystem eigensolve_hermitian_range(Eigen::MatrixXcd a, int lo, int hi, int cap = kDenseCap) {
  check_cap(a.rows(), cap);
  check_hermitian(a);
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(0 <= lo && lo <= hi && hi < n, "eigensolve_hermitian_range: bad index range");
  a = (0.5 * (a + a.adjoint())).eval();
  lapack_int found = 0;
  Eigen::VectorXd w(n);
  Eigen::MatrixXcd z(n, hi - lo + 1);
  std::vector<lapack_int> support(2 * static_cast<size_t>(hi - lo + 1));
  lapack_check(LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, lo + 1, hi + 1, 0.0, &found,
                              w.data(), z.data(), n, support.data()),
               "zheevr");
  EigenSystem es;
  es.values = w.head(found);
  es.vectors = z.leftCols(found);
  return es;
}

// Builds the matrix of `op` column by column and diagonalizes it.
inline EigenSystem dense_eigensolve(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& op, int d,
                                    int cap = kDenseCap) {
  check_cap(d, cap);
  Eigen::MatrixXcd a(d, d);
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
  for (int j = 0; j < d; ++j) {
    e[j] = 1.0;
    a.col(j) = op(e);
    e[j] = 0.0;
  }
  return eigensolve_hermitian(std::move(a), cap);
}

// Tridiagonal reduction kept around so that spectral functions f(A) can be
// applied to a few vectors without forming all complex eigenvectors.
class SpectralFactorization {
 public:
  explicit SpectralFactorization(Eigen::MatrixXcd a, int cap = kDenseCap) : q_(std::move(a)) {
    check_cap(q_.rows(), cap);
    check_hermitian(q_);
    q_ = (0.5 * (q_ + q_.adjoint())).eval();
    n_ = static_cast<lapack_int>(q_.rows());
    d_.resize(n_);
    e_.resize(std::max<lapack_int>(n_, 1));
    tau_.resize(std::max<lapack_int>(n_ - 1, 1));
    if (n_ > 0) lapack_check(LAPACKE_zhetrd(LAPACK_COL_MAJOR, 'L', n_, q_.data(), n_, d_.data(), e_.data(), tau_.data()), "zhetrd");
    if (n_ > 0) e_[n_ - 1] = 0.0;
    values_ = d_;
    Eigen::VectorXd e = e_;
    if (n_ > 0) lapack_check(LAPACKE_dsterf(n_, values_.data(), e.data()), "dsterf");
  }

  Eigen::Index dim() const { return n_; }
  const Eigen::VectorXd& values() const { return values_; }

  // Eigenpairs lo..hi (0-based, inclusive): bisection plus inverse iteration.
  EigenSystem eigenpairs(int lo, int hi) const {
    require(0 <= lo && lo <= hi && hi < n_, "SpectralFactorization: bad index range");
    const lapack_int cnt = hi - lo + 1;
    Eigen::VectorXd w(n_);
    std::vector<lapack_int> block(n_), split(n_);
    lapack_int found = 0, nsplit = 0;
    lapack_check(LAPACKE_dstebz('I', 'B', n_, 0.0, 0.0, lo + 1, hi + 1, 0.0, d_.data(), e_.data(), &found, &nsplit,
                                w.data(), block.data(), split.data()),
                 "dstebz");
    require(found == cnt, "SpectralFactorization: bisection returned an unexpected count");
    Eigen::MatrixXd z(n_, cnt);
    std::vector<lapack_int> fail(cnt);
    lapack_check(LAPACKE_dstein(LAPACK_COL_MAJOR, n_, d_.data(), e_.data(), cnt, w.data(), block.data(), split.data(),
                                z.data(), n_, fail.data()),
                 "dstein");
    // dstein wants block order; restore ascending order afterwards.
    std::vector<int> order(cnt);
    for (int i = 0; i < cnt; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&w](int a, int b) { return w[a] < w[b]; });
    EigenSystem es;
    es.values.resize(cnt);
    es.vectors.resize(n_, cnt);
    for (int i = 0; i < cnt; ++i) {
      es.values[i] = w[order[i]];
      es.vectors.col(i) = z.col(order[i]).cast<std::complex<double>>();
    }
    apply_q(es.vectors, 'N');
    return es;
  }

  // f(A) v for each column v.
  template <class F>
  Eigen::MatrixXcd apply_function(F&& f, const Eigen::MatrixXcd& v) const {
    std::call_once(full_once_, [this] { compute_full(); });
    Eigen::MatrixXcd w = v;
    apply_q(w, 'C');
    Eigen::MatrixXd re = zfull_.transpose() * w.real();
    Eigen::MatrixXd im = zfull_.transpose() * w.imag();
    for (lapack_int i = 0; i < n_; ++i) {
      const double fi = f(values_full_[i]);
      re.row(i) *= fi;
      im.row(i) *= fi;
    }
    Eigen::MatrixXcd out(n_, v.cols());
    out.real() = zfull_ * re;
    out.imag() = zfull_ * im;
    apply_q(out, 'N');
    return out;
  }

 private:
  void apply_q(Eigen::MatrixXcd& c, char trans) const {
    if (n_ == 0 || c.cols() == 0) return;
    Eigen::MatrixXcd reflectors = q_;  // zunmtr only reads it, but takes a non-const pointer
    Eigen::VectorXcd tau = tau_;
    lapack_check(LAPACKE_zunmtr(LAPACK_COL_MAJOR, 'L', 'L', trans, n_, static_cast<lapack_int>(c.cols()),
                                reflectors.data(), n_, tau.data(), c.data(), n_),
                 "zunmtr");
  }

  void compute_full() const {
    values_full_ = d_;
    Eigen::VectorXd e = e_;
    zfull_.resize(n_, n_);
    // Implicit QL; the divide-and-conquer routines of the system LAPACK give
    // wrong vectors once n reaches a few hundred.
    lapack_check(LAPACKE_dsteqr(LAPACK_COL_MAJOR, 'I', n_, values_full_.data(), e.data(), zfull_.data(), n_), "dsteqr");
  }

  Eigen::MatrixXcd q_;
  lapack_int n_ = 0;
  Eigen::VectorXd d_, e_;
  Eigen::VectorXcd tau_;
  Eigen::VectorXd values_;
  mutable std::once_flag full_once_;
  mutable Eigen::VectorXd values_full_;
  mutable Eigen::MatrixXd zfull_;
};

}  // namespace dfhf
