#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "errors.hpp"

namespace dfhf {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

// Periodic cube [0, L)^3 sampled on n^3 points. Index of (i, j, l) is
// (i*n + j)*n + l. Wavevector of mode index i is (2pi/L)*m with
// m = i for i < n/2 and m = i - n otherwise, so the Nyquist row holds -n/2.
class Lattice {
 public:
  Lattice(int n, double box_length) : n_(n), box_(box_length) {
    if (n < 4 || n % 2 != 0) throw InvalidArgument("lattice: n_per_axis must be even and >= 4");
    if (!(box_length > 0.0)) throw InvalidArgument("lattice: box_length must be positive");
    m_ = n * n * n;
    const double dk = 2.0 * std::numbers::pi / box_;
    k_[0].resize(m_);
    k_[1].resize(m_);
    k_[2].resize(m_);
    k2_.resize(m_);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          const int idx = index(i, j, l);
          k_[0][idx] = dk * signed_mode(i);
          k_[1][idx] = dk * signed_mode(j);
          k_[2][idx] = dk * signed_mode(l);
          k2_[idx] = k_[0][idx] * k_[0][idx] + k_[1][idx] * k_[1][idx] + k_[2][idx] * k_[2][idx];
        }

    std::vector<cplx> a(m_), b(m_);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_3d(n, n, n, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv_ = fftw_plan_dft_3d(n, n, n, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  Lattice(const Lattice&) = delete;
  Lattice& operator=(const Lattice&) = delete;

  ~Lattice() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  int n() const { return n_; }
  int size() const { return m_; }
  double box_length() const { return box_; }
  double volume() const { return box_ * box_ * box_; }
  double cell_volume() const { return volume() / m_; }
  double spacing() const { return box_ / n_; }
  double k_spacing() const { return 2.0 * std::numbers::pi / box_; }

  int index(int i, int j, int l) const { return (i * n_ + j) * n_ + l; }

  int signed_mode(int i) const { return i < n_ / 2 ? i : i - n_; }

  const std::vector<double>& k(int axis) const { return k_[axis]; }
  const std::vector<double>& k2() const { return k2_; }
  Vec3 wavevector(int idx) const { return {k_[0][idx], k_[1][idx], k_[2][idx]}; }

  Vec3 position(int idx) const {
    const int l = idx % n_;
    const int j = (idx / n_) % n_;
    const int i = idx / (n_ * n_);
    const double h = spacing();
    return {i * h, j * h, l * h};
  }

  // Grid index of x_a - x_b (periodic).
  int difference_index(int a, int b) const {
    const int la = a % n_, ja = (a / n_) % n_, ia = a / (n_ * n_);
    const int lb = b % n_, jb = (b / n_) % n_, ib = b / (n_ * n_);
    return index((ia - ib + n_) % n_, (ja - jb + n_) % n_, (la - lb + n_) % n_);
  }

  // Unnormalized transforms; in and out must not alias.
  void forward(const cplx* in, cplx* out) const {
    fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }
  void backward(const cplx* in, cplx* out) const {
    fftw_execute_dft(inv_, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  int n_;
  double box_;
  int m_ = 0;
  std::array<std::vector<double>, 3> k_;
  std::vector<double> k2_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

using LatticePtr = std::shared_ptr<const Lattice>;

inline LatticePtr build_lattice(int n_per_axis, double box_length) {
  return std::make_shared<const Lattice>(n_per_axis, box_length);
}

}  // namespace dfhf
