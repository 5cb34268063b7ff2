#pragma once

#include <cmath>
#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "errors.hpp"
#include "lattice.hpp"

namespace dfhf {

using RealField = Eigen::VectorXd;
using ComplexField = Eigen::VectorXcd;

// Fourier coefficients f_k with f(x) = sum_k f_k exp(i k.x).
inline ComplexField to_fourier(const Lattice& lat, const ComplexField& f) {
  ComplexField out(lat.size());
  lat.forward(f.data(), out.data());
  out /= static_cast<double>(lat.size());
  return out;
}

inline ComplexField from_fourier(const Lattice& lat, const ComplexField& fk) {
  ComplexField out(lat.size());
  lat.backward(fk.data(), out.data());
  return out;
}

// Applies the scalar Fourier multiplier symbol(mode index) to f.
template <class Symbol>
ComplexField apply_multiplier(const Lattice& lat, const ComplexField& f, Symbol&& symbol) {
  ComplexField fk = to_fourier(lat, f);
  for (int i = 0; i < lat.size(); ++i) fk[i] *= symbol(i);
  return from_fourier(lat, fk);
}

template <class Symbol>
RealField apply_multiplier_real(const Lattice& lat, const RealField& f, Symbol&& symbol) {
  return apply_multiplier(lat, f.cast<cplx>().eval(), std::forward<Symbol>(symbol)).real();
}

// Components stored block-wise: values[a*M + x].
class SpinorField {
 public:
  SpinorField() = default;

  SpinorField(LatticePtr lat, int components) : lat_(std::move(lat)), comps_(components) {
    check_components();
    values_ = ComplexField::Zero(static_cast<Eigen::Index>(comps_) * lat_->size());
  }

  SpinorField(LatticePtr lat, int components, ComplexField values)
      : lat_(std::move(lat)), comps_(components), values_(std::move(values)) {
    check_components();
    require(values_.size() == static_cast<Eigen::Index>(comps_) * lat_->size(),
            "SpinorField: value count does not match components * M");
  }

  int components() const { return comps_; }
  const Lattice& lattice() const { return *lat_; }
  const LatticePtr& lattice_ptr() const { return lat_; }
  Eigen::Index dim() const { return values_.size(); }

  ComplexField& values() { return values_; }
  const ComplexField& values() const { return values_; }

  auto component(int a) { return values_.segment(static_cast<Eigen::Index>(a) * lat_->size(), lat_->size()); }
  auto component(int a) const {
    return values_.segment(static_cast<Eigen::Index>(a) * lat_->size(), lat_->size());
  }

  bool finite() const { return values_.allFinite(); }

  SpinorField& operator+=(const SpinorField& o) {
    check_same(o);
    values_ += o.values_;
    return *this;
  }
  SpinorField& operator-=(const SpinorField& o) {
    check_same(o);
    values_ -= o.values_;
    return *this;
  }
  SpinorField& operator*=(cplx s) {
    values_ *= s;
    return *this;
  }

  void check_same(const SpinorField& o) const {
    if (lat_ != o.lat_) throw InvalidArgument("spinor fields live on different lattices");
    if (comps_ != o.comps_) throw InvalidArgument("spinor fields have different component counts");
  }

 private:
  void check_components() const {
    require(lat_ != nullptr, "SpinorField: null lattice");
    require(comps_ == 2 || comps_ == 4, "SpinorField: components must be 2 or 4");
  }

  LatticePtr lat_;
  int comps_ = 0;
  ComplexField values_;
};

inline SpinorField operator+(SpinorField a, const SpinorField& b) { return a += b; }
inline SpinorField operator-(SpinorField a, const SpinorField& b) { return a -= b; }
inline SpinorField operator*(cplx s, SpinorField a) { return a *= s; }

// L2 inner product, antilinear in the first slot.
inline cplx inner(const SpinorField& u, const SpinorField& v) {
  u.check_same(v);
  return u.lattice().cell_volume() * u.values().dot(v.values());
}

inline double norm(const SpinorField& u) {
  return std::sqrt(u.lattice().cell_volume()) * u.values().norm();
}

// exp(i k.x) eta for the mode index `mode`.
inline SpinorField plane_wave(const LatticePtr& lat, int mode, const Eigen::VectorXcd& eta) {
  const int comps = static_cast<int>(eta.size());
  SpinorField u(lat, comps);
  const Vec3 k = lat->wavevector(mode);
  for (int x = 0; x < lat->size(); ++x) {
    const Vec3 r = lat->position(x);
    const cplx phase = std::exp(cplx(0.0, k[0] * r[0] + k[1] * r[1] + k[2] * r[2]));
    for (int a = 0; a < comps; ++a) u.component(a)[x] = phase * eta[a];
  }
  return u;
}

// Pointwise C^N inner product u^dagger v as a complex scalar field.
inline ComplexField pointwise_inner(const SpinorField& u, const SpinorField& v) {
  u.check_same(v);
  ComplexField out = ComplexField::Zero(u.lattice().size());
  for (int a = 0; a < u.components(); ++a) out += u.component(a).conjugate().cwiseProduct(v.component(a));
  return out;
}

inline SpinorField multiply(const RealField& f, const SpinorField& u) {
  SpinorField out(u.lattice_ptr(), u.components());
  for (int a = 0; a < u.components(); ++a) out.component(a) = f.cwiseProduct(u.component(a));
  return out;
}

inline SpinorField multiply(const ComplexField& f, const SpinorField& u) {
  SpinorField out(u.lattice_ptr(), u.components());
  for (int a = 0; a < u.components(); ++a) out.component(a) = f.cwiseProduct(u.component(a));
  return out;
}

}  // namespace dfhf
