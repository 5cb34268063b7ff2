#pragma once

#include <cmath>
#include <functional>
#include <type_traits>
#include <variant>
#include <vector>

#include "spinor_field.hpp"

namespace dfhf {

struct Dirac {
  double c;
};
struct AbsDirac {
  double c;
};
struct SchrodingerKinetic {};
struct PauliGradient {};
struct SobolevPower {
  double s;
};
// Scalar symbol applied to every component.
struct Multiplier {
  std::function<double(const Vec3&)> symbol;
};

using OperatorKind = std::variant<Dirac, AbsDirac, SchrodingerKinetic, PauliGradient, SobolevPower, Multiplier>;

enum class Sign { Plus, Minus };
enum class SpinorMap { S_c, K_L, K_S, embed_L };

namespace detail {

inline std::vector<ComplexField> fourier_components(const SpinorField& u) {
  std::vector<ComplexField> out;
  out.reserve(u.components());
  for (int a = 0; a < u.components(); ++a) out.push_back(to_fourier(u.lattice(), u.component(a)));
  return out;
}

inline SpinorField from_fourier_components(const LatticePtr& lat, const std::vector<ComplexField>& hat) {
  SpinorField out(lat, static_cast<int>(hat.size()));
  for (int a = 0; a < static_cast<int>(hat.size()); ++a) out.component(a) = from_fourier(*lat, hat[a]);
  return out;
}

// (sigma.k) applied to the 2-vector (a, b).
inline void sigma_dot(const Vec3& k, cplx a, cplx b, cplx& oa, cplx& ob) {
  oa = k[2] * a + cplx(k[0], -k[1]) * b;
  ob = cplx(k[0], k[1]) * a - k[2] * b;
}

inline void check_input(const SpinorField& u) {
  if (!u.finite()) throw InvalidArgument("apply_symbol: non-finite input field");
}

}  // namespace detail

// Per-mode multiplier. Dirac applies c alpha.k + c^2 beta; PauliGradient
// applies sigma.k to each 2-component block.
inline SpinorField apply_symbol(const OperatorKind& kind, const SpinorField& u) {
  detail::check_input(u);
  const Lattice& lat = u.lattice();
  const int m = lat.size();
  auto hat = detail::fourier_components(u);

  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          require(u.components() == 4, "Dirac acts on 4-spinors");
          const double c = op.c, c2 = op.c * op.c;
          for (int i = 0; i < m; ++i) {
            const Vec3 k = lat.wavevector(i);
            cplx sl0, sl1, ls0, ls1;
            detail::sigma_dot(k, hat[2][i], hat[3][i], sl0, sl1);
            detail::sigma_dot(k, hat[0][i], hat[1][i], ls0, ls1);
            const cplx l0 = hat[0][i], l1 = hat[1][i];
            hat[0][i] = c2 * l0 + c * sl0;
            hat[1][i] = c2 * l1 + c * sl1;
            hat[2][i] = c * ls0 - c2 * hat[2][i];
            hat[3][i] = c * ls1 - c2 * hat[3][i];
          }
        } else if constexpr (std::is_same_v<T, AbsDirac>) {
          require(u.components() == 4, "AbsDirac acts on 4-spinors");
          const double c2 = op.c * op.c;
          for (int i = 0; i < m; ++i) {
            const double s = std::sqrt(c2 * c2 + c2 * lat.k2()[i]);
            for (auto& h : hat) h[i] *= s;
          }
        } else if constexpr (std::is_same_v<T, SchrodingerKinetic>) {
          for (int i = 0; i < m; ++i)
            for (auto& h : hat) h[i] *= 0.5 * lat.k2()[i];
        } else if constexpr (std::is_same_v<T, PauliGradient>) {
          for (int blk = 0; blk < u.components(); blk += 2)
            for (int i = 0; i < m; ++i) {
              cplx a, b;
              detail::sigma_dot(lat.wavevector(i), hat[blk][i], hat[blk + 1][i], a, b);
              hat[blk][i] = a;
              hat[blk + 1][i] = b;
            }
        } else if constexpr (std::is_same_v<T, SobolevPower>) {
          for (int i = 0; i < m; ++i) {
            const double s = std::pow(1.0 + lat.k2()[i], 0.5 * op.s);
            for (auto& h : hat) h[i] *= s;
          }
        } else {
          for (int i = 0; i < m; ++i) {
            const double s = op.symbol(lat.wavevector(i));
            for (auto& h : hat) h[i] *= s;
          }
        }
      },
      kind);
  return detail::from_fourier_components(u.lattice_ptr(), hat);
}

// Lambda^{+-} = 1/2 +- D/(2|D|), exact per mode.
inline SpinorField project_free(const SpinorField& u, double c, Sign sign) {
  require(u.components() == 4, "project_free acts on 4-spinors");
  require(c > 0.0, "project_free: c must be positive");
  detail::check_input(u);
  const Lattice& lat = u.lattice();
  auto hat = detail::fourier_components(u);
  const double c2 = c * c, sgn = sign == Sign::Plus ? 1.0 : -1.0;
  for (int i = 0; i < lat.size(); ++i) {
    const Vec3 k = lat.wavevector(i);
    const double inv = sgn * 0.5 / std::sqrt(c2 * c2 + c2 * lat.k2()[i]);
    cplx sl0, sl1, ls0, ls1;
    detail::sigma_dot(k, hat[2][i], hat[3][i], sl0, sl1);
    detail::sigma_dot(k, hat[0][i], hat[1][i], ls0, ls1);
    const cplx l0 = hat[0][i], l1 = hat[1][i], s0 = hat[2][i], s1 = hat[3][i];
    hat[0][i] = 0.5 * l0 + inv * (c2 * l0 + c * sl0);
    hat[1][i] = 0.5 * l1 + inv * (c2 * l1 + c * sl1);
    hat[2][i] = 0.5 * s0 + inv * (c * ls0 - c2 * s0);
    hat[3][i] = 0.5 * s1 + inv * (c * ls1 - c2 * s1);
  }
  return detail::from_fourier_components(u.lattice_ptr(), hat);
}

inline SpinorField large_block(const SpinorField& u) {
  require(u.components() == 4, "large_block takes a 4-spinor");
  return SpinorField(u.lattice_ptr(), 2, u.values().head(2 * u.lattice().size()));
}

inline SpinorField small_block(const SpinorField& u) {
  require(u.components() == 4, "small_block takes a 4-spinor");
  return SpinorField(u.lattice_ptr(), 2, u.values().tail(2 * u.lattice().size()));
}

inline SpinorField join_blocks(const SpinorField& large, const SpinorField& small) {
  large.check_same(small);
  require(large.components() == 2, "join_blocks takes 2-spinors");
  ComplexField v(2 * large.dim());
  v << large.values(), small.values();
  return SpinorField(large.lattice_ptr(), 4, std::move(v));
}

inline SpinorField spinor_map(SpinorMap kind, const SpinorField& u, double c) {
  switch (kind) {
    case SpinorMap::S_c: {
      require(u.components() == 2, "S_c takes a 2-spinor");
      require(c > 0.0, "S_c: c must be positive");
      SpinorField lu = apply_symbol(PauliGradient{}, u);
      lu *= 1.0 / (2.0 * c);
      return join_blocks(u, lu);
    }
    case SpinorMap::embed_L: {
      require(u.components() == 2, "embed_L takes a 2-spinor");
      return join_blocks(u, SpinorField(u.lattice_ptr(), 2));
    }
    case SpinorMap::K_L: {
      require(u.components() == 4, "K_L takes a 4-spinor");
      SpinorField out = u;
      out.values().tail(2 * u.lattice().size()).setZero();
      return out;
    }
    case SpinorMap::K_S: {
      require(u.components() == 4, "K_S takes a 4-spinor");
      SpinorField out = u;
      out.values().head(2 * u.lattice().size()).setZero();
      return out;
    }
  }
  throw InvalidArgument("spinor_map: unknown kind");
}

// ||(1 + |k|^2)^{s/2} u_hat|| in L2 normalization.
inline double sobolev_norm(const SpinorField& u, double s) {
  const Lattice& lat = u.lattice();
  double acc = 0.0;
  for (int a = 0; a < u.components(); ++a) {
    const ComplexField h = to_fourier(lat, u.component(a));
    for (int i = 0; i < lat.size(); ++i) acc += std::pow(1.0 + lat.k2()[i], s) * std::norm(h[i]);
  }
  return std::sqrt(lat.volume() * acc);
}

// (c^4 + c^2|k|^2)^{p/2}, i.e. |D^c|^p, on fields of any component count.
inline SpinorField abs_dirac_power(const SpinorField& u, double c, double p) {
  const double c2 = c * c;
  return apply_symbol(Multiplier{[c2, p](const Vec3& k) {
                        return std::pow(c2 * c2 + c2 * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), 0.5 * p);
                      }},
                      u);
}

inline SpinorField laplacian(const SpinorField& u) {
  return apply_symbol(Multiplier{[](const Vec3& k) { return -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]); }}, u);
}

}  // namespace dfhf
