#include <catch_amalgamated.hpp>

#include "dfhf/hf.hpp"
#include "dfhf/random.hpp"
#include "oracles.hpp"

using namespace dfhf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

System make_system(int n, double box, double z, double sigma, double q) {
  ModelParams p;
  p.lattice = build_lattice(n, box);
  p.nuclear = {z, sigma};
  p.q = q;
  return System(p);
}

// Closed-form HF energy and Fock action for unit-occupation orbitals, written
// directly in Fourier space.
struct HfOracle {
  const System& sys;

  std::vector<ComplexField> hat(const Eigen::VectorXcd& u) const {
    const Lattice& lat = sys.lattice();
    const int m = lat.size();
    return {to_fourier(lat, u.head(m)), to_fourier(lat, u.tail(m))};
  }

  ComplexField coulomb(const ComplexField& f) const {
    const Lattice& lat = sys.lattice();
    ComplexField fk = to_fourier(lat, f);
    for (int i = 0; i < lat.size(); ++i) fk[i] *= lat.k2()[i] > 0 ? 4.0 * std::numbers::pi / lat.k2()[i] : 0.0;
    return from_fourier(lat, fk);
  }

  Eigen::MatrixXcd fock(const Eigen::MatrixXcd& u) const {
    const Lattice& lat = sys.lattice();
    const int m = lat.size();
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(m);
    for (int n = 0; n < u.cols(); ++n) rho += u.col(n).head(m).cwiseAbs2() + u.col(n).tail(m).cwiseAbs2();
    const Eigen::VectorXd local = -sys.potential.v + coulomb(rho.cast<cplx>()).real();
    Eigen::MatrixXcd out(u.rows(), u.cols());
    for (int n = 0; n < u.cols(); ++n) {
      auto h = hat(u.col(n));
      for (auto& c : h)
        for (int i = 0; i < m; ++i) c[i] *= 0.5 * lat.k2()[i];
      out.col(n) << from_fourier(lat, h[0]), from_fourier(lat, h[1]);
      for (int a = 0; a < 2; ++a) out.col(n).segment(a * m, m) += local.cwiseProduct(u.col(n).segment(a * m, m));
      for (int k = 0; k < u.cols(); ++k) {
        const ComplexField pair = u.col(k).head(m).conjugate().cwiseProduct(u.col(n).head(m)) +
                                  u.col(k).tail(m).conjugate().cwiseProduct(u.col(n).tail(m));
        const ComplexField w = coulomb(pair);
        for (int a = 0; a < 2; ++a) out.col(n).segment(a * m, m) -= w.cwiseProduct(u.col(k).segment(a * m, m));
      }
    }
    return out;
  }

  double energy(const Eigen::MatrixXcd& u) const {
    const Lattice& lat = sys.lattice();
    const int m = lat.size();
    const double dv = lat.cell_volume();
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(m);
    for (int n = 0; n < u.cols(); ++n) rho += u.col(n).head(m).cwiseAbs2() + u.col(n).tail(m).cwiseAbs2();
    double kin = 0.0;
    for (int n = 0; n < u.cols(); ++n)
      for (const auto& c : hat(u.col(n)))
        for (int i = 0; i < m; ++i) kin += 0.5 * lat.k2()[i] * std::norm(c[i]) * lat.volume();
    const double nuc = dv * sys.potential.v.dot(rho);
    const double dir = 0.5 * dv * rho.dot(coulomb(rho.cast<cplx>()).real());
    double ex = 0.0;
    for (int a = 0; a < u.cols(); ++a)
      for (int b = 0; b < u.cols(); ++b) {
        const ComplexField pair = u.col(a).head(m).conjugate().cwiseProduct(u.col(b).head(m)) +
                                  u.col(a).tail(m).conjugate().cwiseProduct(u.col(b).tail(m));
        ex += 0.5 * dv * pair.dot(coulomb(pair)).real();
      }
    return kin - nuc + dir - ex;
  }
};

// Preconditioned steepest descent on the Stiefel manifold, QR retraction.
double gradient_descent_hf(const System& sys, int q, int max_iter = 20000) {
  const Lattice& lat = sys.lattice();
  const int m = lat.size();
  const double dv = lat.cell_volume();
  const HfOracle o{sys};
  // Start: spin-up and spin-down copies of a centered Gaussian, then further Gaussians.
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * m, q);
  for (int n = 0; n < q; ++n)
    for (int x = 0; x < m; ++x) {
      const Vec3 r = lat.position(x);
      double d2 = 0.0;
      for (double c : r) d2 += (c - 0.5 * lat.box_length()) * (c - 0.5 * lat.box_length());
      u(static_cast<Eigen::Index>(n % 2) * m + x, n) = std::exp(-0.5 * d2 / (1.0 + n / 2));
    }
  auto orth = [&](Eigen::MatrixXcd a) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd qm = qr.householderQ() * Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    return Eigen::MatrixXcd(qm / std::sqrt(dv));
  };
  u = orth(u);
  double e = o.energy(u);
  double tau = 0.5;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXcd fu = o.fock(u);
    const Eigen::MatrixXcd grad = fu - u * (dv * u.adjoint() * fu);
    Eigen::MatrixXcd pg(grad.rows(), grad.cols());
    for (int n = 0; n < q; ++n)
      for (int a = 0; a < 2; ++a) {
        ComplexField h = to_fourier(lat, grad.col(n).segment(a * m, m));
        for (int i = 0; i < m; ++i) h[i] /= 1.0 + 0.5 * lat.k2()[i];
        pg.col(n).segment(a * m, m) = from_fourier(lat, h);
      }
    Eigen::MatrixXcd next = orth(u - tau * pg);
    double en = o.energy(next);
    while (en > e && tau > 1e-6) {
      tau *= 0.5;
      next = orth(u - tau * pg);
      en = o.energy(next);
    }
    const double de = e - en;
    u = next;
    e = en;
    tau = std::min(1.0, tau * 1.2);
    if (de >= 0.0 && de < 1e-15 && std::sqrt(dv) * grad.norm() < 1e-7) break;
  }
  return e;
}

}  // namespace

TEST_CASE("Fock action", "[hf]") {
  Rng rng(31);
  SECTION("free kinetic") {
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0);
    const int mode = sys.lattice().index(1, 2, 3);
    Eigen::VectorXcd eta(2);
    eta << 1.0, cplx(0.0, 1.0);
    const SpinorField u = plane_wave(sys.lattice_ptr(), mode, eta);
    const SpinorField fu = hf_apply_fock(sys, DensityMatrix(sys.lattice_ptr(), 2), u);
    CHECK(norm(fu - cplx(0.5 * sys.lattice().k2()[mode]) * u) < 1e-13 * norm(fu));
  }
  SECTION("rank one self-interaction cancels") {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 1.0);
    const DensityMatrix g = random_density(sys.lattice_ptr(), 2, 1, 1.0, rng, true);
    const SpinorField u = g.orbital(0);
    const SpinorField ref = apply_symbol(SchrodingerKinetic{}, u) - multiply(sys.potential.v, u);
    CHECK(norm(hf_apply_fock(sys, g, u) - ref) < 1e-12 * norm(ref));
  }
  SECTION("dense oracle") {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 2.0);
    const auto og = oracle::grid(4, 6.0);
    const DensityMatrix g = random_density(sys.lattice_ptr(), 2, 2, 1.0, rng);
    const auto [w1, w2] = oracle::mean_field(og, g);
    const Eigen::MatrixXcd f = oracle::kinetic(og, 2) - oracle::diagonal(sys.potential.v, 2) + w1 - w2;
    CHECK((dense_ops::fock_matrix(sys, g) - f).norm() < 1e-10 * f.norm());
    const SpinorField psi = random_field(sys.lattice_ptr(), 2, 1.0, rng);
    const Eigen::VectorXcd ref = f * psi.values();
    CHECK((hf_apply_fock(sys, g, psi).values() - ref).norm() < 1e-10 * ref.norm());
  }
}

TEST_CASE("HF energy", "[hf]") {
  Rng rng(32);
  {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 1.0);
    const EnergyReport r = hf_energy(sys, DensityMatrix(sys.lattice_ptr(), 2));
    CHECK(r.total == 0.0);
    CHECK(r.kinetic == 0.0);
  }
  {
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0);
    const DensityMatrix g = random_density(sys.lattice_ptr(), 2, 1, 1.0, rng, true);
    const EnergyReport r = hf_energy(sys, g);
    CHECK_THAT(r.total, WithinRel(r.kinetic, 1e-12));
    CHECK_THAT(r.hartree_direct, WithinRel(r.exchange, 1e-12));
  }
  {
    const System sys = make_system(6, 10.0, 2.0, 1.0, 2.0);
    const auto og = oracle::grid(6, 10.0);
    const HfResult hf = solve_hf(sys, {});
    REQUIRE(hf.report.converged);
    const double dv = sys.lattice().cell_volume();
    const Eigen::MatrixXcd h0 = oracle::kinetic(og, 2) - oracle::diagonal(sys.potential.v, 2);
    const double one_body = (dv * hf.gamma.orbitals().adjoint() * h0 * hf.gamma.orbitals()).trace().real();
    CHECK_THAT(hf.report.total, WithinAbs(0.5 * (hf.orbital_eigenvalues.sum() + one_body), 1e-9));
    // SCF energies never go up
    const auto& e = hf.trace.energies;
    for (size_t i = 1; i < e.size(); ++i) CHECK(e[i] <= e[i - 1] + 1e-12 * std::abs(e[i - 1]));
  }
}

TEST_CASE("solve_hf reductions", "[hf]") {
  SECTION("one electron is the linear problem") {
    const System sys = make_system(6, 10.0, 2.0, 1.0, 1.0);
    const auto og = oracle::grid(6, 10.0);
    const Eigen::MatrixXcd h = oracle::kinetic(og, 1) - oracle::diagonal(sys.potential.v, 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    const HfResult hf = solve_hf(sys, {});
    CHECK_THAT(hf.report.total, WithinAbs(es.eigenvalues()[0], 1e-9));
  }
  SECTION("free electron") {
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0);
    const HfResult hf = solve_hf(sys, {});
    CHECK_THAT(hf.report.total, WithinAbs(0.0, 1e-12));
    const RealField rho = one_particle_density(hf.gamma);
    CHECK((rho.array() - 1.0 / sys.lattice().volume()).abs().maxCoeff() < 1e-12);
  }
  SECTION("errors") {
    const System sys = make_system(4, 6.0, 1.0, 1.0, 0.5);
    CHECK_THROWS_AS(solve_hf(sys, {}), InvalidArgument);
    const System big = make_system(4, 6.0, 1.0, 1.0, 200.0);
    CHECK_THROWS_AS(solve_hf(big, {}), InvalidArgument);
  }
}

TEST_CASE("standard HF against an orbital gradient-descent minimizer", "[hf][slow]") {
  const System sys = make_system(8, 12.0, 2.0, 0.8, 2.0);
  ScfSettings s;
  s.tol_energy = 1e-12;
  s.tol_density = 1e-10;
  const HfResult hf = solve_hf(sys, s);
  REQUIRE(hf.report.converged);
  CHECK(hf.report.delta_mass == 0.0);
  const double e_gd = gradient_descent_hf(sys, 2);
  CHECK_THAT(hf.report.total, WithinAbs(e_gd, 1e-8));

  // The iterative eigensolver path lands on the same state.
  s.eigen_method = EigenMethod::Iterative;
  const HfResult it = solve_hf(sys, s);
  REQUIRE(it.report.converged);
  CHECK_THAT(it.report.total, WithinAbs(hf.report.total, 1e-9));
}
