#include <catch_amalgamated.hpp>

#include "dfhf/df.hpp"
#include "dfhf/random.hpp"
#include "dfhf/renorm.hpp"
#include "oracles.hpp"

using namespace dfhf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

System make_system(int n, double box, double z, double sigma, double q, double c) {
  ModelParams p;
  p.lattice = build_lattice(n, box);
  p.nuclear = {z, sigma};
  p.q = q;
  p.c = c;
  return System(p);
}

Eigen::MatrixXcd dense_df(const oracle::Grid& og, const System& sys, const DensityMatrix& g, double c) {
  const auto [w1, w2] = oracle::mean_field(og, g);
  return oracle::dirac(og, c) - oracle::diagonal(sys.potential.v, 4) + w1 - w2;
}

// Rank-q state supported on the positive free subspace.
DensityMatrix positive_state(const LatticePtr& lat, int rank, double c, Rng& rng) {
  Eigen::MatrixXcd b(4 * lat->size(), rank);
  for (int n = 0; n < rank; ++n) b.col(n) = project_free(random_field(lat, 4, 2.0, rng), c, Sign::Plus).values();
  Eigen::VectorXd occ = Eigen::VectorXd::Constant(rank, 0.5);
  // orthonormalize through compress (occupations stay 0.5 on an orthonormal basis)
  const DensityMatrix raw = compress(lat, 4, b, Eigen::MatrixXcd::Identity(rank, rank));
  return DensityMatrix(lat, 4, raw.orbitals(), occ.head(raw.rank()));
}

}  // namespace

TEST_CASE("DF operator", "[df]") {
  Rng rng(41);
  const double c = 10.0;
  SECTION("free Dirac") {
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0, c);
    const SpinorField u = random_field(sys.lattice_ptr(), 4, 1.0, rng);
    const SpinorField a = df_apply_operator(sys, DensityMatrix(sys.lattice_ptr(), 4), u, c);
    CHECK(norm(a - apply_symbol(Dirac{c}, u)) < 1e-13 * norm(a));
  }
  SECTION("rank one self-interaction cancels") {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 1.0, c);
    const DensityMatrix g = random_density(sys.lattice_ptr(), 4, 1, 1.0, rng, true);
    const SpinorField u = g.orbital(0);
    const SpinorField ref = apply_symbol(Dirac{c}, u) - multiply(sys.potential.v, u);
    CHECK(norm(df_apply_operator(sys, g, u, c) - ref) < 1e-12 * norm(ref));
  }
  SECTION("dense oracle") {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 2.0, c);
    const auto og = oracle::grid(4, 6.0);
    const DensityMatrix g = random_density(sys.lattice_ptr(), 4, 2, 1.0, rng);
    const Eigen::MatrixXcd a = dense_df(og, sys, g, c);
    CHECK((dense_ops::df_matrix(sys, g, c) - a).norm() < 1e-10 * a.norm());
    const SpinorField psi = random_field(sys.lattice_ptr(), 4, 1.0, rng);
    const Eigen::VectorXcd ref = a * psi.values();
    CHECK((df_apply_operator(sys, g, psi, c).values() - ref).norm() < 1e-10 * ref.norm());
  }
}

TEST_CASE("DF energy", "[df]") {
  Rng rng(42);
  const double c = 10.0;
  {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 1.0, c);
    CHECK(df_energy(sys, DensityMatrix(sys.lattice_ptr(), 4), c).total == 0.0);
  }
  {
    // Lambda^+ of a constant large spinor: rest mass cancels exactly.
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0, c);
    Eigen::VectorXcd eta(4);
    eta << 1.0, 0.0, 0.0, 0.0;
    SpinorField u = project_free(plane_wave(sys.lattice_ptr(), 0, eta), c, Sign::Plus);
    u *= 1.0 / norm(u);
    const DensityMatrix g = DensityMatrix::from_fields({u}, Eigen::VectorXd::Ones(1));
    CHECK(df_energy(sys, g, c).kinetic == 0.0);
  }
  {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 2.0, c);
    const auto og = oracle::grid(4, 6.0);
    const double dv = sys.lattice().cell_volume();
    const DensityMatrix g = random_density(sys.lattice_ptr(), 4, 2, 1.0, rng);
    const Eigen::MatrixXcd gd = dv * oracle::kernel(g);  // gamma acting on grid values
    const auto [w1, w2] = oracle::mean_field(og, g);
    const Eigen::MatrixXcd kin = oracle::dirac(og, c) - c * c * Eigen::MatrixXcd::Identity(gd.rows(), gd.cols());
    const EnergyReport r = df_energy(sys, g, c);
    CHECK_THAT(r.kinetic, WithinAbs((kin * gd).trace().real(), 1e-10 * c * c));
    CHECK_THAT(r.nuclear_attraction, WithinAbs((oracle::diagonal(sys.potential.v, 4) * gd).trace().real(), 1e-10));
    CHECK_THAT(r.hartree_direct, WithinAbs(0.5 * (w1 * gd).trace().real(), 1e-10));
    CHECK_THAT(r.exchange, WithinAbs(0.5 * (w2 * gd).trace().real(), 1e-10));
  }
}

TEST_CASE("mean-field projectors", "[df]") {
  Rng rng(43);
  const double c = 10.0;
  SECTION("free case") {
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0, c);
    const DensityMatrix empty(sys.lattice_ptr(), 4);
    const SpinorField u = random_field(sys.lattice_ptr(), 4, 1.0, rng);
    const SpinorField p = positive_projector(sys, empty, c, u, Sign::Plus);
    CHECK(norm(p - project_free(u, c, Sign::Plus)) < 1e-12 * norm(u));
  }
  SECTION("P+ P- = 0") {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 2.0, c);
    const DensityMatrix g = random_density(sys.lattice_ptr(), 4, 2, 1.0, rng);
    const MeanFieldSpectrum spec(sys, g, c);
    const Eigen::MatrixXcd v = random_field(sys.lattice_ptr(), 4, 1.0, rng).values();
    const Eigen::MatrixXcd pm = spec.project(spec.project(v, Sign::Minus), Sign::Plus);
    CHECK(pm.norm() < 1e-12 * v.norm());
    CHECK((spec.project(v, Sign::Plus) + spec.project(v, Sign::Minus) - v).norm() < 1e-12 * v.norm());
  }
  SECTION("Newton-Schulz sign oracle") {
    const System sys = make_system(4, 6.0, 1.0, 1.0, 1.0, c);
    const auto og = oracle::grid(4, 6.0);
    const DensityMatrix empty(sys.lattice_ptr(), 4);
    const Eigen::MatrixXcd a = oracle::dirac(og, c) - oracle::diagonal(sys.potential.v, 4);
    const Eigen::MatrixXcd sign = oracle::matrix_sign(a);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    const Eigen::MatrixXcd p = positive_projector_matrix(sys, empty, c, Sign::Plus);
    CHECK((p - 0.5 * (id + sign)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SECTION("gap guard") {
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0, c);
    CHECK_THROWS_AS(MeanFieldSpectrum(sys, DensityMatrix(sys.lattice_ptr(), 4), c).check_gap(1e3), NearKernelError);
  }
}

TEST_CASE("T_c map", "[df]") {
  Rng rng(44);
  const double c = 10.0;
  const System sys = make_system(4, 6.0, 1.0, 1.0, 2.0, c);
  const LatticePtr lat = sys.lattice_ptr();
  SECTION("fixed point") {
    const DensityMatrix g = tc_map(sys, positive_state(lat, 2, c, rng), c);
    CHECK(xc_distance(tc_map(sys, g, c), g, c) < 1e-10 * c);
    const auto [theta, tr] = iterate_tc(sys, g, c, 1e-9, 10);
    CHECK(tr.iterations == 0);
    CHECK(tr.converged);
  }
  SECTION("negative subspace maps to zero") {
    // A negative-energy plane wave of D is an eigenvector of D_gamma for its
    // own rank-one gamma when V = 0 (W_gamma u = 0), so P+ kills it.
    const System vsys = make_system(4, 6.0, 0.0, 1.0, 1.0, c);
    Eigen::VectorXcd eta(4);
    eta << 0.0, 0.0, 1.0, 0.0;
    SpinorField u = plane_wave(vsys.lattice_ptr(), 0, eta);
    u *= 1.0 / norm(u);
    const DensityMatrix g = DensityMatrix::from_fields({u}, Eigen::VectorXd::Ones(1));
    CHECK(tc_map(vsys, g, c).rank() == 0);
  }
  SECTION("dense oracle") {
    const auto og = oracle::grid(4, 6.0);
    const DensityMatrix g = random_density(lat, 4, 2, 1.0, rng);
    const Eigen::MatrixXcd a = dense_df(og, sys, g, c);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    const Eigen::MatrixXcd p = 0.5 * (id + oracle::matrix_sign(a));
    const Eigen::MatrixXcd ref = p * g.dense() * p;
    const Eigen::MatrixXcd got = tc_map(sys, g, c).dense();
    CHECK((got - ref).norm() < 1e-10);
  }
}

TEST_CASE("retraction and admissibility", "[df]") {
  SECTION("constants at c = 100, q = z = 2") {
    ModelParams p;
    p.nuclear = {2.0, 1.0};
    p.q = 2.0;
    p.c = 100.0;
    CHECK_THAT(p.kappa(), WithinRel(0.08, 1e-14));
    CHECK_THAT(p.lambda0(), WithinRel(0.98, 1e-14));
    // pi / (4 c sqrt((1 - kappa) lambda0)); the product under the root is 0.9016
    CHECK_THAT(p.a_c(), WithinRel(std::numbers::pi / (400.0 * std::sqrt(0.9016)), 1e-14));
    CHECK_THAT(p.a_c(), WithinAbs(8.27e-3, 5e-6));
    // 2 a_c <= pi / c whenever (1 - kappa) lambda0 >= 1/4
    CHECK(2.0 * p.a_c() <= std::numbers::pi / p.c);
  }
  SECTION("L_c <= 1/2 under c >= 4 pi R0") {
    for (double x2 : {0.0, 1.0, 5.0, 20.0}) {
      ModelParams p;
      p.nuclear = {2.0, 1.0};
      p.q = 2.0;
      const double r0 = r0_bound(p.q, p.nuclear.z, x2);
      p.c = 4.0 * std::numbers::pi * r0;
      REQUIRE(p.assumption_c(r0));
      CHECK(p.L_c(r0) <= 0.5);
    }
  }
  SECTION("hypothesis is enforced") {
    const System sys = make_system(4, 6.0, 1.0, 1.0, 1.0, 10.0);
    Rng rng(45);
    const DensityMatrix g = positive_state(sys.lattice_ptr(), 1, 10.0, rng);
    const double r = 1.0 / (2.0 * sys.params.a_c());
    CHECK_THROWS_AS(retract_theta(sys, g, 10.0, r, 1e-10, 10), InvalidArgument);
  }
  SECTION("empty state") {
    const System sys = make_system(4, 6.0, 1.0, 1.0, 1.0, 10.0);
    const Admissibility a = admissibility_check(sys, DensityMatrix(sys.lattice_ptr(), 4), 10.0, 1.0);
    CHECK(a.trace_term == 0.0);
    CHECK(a.tc_distance == 0.0);
    CHECK(a.member);
  }
  SECTION("projected HF minimizer at N = 6, c = 60") {
    const double c = 60.0;
    const System sys = make_system(6, 10.0, 2.0, 1.0, 2.0, c);
    const HfResult hf = solve_hf(sys, {});
    const DensityMatrix start = free_sandwich(renormalize(hf.gamma, c, Direction::ToRelativistic).exact, c, Sign::Plus);
    const double x2 = matrix_norm(hf.gamma, XNorm{2.0});
    const double r0 = r0_bound(2.0, 2.0, x2);
    const Admissibility a = admissibility_check(sys, start, c, r0, x2);
    CHECK_THAT(a.R0, WithinRel(r0, 1e-15));
    // The defining inequality holds with room; the contraction hypothesis
    // 2 a_c R0 < 1 does not at this c, so membership is reported false.
    CHECK(a.trace_term + a.residual_term < r0);
    CHECK(a.L_c >= 1.0);
    CHECK(!a.member);
    // Inside the hypothesis (R with L_c = 1/2) the observed ratios obey the bound.
    const double r = 0.25 / sys.params.a_c();
    const auto [theta, tr] = retract_theta(sys, start, c, r, 1e-12, 50);
    CHECK(tr.converged);
    CHECK_THAT(tr.L_c, WithinRel(0.5, 1e-14));
    for (double ratio : tr.ratios) CHECK(ratio <= tr.L_c);
  }
}

TEST_CASE("solve_df", "[df]") {
  SECTION("one electron is the linear problem") {
    const double c = 20.0;
    const System sys = make_system(4, 6.0, 2.0, 1.0, 1.0, c);
    const auto og = oracle::grid(4, 6.0);
    const Eigen::MatrixXcd a = oracle::dirac(og, c) - oracle::diagonal(sys.potential.v, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    double lowest = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] > 0.0) {
        lowest = es.eigenvalues()[i];
        break;
      }
    const DfGroundState df = solve_df(sys, {});
    CHECK_THAT(df.report.total, WithinAbs(lowest - c * c, 1e-9));
  }
  SECTION("free electron") {
    const System sys = make_system(4, 6.0, 0.0, 1.0, 1.0, 30.0);
    const DfGroundState df = solve_df(sys, {});
    CHECK_THAT(df.report.total, WithinAbs(0.0, 1e-10));
  }
  SECTION("self-consistency of the ground state") {
    const System sys = make_system(6, 10.0, 2.0, 1.0, 2.0, 40.0);
    ScfSettings s;
    const DfGroundState df = solve_df(sys, s);
    REQUIRE(df.report.converged);
    CHECK(df.projector_residual <= 10.0 * s.tol_density);
    CHECK(df.report.delta_mass == 0.0);
    CHECK(df.report.fermi_gap > 0.0);
    const auto& e = df.trace.energies;
    for (size_t i = 1; i < e.size(); ++i) CHECK(e[i] <= e[i - 1] + 1e-12 * std::abs(e[i - 1]));
  }
  SECTION("kappa guard") {
    const System sys = make_system(4, 6.0, 2.0, 1.0, 2.0, 7.0);
    CHECK_THROWS_AS(solve_df(sys, {}), InvalidArgument);
  }
}
