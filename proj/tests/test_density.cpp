#include <catch_amalgamated.hpp>

#include "dfhf/density.hpp"
#include "dfhf/random.hpp"
#include "oracles.hpp"

using namespace dfhf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) e[i++] = x;
  return e;
}

// Trace norm of A gamma A for a dense Hermitian multiplier matrix A.
double dense_sandwich_trace_norm(const oracle::Grid& og, const DensityMatrix& g,
                                 const std::function<double(const std::array<double, 3>&)>& s) {
  const double dv = std::pow(og.box, 3) / og.m;
  const Eigen::MatrixXcd a = oracle::blockdiag(oracle::multiplier(og, [&](const auto& k) { return cplx(s(k)); }), g.components());
  const Eigen::MatrixXcd op = dv * a * oracle::kernel(g) * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (op + op.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

}  // namespace

TEST_CASE("aufbau filling", "[density]") {
  const double inf = std::numeric_limits<double>::infinity();
  {
    const FillResult f = aufbau_fill(vec({-3, -2, -1, 5}), {}, 2.0, -inf, 0.0);
    CHECK(f.occupations == vec({1, 1, 0, 0}));
    CHECK(f.fermi == -2.0);
    CHECK(f.gap == 1.0);
    CHECK(f.delta_mass == 0.0);
  }
  {
    const FillResult f = aufbau_fill(vec({-3, -1, -1, -1}), {}, 2.0, -inf, inf, nullptr, 0, 1e-8);
    CHECK_THAT(f.occupations[0], WithinAbs(1.0, 1e-15));
    for (int i = 1; i < 4; ++i) CHECK_THAT(f.occupations[i], WithinAbs(1.0 / 3.0, 1e-15));
    CHECK_THAT(f.delta_mass, WithinAbs(1.0, 1e-15));
  }
  {
    const auto lat = build_lattice(4, 5.0);
    const FillResult f = aufbau_fill(vec({-1, 0.5}), Eigen::MatrixXcd::Zero(2 * lat->size(), 2), 0.0, -inf, inf, lat, 2);
    CHECK(f.gamma.rank() == 0);
    CHECK(f.gamma.trace() == 0.0);
  }
  CHECK_THROWS_AS(aufbau_fill(vec({1, 2}), {}, 3.0, -inf, inf), InvalidArgument);
  CHECK_THROWS_AS(aufbau_fill(vec({2, 1}), {}, 1.0, -inf, inf), InvalidArgument);
  CHECK_THROWS_AS(aufbau_fill(vec({1, 2}), {}, 1.0, 3.0, 4.0), InvalidArgument);
}

TEST_CASE("one-particle density", "[density]") {
  const auto lat = build_lattice(4, 6.0);
  {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * lat->size(), 1);
    u.col(0).head(lat->size()).setConstant(1.0 / std::sqrt(lat->volume()));
    const DensityMatrix g(lat, 2, u, vec({1.0}));
    const RealField rho = one_particle_density(g);
    CHECK((rho.array() - 1.0 / lat->volume()).abs().maxCoeff() < 1e-15);
  }
  CHECK(one_particle_density(DensityMatrix(lat, 4)).cwiseAbs().maxCoeff() == 0.0);
  {
    Rng rng(21);
    const DensityMatrix g = random_density(lat, 4, 2, 1.0, rng);
    const Eigen::MatrixXcd k = oracle::kernel(g);
    const RealField rho = one_particle_density(g);
    const int m = lat->size();
    for (int x = 0; x < m; ++x) {
      double d = 0.0;
      for (int a = 0; a < 4; ++a) d += k(a * m + x, a * m + x).real();
      CHECK_THAT(rho[x], WithinAbs(d, 1e-12 * rho.maxCoeff()));
    }
  }
}

TEST_CASE("matrix norms", "[density]") {
  const auto lat = build_lattice(4, 6.0);
  const auto og = oracle::grid(4, 6.0);
  Rng rng(22);
  {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(4 * lat->size(), 1);
    u.col(0).segment(lat->size(), lat->size()).setConstant(1.0 / std::sqrt(lat->volume()));
    const DensityMatrix g(lat, 4, u, vec({1.0}));
    for (double s : {0.0, 1.0, 2.0, 5.0}) CHECK_THAT(matrix_norm(g, XNorm{s}), WithinRel(1.0, 1e-13));
  }
  const DensityMatrix g = random_density(lat, 2, 2, 1.0, rng);
  CHECK_THAT(matrix_norm(g, XNorm{0.0}), WithinRel(g.trace(), 1e-12));
  CHECK_THAT(matrix_norm(g, TraceNorm{}), WithinRel(g.trace(), 1e-15));
  CHECK_THAT(matrix_norm(g, SchattenNorm{2.0}), WithinRel(g.occupations().norm(), 1e-14));
  for (double s : {1.0, 2.0}) {
    const double ref = dense_sandwich_trace_norm(og, g, [s](const auto& k) {
      return std::pow(1.0 + oracle::dot3(k, k), 0.25 * s);
    });
    CHECK_THAT(matrix_norm(g, XNorm{s}), WithinRel(ref, 1e-10));
  }
  {
    const DensityMatrix g4 = random_density(lat, 4, 2, 1.0, rng);
    const double c = 7.0;
    const double ref = dense_sandwich_trace_norm(og, g4, [c](const auto& k) {
      return std::pow(c * c * c * c + c * c * oracle::dot3(k, k), 0.25);
    });
    CHECK_THAT(matrix_norm(g4, XcNorm{c}), WithinRel(ref, 1e-10));
  }
  CHECK_THROWS_AS(matrix_norm(g, SchattenNorm{0.5}), InvalidArgument);
}

TEST_CASE("X_c against X(1) mode bounds", "[density][property]") {
  const auto lat = build_lattice(4, 6.0);
  Rng rng(23);
  for (double c : {1.0, 10.0, 100.0}) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < lat->size(); ++i) {
      const double k2 = lat->k2()[i];
      const double r = std::sqrt((c * c * c * c + c * c * k2) / (1.0 + k2));  // squared multiplier ratio
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    for (int t = 0; t < 10; ++t) {
      const DensityMatrix g = random_density(lat, 4, 3, 1.0, rng);
      const double x1 = matrix_norm(g, XNorm{1.0}), xc = matrix_norm(g, XcNorm{c});
      CHECK(xc >= lo * x1 * (1.0 - 1e-12));
      CHECK(xc <= hi * x1 * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("state algebra", "[density]") {
  const auto lat = build_lattice(4, 6.0);
  Rng rng(24);
  const DensityMatrix a = random_density(lat, 2, 2, 1.0, rng), b = random_density(lat, 2, 3, 1.0, rng);
  CHECK(a.invariant_violation(2.0).empty());
  const DensityMatrix m = mix(a, b, 0.3);
  CHECK((m.dense() - (0.7 * a.dense() + 0.3 * b.dense())).norm() < 1e-12 * a.dense().norm());
  CHECK(m.invariant_violation(3.0).empty());
  const DensityMatrix d = difference(a, b);
  CHECK((d.dense() - (a.dense() - b.dense())).norm() < 1e-12 * a.dense().norm());
  CHECK(matrix_norm(difference(a, a), TraceNorm{}) < 1e-13);

  Eigen::MatrixXcd u = a.orbitals();
  u.col(1) *= 2.0;
  CHECK(!DensityMatrix(lat, 2, u, a.occupations()).invariant_violation(2.0).empty());
  CHECK(!DensityMatrix(lat, 2, a.orbitals(), vec({1.2, 0.1})).invariant_violation(2.0).empty());
  CHECK(!DensityMatrix(lat, 2, a.orbitals(), vec({1.0, 1.0})).invariant_violation(1.5).empty());
  CHECK_THROWS_AS(DensityMatrix(lat, 3), InvalidArgument);
  CHECK_THROWS_AS(DensityMatrix(lat, 2, a.orbitals(), vec({1.0})), InvalidArgument);
}
