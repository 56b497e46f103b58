#include <doctest.h>

#include "shj/core_geometry.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace shj;

TEST_CASE("phase state validation") {
  CHECK_THROWS_AS(PhaseState(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(2)), DimensionError);
  CHECK_THROWS_AS(PhaseState(Eigen::VectorXd(), Eigen::VectorXd()), DimensionError);
  Eigen::VectorXd bad(1);
  bad << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(PhaseState(bad, Eigen::VectorXd::Zero(1)));
  CHECK_THROWS_AS(PhaseState::from_stacked(Eigen::VectorXd::Zero(3)), DimensionError);
  const PhaseState z = PhaseState::from_stacked(Eigen::Vector4d(1, 2, 3, 4));
  CHECK(z.q(1) == 2.0);
  CHECK(z.p(0) == 3.0);
  CHECK(z.stacked() == Eigen::Vector4d(1, 2, 3, 4));
}

TEST_CASE("symplectic matrix") {
  const Eigen::MatrixXd omega = symplectic_matrix(2);
  CHECK((omega * omega + Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
  CHECK((omega.transpose() + omega).norm() == 0.0);
  CHECK(symplectic_defect(omega) == 0.0);
  CHECK(symplectic_defect(Eigen::MatrixXd::Identity(4, 4)) == 0.0);
  CHECK(symplectic_defect(2.0 * Eigen::MatrixXd::Identity(2, 2)) == doctest::Approx(3.0));
  CHECK_THROWS_AS(symplectic_defect(Eigen::MatrixXd::Identity(3, 3)), DimensionError);
  CHECK_THROWS_AS(symplectic_defect(Eigen::MatrixXd::Identity(2, 4)), DimensionError);
  const Eigen::Vector4d v(1, 2, 3, 4);
  CHECK((apply_symplectic(v) - omega * v).norm() == 0.0);
}

TEST_CASE("shear and rotation maps are symplectic") {
  Eigen::MatrixXd shear(2, 2);
  shear << 1, 0.7, 0, 1;
  CHECK(symplectic_defect(shear) <= 1e-15);
  const double a = 0.4;
  Eigen::MatrixXd rot(2, 2);
  rot << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
  CHECK(symplectic_defect(rot) <= 1e-15);
}

TEST_CASE("Hamiltonian vector field of the oscillator") {
  const ScalarField h = make_field("(p1^2 + q1^2)/2", 1);
  const PhaseState z(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, -0.5));
  const TangentVector X = hamiltonian_vector_field(h, 0.0, z);
  CHECK(X.q(0) == doctest::Approx(-0.5));
  CHECK(X.p(0) == doctest::Approx(-0.3));
}

TEST_CASE("property: Omega^T X_h = grad h, bracket identities") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const ScalarField f = make_field("q1*p2 + sin(q2)*p1^2", 2);
  const ScalarField g = make_field("exp(q1/3)*p1 + q2^2*p2", 2);
  const Eigen::MatrixXd omega = symplectic_matrix(2);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector4d s;
    for (int j = 0; j < 4; ++j) s(j) = u(rng);
    const PhaseState z = PhaseState::from_stacked(s);
    Eigen::VectorXd grad(5);
    f.gradient(0.0, s, grad);
    const TangentVector X = hamiltonian_vector_field(f, 0.0, z);
    Eigen::Vector4d xs;
    xs << X.q, X.p;
    CHECK((omega.transpose() * xs - grad.head(4)).lpNorm<Eigen::Infinity>() <= 1e-14);

    // {f, g} = df(X_g) = -dg(X_f), antisymmetric.
    const TangentVector Xg = hamiltonian_vector_field(g, 0.0, z);
    Eigen::VectorXd gg(5);
    g.gradient(0.0, s, gg);
    const double fg = poisson_bracket(f, g, 0.0, z);
    CHECK(fg == doctest::Approx(grad.head(2).dot(Xg.q) + grad.segment(2, 2).dot(Xg.p)));
    CHECK(fg == doctest::Approx(-(gg.head(2).dot(X.q) + gg.segment(2, 2).dot(X.p))));
    CHECK(fg == doctest::Approx(-poisson_bracket(g, f, 0.0, z)));
  }
}

TEST_CASE("canonical brackets") {
  const PhaseState z(Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Constant(1, 0.9));
  CHECK(poisson_bracket(make_field("q1", 1), make_field("p1", 1), 0.0, z) == 1.0);
  CHECK(poisson_bracket(make_field("p1", 1), make_field("q1", 1), 0.0, z) == -1.0);
  CHECK(poisson_bracket(make_field("p1^2/2", 1), make_field("p1", 1), 0.0, z) == 0.0);
}

TEST_CASE("Liouville form") {
  const PhaseState z(Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4));
  const CotangentVector th = liouville_form(z);
  CHECK(th.dq == Eigen::Vector2d(3, 4));
  CHECK(th.dp == Eigen::Vector2d(0, 0));
  TangentVector v{Eigen::Vector2d(1, -1), Eigen::Vector2d(5, 5)};
  CHECK(liouville_pairing(z, v) == doctest::Approx(-1.0));
}

TEST_CASE("Hamiltonian system validation") {
  CHECK_THROWS(HamiltonianSystem::from_strings(1, {}));
  CHECK_THROWS_AS(HamiltonianSystem::from_strings(1, {"q2"}), BindError);
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2", "p1"});
  CHECK(sys.r == 1);
  CHECK(sys.n == 1);
}
