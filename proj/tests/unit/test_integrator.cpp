#include <doctest.h>

#include "shj/integrator.hpp"

#include <cmath>
#include <sstream>

using namespace shj;

namespace {

PhaseState point(double q, double p) {
  return PhaseState(Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Constant(1, p));
}

}  // namespace

TEST_CASE("zero-noise free particle is exact") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2"});
  const NoisePath path = sample_path(TimeGrid(2.0, 50), 0, 1, 0);
  const Trajectory tr = integrate_flow(sys, point(0.5, 1.5), path);
  for (int k = 0; k <= 50; ++k) {
    CHECK(tr.states(0, k) == doctest::Approx(0.5 + 1.5 * path.grid.time(k)).epsilon(1e-13));
    CHECK(tr.states(1, k) == 1.5);
  }
}

TEST_CASE("translation flow q = q0 + B_t") {
  const auto sys = HamiltonianSystem::from_strings(1, {"0", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 128), 1, 3, 0);
  const Trajectory tr = integrate_flow(sys, point(1.0, 5.0), path, {}, true);
  for (int k = 0; k <= 128; ++k) {
    CHECK(std::abs(tr.states(0, k) - (1.0 + path.value(1, k))) <= 1e-12);
    CHECK(tr.states(1, k) == 5.0);
    CHECK((tr.jacobians[k] - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  }
}

TEST_CASE("noisy free particle: q = q0 + p0 t + B_t, p constant") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 256), 1, 4, 2);
  const Trajectory tr = integrate_flow(sys, point(-0.3, 0.8), path);
  for (int k = 0; k <= 256; ++k) {
    CHECK(std::abs(tr.states(0, k) - (-0.3 + 0.8 * path.grid.time(k) + path.value(1, k))) <= 1e-12);
    CHECK(tr.states(1, k) == 0.8);
  }
}

TEST_CASE("midpoint conserves the oscillator energy") {
  const auto sys = HamiltonianSystem::from_strings(1, {"(p1^2 + q1^2)/2"});
  const NoisePath path = sample_path(TimeGrid(10.0, 200), 0, 0, 0);
  const Trajectory tr = integrate_flow(sys, point(1.0, 0.0), path);
  for (int k = 0; k <= 200; ++k) {
    const double e = 0.5 * (tr.states(0, k) * tr.states(0, k) + tr.states(1, k) * tr.states(1, k));
    CHECK(std::abs(e - 0.5) <= 1e-13);
  }
}

TEST_CASE("property: pendulum tangent maps are symplectic") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const NoisePath path = sample_path(TimeGrid(1.0, 256), 1, seed, 0);
    const Trajectory tr = integrate_flow(sys, point(0.4, -0.2), path, {}, true);
    for (double d : tr.step_defects) CHECK(d <= 1e-9);
    CHECK(tr.defects.back() <= 256 * 1e-9);
  }
}

TEST_CASE("property: step map equals the finite-difference Jacobian of the step") {
  const auto sys = HamiltonianSystem::from_strings(2, {"(p1^2 + p2^2)/2 + cos(q1)*q2^2", "p1 + q2*p2", "sin(q1)"});
  const NoisePath path = sample_path(TimeGrid(1.0, 16), 2, 8, 1);
  MidpointStepper stepper(sys);
  Eigen::Vector4d z(0.1, -0.4, 0.3, 0.7);
  Eigen::MatrixXd S(4, 4);
  Eigen::VectorXd w = z;
  stepper.step(w, 0.0, path.step(0), &S);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    stepper.step(zp, 0.0, path.step(0));
    stepper.step(zm, 0.0, path.step(0));
    CHECK(((zp - zm) / (2 * h) - S.col(i)).lpNorm<Eigen::Infinity>() <= 1e-7);
  }
  CHECK(symplectic_defect(S) <= 1e-12);
}

TEST_CASE("property: inverse flow recovers the initial point") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1", "0.3*q1"});
  for (std::uint64_t m = 0; m < 10; ++m) {
    const NoisePath path = sample_path(TimeGrid(1.0, 128), 2, 12, m);
    const Trajectory tr = integrate_flow(sys, point(0.2, 0.5), path);
    for (int k : {0, 1, 64, 128}) {
      const PhaseState back = inverse_flow_point(sys, tr.state(k), path, k);
      CHECK(std::abs(back.q(0) - 0.2) <= 1e-10);
      CHECK(std::abs(back.p(0) - 0.5) <= 1e-10);
    }
  }
}

TEST_CASE("inverse flow tangent map inverts the forward one") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 64), 1, 2, 0);
  const Trajectory tr = integrate_flow(sys, point(0.2, 0.5), path, {}, true);
  const FlowEnd back = inverse_flow(sys, tr.states.col(64), path, 64, {}, true);
  CHECK((back.jacobian * tr.jacobians[64] - Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("divergent step is reported with its node") {
  const auto sys = HamiltonianSystem::from_strings(1, {"q1^2*p1"});
  const NoisePath path = sample_path(TimeGrid(4.0, 4), 0, 0, 0);
  try {
    integrate_flow(sys, point(10.0, 0.0), path);
    FAIL("no throw");
  } catch (const StepDivergence& e) {
    CHECK(e.node == 0);
    CHECK(std::string(e.what()).find("smaller dt") != std::string::npos);
  }
}

TEST_CASE("Euler-Heun comparison scheme is not symplectic") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 64), 1, 0, 0);
  SchemeConfig cfg;
  cfg.scheme = Scheme::euler_heun;
  const Trajectory heun = integrate_flow(sys, point(0.4, -0.2), path, cfg, true);
  const Trajectory mid = integrate_flow(sys, point(0.4, -0.2), path, {}, true);
  CHECK(heun.defects.back() > 1e3 * std::max(mid.defects.back(), 1e-15));
  CHECK(std::abs(heun.states(0, 64) - mid.states(0, 64)) < 0.1);
}

TEST_CASE("dimension checks and CSV") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2", "p1"});
  const NoisePath wrong = sample_path(TimeGrid(1.0, 4), 2, 0, 0);
  CHECK_THROWS_AS(integrate_flow(sys, point(0, 0), wrong), DimensionError);
  const NoisePath path = sample_path(TimeGrid(1.0, 4), 1, 0, 0);
  std::ostringstream os;
  write_csv(os, integrate_flow(sys, point(0, 0), path, {}, true), path.grid);
  CHECK(os.str().rfind("k,t_k,q1,p1,defect_k\n0,0,", 0) == 0);
}
