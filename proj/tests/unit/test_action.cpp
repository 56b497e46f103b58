#include <doctest.h>

#include "shj/action.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace shj;

namespace {

PhaseState point(double q, double p) {
  return PhaseState(Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Constant(1, p));
}

ActionPath action_of(const HamiltonianSystem& sys, const PhaseState& z0, const NoisePath& path) {
  return accumulate_action(integrate_flow(sys, z0, path), path, sys);
}

// Closed-form gradient of the classical oscillator action over [0, T].
Eigen::Vector2d oscillator_dR(double q0, double p0, double T) {
  const double s2 = std::sin(2 * T), v = 0.5 * (1 - std::cos(2 * T));
  return {-q0 * s2 / 2 - p0 * v, p0 * s2 / 2 - q0 * v};
}

}  // namespace

TEST_CASE("translation flow has zero action") {
  const auto sys = HamiltonianSystem::from_strings(1, {"0", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 100), 1, 1, 0);
  for (double c : {0.0, 2.5}) {
    const ActionPath R = action_of(sys, point(0.3, c), path);
    CHECK(R.values.size() == 101);
    for (double v : R.values) CHECK(std::abs(v) <= 1e-12);
  }
}

TEST_CASE("zero-noise free particle: R_t = p0^2 t / 2") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2"});
  const NoisePath path = sample_path(TimeGrid(1.5, 30), 0, 0, 0);
  const ActionPath R = action_of(sys, point(0.0, 2.0), path);
  for (int k = 0; k <= 30; ++k) CHECK(R.values[k] == doctest::Approx(2.0 * path.grid.time(k)).epsilon(1e-13));
}

TEST_CASE("accumulated action agrees with the stepper's increments") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 64), 1, 5, 0);
  const ActionPath R = action_of(sys, point(0.1, 0.2), path);
  MidpointStepper stepper(sys);
  const FlowEnd end = integrate_prefix(stepper, point(0.1, 0.2).stacked(), path, 64, false);
  CHECK(std::abs(R.values[64] - end.action) <= 1e-12);
}

TEST_CASE("action gradient closed forms") {
  SUBCASE("k = 0 is zero") {
    const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
    const NoisePath path = sample_path(TimeGrid(1.0, 8), 1, 0, 0);
    const Trajectory tr = integrate_flow(sys, point(0.4, 0.3), path, {}, true);
    CHECK(action_gradient(tr, 0).stacked().norm() == 0.0);
    CHECK(fd_action_gradient(sys, point(0.4, 0.3), path, 0).stacked().norm() == 0.0);
  }
  SUBCASE("translation flow") {
    const auto sys = HamiltonianSystem::from_strings(1, {"0", "p1"});
    const NoisePath path = sample_path(TimeGrid(1.0, 32), 1, 0, 0);
    const Trajectory tr = integrate_flow(sys, point(0.4, 0.3), path, {}, true);
    CHECK(action_gradient(tr, 32).stacked().norm() == 0.0);
  }
  SUBCASE("zero-noise free particle: (0, p0 t)") {
    const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2"});
    const NoisePath path = sample_path(TimeGrid(1.0, 10), 0, 0, 0);
    const Trajectory tr = integrate_flow(sys, point(0.4, 0.3), path, {}, true);
    const CotangentVector g = action_gradient(tr, 10);
    CHECK(std::abs(g.dq(0)) <= 1e-14);
    CHECK(g.dp(0) == doctest::Approx(0.3));
  }
  SUBCASE("missing Jacobians") {
    const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2"});
    const NoisePath path = sample_path(TimeGrid(1.0, 10), 0, 0, 0);
    CHECK_THROWS_AS(action_gradient(integrate_flow(sys, point(0, 0), path), 1), StateError);
  }
}

TEST_CASE("zero noise oscillator: dR matches the classical action derivative") {
  const auto sys = HamiltonianSystem::from_strings(1, {"(p1^2 + q1^2)/2"});
  const NoisePath path = sample_path(TimeGrid(1.0, 4096), 0, 0, 0);
  const Trajectory tr = integrate_flow(sys, point(0.7, -0.4), path, {}, true);
  const Eigen::Vector2d exact = oscillator_dR(0.7, -0.4, 1.0);
  CHECK((action_gradient(tr, 4096).stacked() - exact).lpNorm<Eigen::Infinity>() <= 1e-8);
  const Eigen::VectorXd fd = fd_action_gradient(sys, point(0.7, -0.4), path, 4096).stacked();
  CHECK((fd - exact).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("property: dR identity on random pendulum draws") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::uint64_t m = 0; m < 20; ++m) {
    const NoisePath path = sample_path(TimeGrid(1.0, 128), 1, 99, m);
    const PhaseState z0 = point(u(rng), u(rng));
    const Trajectory tr = integrate_flow(sys, z0, path, {}, true);
    const Eigen::VectorXd a = action_gradient(tr, 128).stacked();
    const Eigen::VectorXd b = fd_action_gradient(sys, z0, path, 128).stacked();
    CHECK((a - b).norm() / (1.0 + a.norm()) <= 1e-5);
  }
}

TEST_CASE("property: action is additive over path concatenation") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 100), 1, 3, 4);
  const Trajectory tr = integrate_flow(sys, point(0.5, 0.1), path);
  const ActionPath R = accumulate_action(tr, path, sys);
  const int m = 37;
  NoisePath tail;
  tail.grid = TimeGrid(1.0 - path.grid.time(m), 100 - m);
  tail.r = 1;
  tail.increments = path.increments.rightCols(100 - m);
  const Trajectory tr2 = integrate_flow(sys, tr.state(m), tail);
  const ActionPath R2 = accumulate_action(tr2, tail, sys);
  CHECK(std::abs(R.values[100] - (R.values[m] + R2.values.back())) <= 1e-13);
}

TEST_CASE("oscillator period: int p dq is the enclosed area") {
  const auto sys = HamiltonianSystem::from_strings(1, {"(p1^2 + q1^2)/2"});
  const int K = 8192;
  const NoisePath path = sample_path(TimeGrid(2 * std::numbers::pi, K), 0, 0, 0);
  const Trajectory tr = integrate_flow(sys, point(1.0, 0.0), path);
  const ActionPath R = accumulate_action(tr, path, sys);
  // R = int p dq - int h dt with h = 1/2 conserved.
  const double area = R.values.back() + 0.5 * 2 * std::numbers::pi;
  CHECK(std::abs(area - std::numbers::pi) <= 1e-6);
}

TEST_CASE("dR-hat two routes agree") {
  const auto pend = HamiltonianSystem::from_strings(1, {"p1^2/2 + cos(q1)", "p1"});
  const auto trans = HamiltonianSystem::from_strings(1, {"0", "p1"});
  const NoisePath path = sample_path(TimeGrid(1.0, 64), 1, 6, 0);
  CHECK(hat_r_gradient_check(pend, point(0.3, 0.2), path, 0) == 0.0);
  const Trajectory tt = integrate_flow(trans, point(0.3, 0.2), path);
  CHECK(hat_r_gradient_check(trans, tt.state(64), path, 64) <= 1e-10);
  for (std::uint64_t m = 0; m < 5; ++m) {
    const NoisePath p = sample_path(TimeGrid(1.0, 64), 1, 6, m);
    const Trajectory tr = integrate_flow(pend, point(0.3, 0.2), p);
    CHECK(hat_r_gradient_check(pend, tr.state(64), p, 64) <= 1e-6);
  }
}

TEST_CASE("action CSV") {
  const auto sys = HamiltonianSystem::from_strings(1, {"p1^2/2"});
  const NoisePath path = sample_path(TimeGrid(1.0, 2), 0, 0, 0);
  std::ostringstream os;
  write_csv(os, action_of(sys, point(0, 1), path));
  CHECK(os.str() == "k,t_k,R_k\n0,0,0\n1,0.5,0.25\n2,1,0.5\n");
}
