#include <doctest.h>

#include "shj/feynman_kac.hpp"

#include <array>
#include <cmath>
#include <sstream>

using namespace shj;

namespace {

FkConfig base_config(const std::string& V, const std::string& f, int paths, int steps, double t_end) {
  FkConfig cfg;
  cfg.V = make_field(V, 1);
  cfg.f = make_field(f, 1);
  cfg.paths = paths;
  cfg.grid = TimeGrid(t_end, steps);
  cfg.seed = 1234;
  cfg.points = {Eigen::VectorXd::Constant(1, 0.0)};
  return cfg;
}

// Independent oracle for h0 = p^2/2 + kappa q^2/2, h1 = p, f = 0: the midpoint map is affine,
// z' = C z + d dB with C = (I - A dt/2)^{-1}(I + A dt/2), so S~ is a quadratic polynomial in the
// increments and 3-point Gauss-Hermite quadrature over each increment is exact.
double oracle_mean_s_tilde(double kappa, double x, double t_end, int K) {
  const double dt = t_end / K;
  Eigen::Matrix2d A;
  A << 0, 1, -kappa, 0;
  const Eigen::Matrix2d L = Eigen::Matrix2d::Identity() - 0.5 * dt * A;
  const Eigen::Matrix2d C = L.inverse() * (Eigen::Matrix2d::Identity() + 0.5 * dt * A);
  const Eigen::Vector2d d = L.inverse() * Eigen::Vector2d(1.0, 0.0);
  const std::array<double, 3> nodes{-std::sqrt(3.0), 0.0, std::sqrt(3.0)};
  const std::array<double, 3> weights{1.0 / 6, 2.0 / 3, 1.0 / 6};
  long total = 1;
  for (int k = 0; k < K; ++k) total *= 3;
  double mean = 0.0;
  std::vector<double> dB(K);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    double w = 1.0;
    for (int k = 0; k < K; ++k) {
      dB[k] = std::sqrt(dt) * nodes[rest % 3];
      w *= weights[rest % 3];
      rest /= 3;
    }
    // z_K = M (a, 0) + c; solve q_K = x for a.
    Eigen::Matrix2d M = Eigen::Matrix2d::Identity();
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int k = 0; k < K; ++k) {
      M = C * M;
      c = C * c + d * dB[k];
    }
    const double a = (x - c(0)) / M(0, 0);
    Eigen::Vector2d z(a, 0.0);
    double R = 0.0;
    for (int k = 0; k < K; ++k) {
      const Eigen::Vector2d zn = C * z + d * dB[k];
      const Eigen::Vector2d mid = 0.5 * (z + zn);
      const double h0 = 0.5 * mid(1) * mid(1) + 0.5 * kappa * mid(0) * mid(0);
      R += mid(1) * (zn(0) - z(0)) - h0 * dt - mid(1) * dB[k];
      z = zn;
    }
    mean += w * R;
  }
  return mean;
}

}  // namespace

TEST_CASE("assembled system") {
  const FkConfig cfg = base_config("q1^2/2", "0", 100, 4, 1.0);
  const HamiltonianSystem sys = fk_system(cfg);
  CHECK(sys.r == 1);
  Eigen::Vector2d z(2.0, 3.0);
  CHECK(sys.h[0].value(0.0, z) == doctest::Approx(4.5 + 2.0));
  CHECK(sys.h[1].value(0.0, z) == 3.0);
}

TEST_CASE("V = 0, f = 0: Phi = 1 exactly") {
  FkReport rep = fk_estimate(base_config("0", "0", 100, 16, 0.5));
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].mean_s == 0.0);
  CHECK(rep.entries[0].phi_hat == 1.0);
  CHECK(fk_compare(rep, [](const Eigen::VectorXd&, double) { return 1.0; }, 0.0));
  CHECK(rep.entries[0].abs_err == 0.0);
}

TEST_CASE("V = 0, f = q: Phi(0, 0.5) near e^0.25") {
  FkReport rep = fk_estimate(base_config("0", "q1", 2000, 32, 0.5));
  const double ref = std::exp(0.25);
  CHECK(fk_compare(rep, [&](const Eigen::VectorXd&, double) { return ref; }, 0.02));
  CHECK(rep.entries[0].phi_hat > 0.0);
  CHECK(std::abs(rep.entries[0].mean_s + 0.25) <= 4 * rep.entries[0].stderr_s);
}

TEST_CASE("quadratic V: Monte Carlo matches the Gauss-Hermite brute-force oracle") {
  const int K = 6;
  for (double x : {0.0, 0.7}) {
    FkConfig cfg = base_config("0.5*q1^2", "0", 4000, K, 0.5);
    cfg.points = {Eigen::VectorXd::Constant(1, x)};
    const FkReport rep = fk_estimate(cfg);
    const double exact = oracle_mean_s_tilde(1.0, x, 0.5, K);
    CHECK(std::abs(rep.entries[0].mean_s - exact) <= 4 * rep.entries[0].stderr_s);
  }
}

TEST_CASE("determinism across thread counts and evaluation times") {
  FkConfig cfg = base_config("0.5*q1^2", "0.2*q1", 200, 16, 0.5);
  cfg.points = {Eigen::VectorXd::Constant(1, -0.5), Eigen::VectorXd::Constant(1, 0.5)};
  cfg.times = {0.25, 0.5};
  const FkReport a = fk_estimate(cfg);
  cfg.threads = 3;
  const FkReport b = fk_estimate(cfg);
  REQUIRE(a.entries.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.entries[i].mean_s == b.entries[i].mean_s);
    CHECK(a.entries[i].stderr_s == b.entries[i].stderr_s);
  }
  CHECK(a.entries[0].t == 0.25);
  cfg.times = {0.3};
  CHECK_THROWS_AS(fk_estimate(cfg), DimensionError);
  cfg.times = {};
  cfg.paths = 99;
  CHECK_THROWS_AS(fk_estimate(cfg), ConfigError);
}

TEST_CASE("property: standard error scales as M^-1/2") {
  std::vector<double> se;
  for (int M : {100, 400, 1600}) se.push_back(fk_estimate(base_config("0", "q1", M, 8, 0.5)).entries[0].stderr_s);
  const double slope = std::log(se[2] / se[0]) / std::log(16.0);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("truncated paths are excluded and flagged") {
  const FkReport rep = fk_estimate(base_config("0", "-q1^2/2", 100, 16, 2.0));
  CHECK(rep.reliability_warning);
  CHECK(rep.entries[0].truncated > 10);
}

TEST_CASE("PDE reference closed forms") {
  const ScalarField zero = make_field("0", 1);
  const PdeSolution flat = pde_reference(zero, zero, -3, 3, 0.05, TimeGrid(0.5, 50));
  CHECK((flat.phi.array() - 1.0).abs().maxCoeff() <= 1e-12);

  const ScalarField lin = make_field("q1", 1);
  const PdeSolution sol = pde_reference(zero, lin, -8, 8, 0.01, TimeGrid(0.5, 400));
  CHECK(sol.at_time(0.0, 0.5) == doctest::Approx(std::exp(0.25)).epsilon(1e-4));
  CHECK(sol.at(0.3, 400) == doctest::Approx(std::exp(-0.3 + 0.25)).epsilon(1e-4));
  CHECK_THROWS_AS(sol.at(9.0, 0), DimensionError);
  CHECK_THROWS_AS(pde_reference(zero, lin, 1, 0, 0.1, TimeGrid(0.5, 4)), PdeError);
}

TEST_CASE("PDE reference converges at second order") {
  const ScalarField zero = make_field("0", 1);
  const ScalarField lin = make_field("q1", 1);
  const double exact = std::exp(0.25);
  std::vector<double> err;
  for (int level = 0; level < 3; ++level) {
    const double dx = 0.2 / (1 << level);
    const PdeSolution sol = pde_reference(zero, lin, -8, 8, dx, TimeGrid(0.5, 10 << level));
    err.push_back(std::abs(sol.at_time(0.0, 0.5) - exact));
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.25));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("mismatched potential is rejected by the comparator") {
  FkReport rep = fk_estimate(base_config("0", "0", 400, 16, 0.5));
  const PdeSolution wrong = pde_reference(make_field("2*q1^2 + 1", 1), make_field("0", 1), -8, 8, 0.02,
                                          TimeGrid(0.5, 200));
  CHECK_FALSE(fk_compare(rep, wrong, 0.03));
  CHECK_FALSE(rep.entries[0].pass);
}

TEST_CASE("report CSV and plot script") {
  FkReport rep = fk_estimate(base_config("0", "0", 100, 4, 0.5));
  std::ostringstream os;
  write_csv(os, rep);
  CHECK(os.str().rfind("x,t,meanS,stderr,phi_hat,phi_ref,abs_err,verdict\n0,0.5,0,0,1,,,\n", 0) == 0);
  fk_compare(rep, [](const Eigen::VectorXd&, double) { return 1.0; }, 0.0);
  std::ostringstream os2;
  write_csv(os2, rep);
  CHECK(os2.str().find(",PASS\n") != std::string::npos);
  std::ostringstream gp;
  write_plot_script(gp, "results.csv");
  CHECK(gp.str().find("'results.csv'") != std::string::npos);
}
