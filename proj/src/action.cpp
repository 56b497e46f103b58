#include "shj/action.hpp"

#include <cstdio>
#include <ostream>

namespace shj {

namespace {

Eigen::VectorXd theta(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::Index n = z.size() / 2;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(z.size());
  a.head(n) = z.tail(n);
  return a;
}

}  // namespace

ActionPath accumulate_action(const Trajectory& traj, const NoisePath& path, const HamiltonianSystem& system) {
  const int K = traj.steps();
  if (K != path.steps() || path.r != system.r || traj.states.rows() != 2 * system.n) {
    throw DimensionError("trajectory, path and system do not match");
  }
  const int n = system.n;
  ActionPath out;
  out.grid = path.grid;
  out.values.assign(K + 1, 0.0);
  Eigen::VectorXd mid(2 * n);
  for (int k = 0; k < K; ++k) {
    const auto a = traj.states.col(k);
    const auto b = traj.states.col(k + 1);
    mid = 0.5 * (a + b);
    const auto dX = path.step(k);
    const double t_mid = path.grid.time(k) + 0.5 * dX(0);
    double h_term = 0.0;
    for (int j = 0; j <= system.r; ++j) {
      if (dX(j) != 0.0) h_term += system.h[j].value(t_mid, mid) * dX(j);
    }
    out.values[k + 1] = out.values[k] + mid.tail(n).dot(b.head(n) - a.head(n)) - h_term;
  }
  return out;
}

CotangentVector action_gradient(const Trajectory& traj, int k) {
  if (!traj.has_jacobians()) throw StateError("action_gradient needs a trajectory with Jacobians");
  if (k < 0 || k > traj.steps()) throw DimensionError("node index outside the trajectory");
  const Eigen::VectorXd g = traj.jacobians[k].transpose() * theta(traj.states.col(k)) - theta(traj.states.col(0));
  return CotangentVector::from_stacked(g);
}

CotangentVector fd_action_gradient(const HamiltonianSystem& system, const PhaseState& z0, const NoisePath& path,
                                   int k, double h_fd, const SchemeConfig& cfg) {
  if (!(h_fd > 0.0)) throw StateError("finite-difference step must be positive");
  MidpointStepper stepper(system, cfg);
  const Eigen::VectorXd base = z0.stacked();
  const int dim = static_cast<int>(base.size());
  auto R = [&](const Eigen::VectorXd& z) { return integrate_prefix(stepper, z, path, k, false).action; };
  auto central = [&](int i, double h) {
    Eigen::VectorXd zp = base, zm = base;
    zp(i) += h;
    zm(i) -= h;
    return (R(zp) - R(zm)) / (2.0 * h);
  };
  Eigen::VectorXd g(dim);
  for (int i = 0; i < dim; ++i) {
    g(i) = (4.0 * central(i, 0.5 * h_fd) - central(i, h_fd)) / 3.0;
  }
  return CotangentVector::from_stacked(g);
}

double hat_r_gradient_check(const HamiltonianSystem& system, const PhaseState& z_t, const NoisePath& path,
                            int k, const SchemeConfig& cfg) {
  const Eigen::VectorXd zt = z_t.stacked();
  // Route 2: tangent map of the inverse flow.
  const FlowEnd back = inverse_flow(system, zt, path, k, cfg, true);
  const Eigen::VectorXd& z0 = back.state;
  const Eigen::VectorXd via_inverse = theta(zt) - back.jacobian.transpose() * theta(z0);

  // Route 1: forward tangent map from z0, dR pulled back through phi^{-1}.
  MidpointStepper stepper(system, cfg);
  const FlowEnd fwd = integrate_prefix(stepper, z0, path, k, true);
  const Eigen::VectorXd dR = fwd.jacobian.transpose() * theta(fwd.state) - theta(z0);
  const Eigen::VectorXd via_pullback = fwd.jacobian.transpose().partialPivLu().solve(dR);

  return (via_pullback - via_inverse).lpNorm<Eigen::Infinity>();
}

void write_csv(std::ostream& os, const ActionPath& action) {
  os << "k,t_k,R_k\n";
  char buf[64];
  for (std::size_t k = 0; k < action.values.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, action.grid.time(static_cast<int>(k)), action.values[k]);
    os << buf;
  }
}

}  // namespace shj
