#include "shj/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace shj {

MidpointStepper::MidpointStepper(const HamiltonianSystem& system, SchemeConfig cfg)
    : system_(system), cfg_(cfg), dim_(2 * system.n) {
  if (!(cfg_.tolerance > 0.0) || cfg_.max_iterations < 1) {
    throw StateError("scheme tolerance must be > 0 and max_iterations >= 1");
  }
  const int m = dim_ + 1;
  grad_.resize(m);
  hess_.resize(m, m);
  mid_.resize(dim_);
  f_.resize(dim_);
  w_.resize(dim_);
  w_next_.resize(dim_);
  z0_.resize(dim_);
  df_.resize(dim_, dim_);
  lhs_.resize(dim_, dim_);
  rhs_.resize(dim_, dim_);
}

void MidpointStepper::drift(double t, const Eigen::VectorXd& w, const Eigen::Ref<const Eigen::VectorXd>& dX,
                            Eigen::VectorXd& out, Eigen::MatrixXd* jac, double* h_sum) {
  const int n = system_.n;
  out.setZero();
  if (jac) jac->setZero();
  double hs = 0.0;
  for (int j = 0; j <= system_.r; ++j) {
    const double dx = dX(j);
    if (dx == 0.0) continue;
    const ScalarField& h = system_.h[j];
    const double v = jac ? h.hessian(t, w, grad_, hess_) : h.gradient(t, w, grad_);
    out.head(n).noalias() += dx * grad_.segment(n, n);
    out.tail(n).noalias() -= dx * grad_.head(n);
    if (jac) {
      jac->topRows(n).noalias() += dx * hess_.block(n, 0, n, dim_);
      jac->bottomRows(n).noalias() -= dx * hess_.block(0, 0, n, dim_);
    }
    hs += v * dx;
  }
  if (h_sum) *h_sum = hs;
}

void MidpointStepper::newton_solve(const Eigen::VectorXd& z, double t_mid,
                                   const Eigen::Ref<const Eigen::VectorXd>& dX, Eigen::VectorXd& w, int node) {
  ++stats_.newton_fallbacks;
  for (int it = 0; it < cfg_.max_iterations; ++it) {
    mid_ = 0.5 * (z + w);
    drift(t_mid, mid_, dX, f_, &df_, nullptr);
    lhs_ = Eigen::MatrixXd::Identity(dim_, dim_) - 0.5 * df_;
    const Eigen::VectorXd residual = w - z - f_;
    const Eigen::VectorXd delta = lhs_.partialPivLu().solve(residual);
    w -= delta;
    if (!w.allFinite()) break;
    if (delta.lpNorm<Eigen::Infinity>() <= cfg_.tolerance * std::max(1.0, w.lpNorm<Eigen::Infinity>())) return;
  }
  throw StepDivergence("implicit midpoint solve did not converge", static_cast<std::size_t>(node));
}

void MidpointStepper::step(Eigen::Ref<Eigen::VectorXd> z, double t_start, const Eigen::Ref<const Eigen::VectorXd>& dX,
                           Eigen::MatrixXd* step_map, double* action_increment, int node) {
  if (dX.size() != system_.r + 1) throw DimensionError("increment vector must have r + 1 entries");
  if (z.size() != dim_) throw DimensionError("state has wrong dimension");
  if (cfg_.scheme == Scheme::euler_heun) {
    step_euler_heun(z, t_start, dX, step_map, action_increment);
    return;
  }
  const int n = system_.n;
  const double t_mid = t_start + 0.5 * dX(0);
  z0_ = z;

  // Explicit Euler predictor, then fixed-point iteration on w = z + F((z + w)/2).
  drift(t_mid, z0_, dX, f_, nullptr, nullptr);
  w_ = z0_ + f_;
  bool converged = false;
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < cfg_.max_iterations) {
    ++it;
    mid_ = 0.5 * (z0_ + w_);
    drift(t_mid, mid_, dX, f_, nullptr, nullptr);
    w_next_ = z0_ + f_;
    const double diff = (w_next_ - w_).lpNorm<Eigen::Infinity>();
    w_.swap(w_next_);
    if (!w_.allFinite()) break;
    if (diff <= cfg_.tolerance * std::max(1.0, w_.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
    if (it >= 3 && diff > 0.9 * prev) break;  // not contracting
    prev = diff;
  }
  stats_.fixed_point_iterations += it;
  stats_.max_iterations_in_step = std::max(stats_.max_iterations_in_step, it);
  if (!converged) {
    if (!w_.allFinite()) w_ = z0_;
    newton_solve(z0_, t_mid, dX, w_, node);
  }

  // One last evaluation at the converged midpoint supplies the state, tangent map and action.
  mid_ = 0.5 * (z0_ + w_);
  double h_sum = 0.0;
  drift(t_mid, mid_, dX, f_, step_map ? &df_ : nullptr, &h_sum);
  z = z0_ + f_;
  if (!z.allFinite()) throw StepDivergence("non-finite state", static_cast<std::size_t>(node));

  if (step_map) {
    lhs_ = Eigen::MatrixXd::Identity(dim_, dim_) - 0.5 * df_;
    rhs_ = Eigen::MatrixXd::Identity(dim_, dim_) + 0.5 * df_;
    *step_map = lhs_.partialPivLu().solve(rhs_);
  }
  if (action_increment) {
    const double p_dq = 0.5 * (z0_.tail(n) + z.tail(n)).dot(z.head(n) - z0_.head(n));
    *action_increment = p_dq - h_sum;
  }
}

void MidpointStepper::step_euler_heun(Eigen::Ref<Eigen::VectorXd> z, double t_start,
                                      const Eigen::Ref<const Eigen::VectorXd>& dX, Eigen::MatrixXd* step_map,
                                      double* action_increment) {
  const int n = system_.n;
  z0_ = z;
  drift(t_start, z0_, dX, f_, step_map ? &df_ : nullptr, nullptr);
  w_ = z0_ + f_;  // predictor
  Eigen::MatrixXd d0;
  if (step_map) d0 = df_;
  w_next_ = f_;
  drift(t_start + dX(0), w_, dX, f_, step_map ? &df_ : nullptr, nullptr);
  z = z0_ + 0.5 * (w_next_ + f_);
  if (step_map) {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim_, dim_);
    *step_map = eye + 0.5 * (d0 + df_ * (eye + d0));
  }
  if (action_increment) {
    mid_ = 0.5 * (z0_ + Eigen::VectorXd(z));
    double h_sum = 0.0;
    drift(t_start + 0.5 * dX(0), mid_, dX, f_, nullptr, &h_sum);
    *action_increment = mid_.tail(n).dot(z.head(n) - z0_.head(n)) - h_sum;
  }
  ++stats_.fixed_point_iterations;
}

PhaseState step_midpoint(const HamiltonianSystem& system, const PhaseState& z, double t_k,
                         const Eigen::Ref<const Eigen::VectorXd>& dX, const SchemeConfig& cfg) {
  MidpointStepper stepper(system, cfg);
  Eigen::VectorXd w = z.stacked();
  stepper.step(w, t_k, dX);
  return PhaseState::from_stacked(w);
}

Trajectory integrate_flow(const HamiltonianSystem& system, const PhaseState& z0, const NoisePath& path,
                          const SchemeConfig& cfg, bool with_jacobian) {
  if (system.r != path.r) throw DimensionError("system and noise path have different channel counts");
  if (z0.dimension() != system.n) throw DimensionError("initial state has wrong dimension");
  const int K = path.steps();
  const int dim = 2 * system.n;
  MidpointStepper stepper(system, cfg);
  Trajectory traj;
  traj.states.resize(dim, K + 1);
  traj.states.col(0) = z0.stacked();
  Eigen::VectorXd z = traj.states.col(0);
  Eigen::MatrixXd S(dim, dim);
  if (with_jacobian) {
    traj.jacobians.reserve(K + 1);
    traj.jacobians.push_back(Eigen::MatrixXd::Identity(dim, dim));
    traj.defects.push_back(0.0);
    traj.step_defects.reserve(K);
  }
  for (int k = 0; k < K; ++k) {
    stepper.step(z, path.grid.time(k), path.step(k), with_jacobian ? &S : nullptr, nullptr, k);
    traj.states.col(k + 1) = z;
    if (with_jacobian) {
      traj.step_defects.push_back(symplectic_defect(S));
      traj.jacobians.push_back(S * traj.jacobians.back());
      traj.defects.push_back(symplectic_defect(traj.jacobians.back()));
    }
  }
  traj.stats = stepper.stats();
  return traj;
}

FlowEnd integrate_prefix(MidpointStepper& stepper, const Eigen::Ref<const Eigen::VectorXd>& z0,
                         const NoisePath& path, int k, bool with_jacobian) {
  if (k < 0 || k > path.steps()) throw DimensionError("prefix length outside the grid");
  const int dim = 2 * stepper.system().n;
  FlowEnd end;
  end.state = z0;
  Eigen::MatrixXd S(dim, dim);
  if (with_jacobian) end.jacobian = Eigen::MatrixXd::Identity(dim, dim);
  for (int i = 0; i < k; ++i) {
    double dR = 0.0;
    stepper.step(end.state, path.grid.time(i), path.step(i), with_jacobian ? &S : nullptr, &dR, i);
    end.action += dR;
    if (with_jacobian) end.jacobian = S * end.jacobian;
  }
  return end;
}

FlowEnd inverse_flow(const HamiltonianSystem& system, const Eigen::Ref<const Eigen::VectorXd>& z_t,
                     const NoisePath& path, int up_to_k, const SchemeConfig& cfg, bool with_jacobian) {
  if (system.r != path.r) throw DimensionError("system and noise path have different channel counts");
  if (up_to_k < 0 || up_to_k > path.steps()) throw DimensionError("node index outside the grid");
  const int dim = 2 * system.n;
  MidpointStepper stepper(system, cfg);
  FlowEnd end;
  end.state = z_t;
  Eigen::MatrixXd S(dim, dim);
  if (with_jacobian) end.jacobian = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd reversed(system.r + 1);
  for (int i = up_to_k - 1; i >= 0; --i) {
    reversed = -path.step(i);
    double dR = 0.0;
    stepper.step(end.state, path.grid.time(i + 1), reversed, with_jacobian ? &S : nullptr, &dR, i);
    end.action += dR;
    if (with_jacobian) end.jacobian = S * end.jacobian;
  }
  return end;
}

PhaseState inverse_flow_point(const HamiltonianSystem& system, const PhaseState& z_t, const NoisePath& path,
                              int up_to_k, const SchemeConfig& cfg) {
  return PhaseState::from_stacked(inverse_flow(system, z_t.stacked(), path, up_to_k, cfg, false).state);
}

void write_csv(std::ostream& os, const Trajectory& traj, const TimeGrid& grid) {
  const int n = static_cast<int>(traj.states.rows()) / 2;
  os << "k,t_k";
  for (int i = 1; i <= n; ++i) os << ",q" << i;
  for (int i = 1; i <= n; ++i) os << ",p" << i;
  os << ",defect_k\n";
  char buf[40];
  for (int k = 0; k <= traj.steps(); ++k) {
    os << k;
    std::snprintf(buf, sizeof buf, ",%.17g", grid.time(k));
    os << buf;
    for (int i = 0; i < 2 * n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.states(i, k));
      os << buf;
    }
    if (traj.defects.empty()) {
      os << ",";
    } else {
      std::snprintf(buf, sizeof buf, ",%.6e", traj.defects[k]);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace shj
