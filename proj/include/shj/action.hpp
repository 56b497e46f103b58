#pragma once

#include "shj/integrator.hpp"

#include <iosfwd>
#include <vector>

namespace shj {

/// Running stochastic action R_k = sum_{l<k} p_mid . dq_l - sum_j h_j(mid) dX^j_l along a trajectory.
struct ActionPath {
  TimeGrid grid;
  std::vector<double> values;  // K + 1 entries, values[0] == 0
};

/// Discrete int <theta, dGamma> - int <h(Gamma), dX> with midpoint states (Gamma_k + Gamma_{k+1})/2.
ActionPath accumulate_action(const Trajectory& traj, const NoisePath& path, const HamiltonianSystem& system);

/// dR_{t_k}(z0) = J_k^T theta(Gamma_k) - theta(z0). Throws StateError without Jacobians.
CotangentVector action_gradient(const Trajectory& traj, int k);

/// Central differences of R_k over the 2n coordinates of z0, re-integrating on the same
/// path; two-level Richardson extrapolation with steps h_fd and h_fd/2.
CotangentVector fd_action_gradient(const HamiltonianSystem& system, const PhaseState& z0, const NoisePath& path,
                                   int k, double h_fd = 1e-4, const SchemeConfig& cfg = {});

/// Max-norm difference between two routes to dR^_k at z_t (R^ = R o phi^{-1}):
/// the pullback J^{-T} dR(phi^{-1}(z_t)) and theta(z_t) - J_inv^T theta(phi^{-1}(z_t)) built from
/// the tangent map of the inverse flow.
double hat_r_gradient_check(const HamiltonianSystem& system, const PhaseState& z_t, const NoisePath& path,
                            int k, const SchemeConfig& cfg = {});

/// CSV columns k,t_k,R_k.
void write_csv(std::ostream& os, const ActionPath& action);

}  // namespace shj
