#pragma once

#include "shj/core_geometry.hpp"
#include "shj/noise.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace shj {

enum class Scheme {
  midpoint,    // implicit Stratonovich midpoint (production)
  euler_heun,  // explicit predictor-corrector, comparison only
};

struct SchemeConfig {
  double tolerance = 1e-13;
  int max_iterations = 64;
  double defect_tolerance = 1e-9;
  Scheme scheme = Scheme::midpoint;
};

struct SolverStats {
  long fixed_point_iterations = 0;
  int max_iterations_in_step = 0;
  int newton_fallbacks = 0;
};

/// Flow states, optional tangent maps and defects along one noise path.
struct Trajectory {
  Eigen::MatrixXd states;                  // 2n x (K + 1), column k is Gamma_k stacked (q, p)
  std::vector<Eigen::MatrixXd> jacobians;  // J_k, empty unless requested
  std::vector<double> step_defects;        // symplectic defect of each step map (K entries)
  std::vector<double> defects;             // symplectic defect of J_k (K + 1 entries)
  SolverStats stats;

  int steps() const { return static_cast<int>(states.cols()) - 1; }
  PhaseState state(int k) const { return PhaseState::from_stacked(states.col(k)); }
  bool has_jacobians() const { return !jacobians.empty(); }
};

/// One-step solver with reusable scratch storage. Not thread-safe; use one per thread.
class MidpointStepper {
 public:
  MidpointStepper(const HamiltonianSystem& system, SchemeConfig cfg = {});

  /// Advances the stacked state z across one step starting at time t_start with
  /// increments dX (length r + 1; dX(0) is the time increment, the midpoint time is
  /// t_start + dX(0)/2). Optionally writes the step's tangent map and the action increment
  /// p_mid . dq - sum_j h_j(mid) dX^j. `node` labels StepDivergence.
  void step(Eigen::Ref<Eigen::VectorXd> z, double t_start, const Eigen::Ref<const Eigen::VectorXd>& dX,
            Eigen::MatrixXd* step_map = nullptr, double* action_increment = nullptr, int node = 0);

  const SolverStats& stats() const { return stats_; }
  const HamiltonianSystem& system() const { return system_; }
  const SchemeConfig& config() const { return cfg_; }

 private:
  // F(w) = sum_j X_{h_j}(t, w) dX^j; optionally its Jacobian.
  void drift(double t, const Eigen::VectorXd& w, const Eigen::Ref<const Eigen::VectorXd>& dX,
             Eigen::VectorXd& out, Eigen::MatrixXd* jac, double* h_sum);
  void newton_solve(const Eigen::VectorXd& z, double t_mid, const Eigen::Ref<const Eigen::VectorXd>& dX,
                    Eigen::VectorXd& w, int node);
  void step_euler_heun(Eigen::Ref<Eigen::VectorXd> z, double t_start,
                       const Eigen::Ref<const Eigen::VectorXd>& dX, Eigen::MatrixXd* step_map,
                       double* action_increment);

  const HamiltonianSystem& system_;
  SchemeConfig cfg_;
  SolverStats stats_;
  int dim_;
  Eigen::VectorXd grad_, mid_, f_, w_, w_next_, z0_;
  Eigen::MatrixXd hess_, df_, lhs_, rhs_;
};

/// Single midpoint step from z at time t_k with increments dX.
PhaseState step_midpoint(const HamiltonianSystem& system, const PhaseState& z, double t_k,
                         const Eigen::Ref<const Eigen::VectorXd>& dX, const SchemeConfig& cfg = {});

/// Integrates Gamma from z0 along the whole path. With `with_jacobian`, J_{k+1} = S_k J_k where
/// S_k = (I - M_k/2)^{-1}(I + M_k/2) is the exact linearization of the converged step.
Trajectory integrate_flow(const HamiltonianSystem& system, const PhaseState& z0, const NoisePath& path,
                          const SchemeConfig& cfg = {}, bool with_jacobian = false);

/// Result of integrating a path prefix without storing the trajectory.
struct FlowEnd {
  Eigen::VectorXd state;     // Gamma_k stacked
  Eigen::MatrixXd jacobian;  // J_k (empty unless requested)
  double action = 0.0;       // R_k
};

/// Integrates nodes 0..k, accumulating the action on the way.
FlowEnd integrate_prefix(MidpointStepper& stepper, const Eigen::Ref<const Eigen::VectorXd>& z0,
                         const NoisePath& path, int k, bool with_jacobian);

/// phi_{t_k}^{-1}(z_t): the steps of nodes k-1..0 taken with negated increments.
PhaseState inverse_flow_point(const HamiltonianSystem& system, const PhaseState& z_t, const NoisePath& path,
                              int up_to_k, const SchemeConfig& cfg = {});

/// As above, also returning the tangent map of the inverse flow at z_t.
FlowEnd inverse_flow(const HamiltonianSystem& system, const Eigen::Ref<const Eigen::VectorXd>& z_t,
                     const NoisePath& path, int up_to_k, const SchemeConfig& cfg, bool with_jacobian);

/// CSV columns k,t_k,q1..qn,p1..pn,defect_k.
void write_csv(std::ostream& os, const Trajectory& traj, const TimeGrid& grid);

}  // namespace shj
