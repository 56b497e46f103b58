#pragma once

#include "shj/integrator.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace shj {

/// Graph L_f = {(a, grad f(a))} of df for a q-only phase-space field f.
class LagrangianSection {
 public:
  LagrangianSection() = default;
  explicit LagrangianSection(ScalarField f);
  static LagrangianSection from_string(const std::string& source, int n);

  int dimension() const { return f_.dimension(); }
  const ScalarField& field() const { return f_; }

  double value(const Eigen::Ref<const Eigen::VectorXd>& a) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& a) const;
  Eigen::MatrixXd hessian(const Eigen::Ref<const Eigen::VectorXd>& a) const;

 private:
  ScalarField f_;
};

/// (a, grad f(a)).
PhaseState lift(const LagrangianSection& section, const Eigen::Ref<const Eigen::VectorXd>& a);

struct ShootingConfig {
  SchemeConfig scheme;
  double tolerance = 1e-12;   // on |q(u_k) - x|_inf, scaled by max(1, |x|_inf)
  int max_iterations = 25;
  double det_epsilon = 1e-8;  // truncate once d_k <= det_epsilon
};

/// One solved node of the shooting problem q(phi_{t_k}(a, grad f(a))) = x.
struct ShootingNode {
  int k = 0;
  Eigen::VectorXd a;      // base point, psi_k = lift(a)
  Eigen::VectorXd u;      // phi_{t_k}(psi_k), stacked
  double det = 1.0;       // det(J_qq + J_qp Hess f(a))
  double action = 0.0;    // R_{t_k}(psi_k)
  double s_tilde = 0.0;   // R + f(a)
  double error = 0.0;     // |q(u) - x|_inf
  int iterations = 0;
};

struct ShootingPath {
  TimeGrid grid;
  Eigen::VectorXd x;
  std::vector<ShootingNode> nodes;  // solved nodes before truncation, ascending k
  int xi = 0;                       // first truncated node; grid.steps + 1 when none
  std::string truncation_reason;

  bool truncated() const { return xi <= grid.steps; }
  /// Solved entry for node k, or nullptr.
  const ShootingNode* find(int k) const;
};

/// Shoots at every node 0..K with warm starts. The first Newton residual at node k extends
/// the converged flow of node k-1 by one step; every correction re-integrates from t = 0.
ShootingPath shoot(const HamiltonianSystem& system, const LagrangianSection& section,
                   const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                   const ShootingConfig& cfg = {});

/// Shoots only at the ascending `targets`. The determinant is still monitored at every
/// intermediate node along each converged flow, so truncation is detected between targets.
ShootingPath shoot_nodes(const HamiltonianSystem& system, const LagrangianSection& section,
                         const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                         const std::vector<int>& targets, const ShootingConfig& cfg = {});

/// S~_k = R_{t_k}(psi_k) + f(a_k) at every node; shoot() already fills it.
ShootingPath projected_action(const HamiltonianSystem& system, const LagrangianSection& section,
                              const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                              const ShootingConfig& cfg = {});

enum class DerivativeMode { formula, fd };

/// dS~_k/dx. formula: p(u_k). fd: central differences of S~_k re-shooting at x +- h_fd e_i on
/// the same path. Throws TruncationMismatch when any required shoot truncates at or before k.
Eigen::VectorXd d_s_tilde(const HamiltonianSystem& system, const LagrangianSection& section,
                          const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path, int k,
                          DerivativeMode mode, const ShootingConfig& cfg = {}, double h_fd = 1e-4);

/// Formula and fd modes of dS~/dx at every node before truncation, from three every-node
/// shoots per axis (x and x +- h_fd e_i). Throws TruncationMismatch when a probe truncates
/// before the base shoot.
struct DerivativeComparison {
  std::vector<int> nodes;
  Eigen::MatrixXd formula;  // n x nodes.size()
  Eigen::MatrixXd fd;       // n x nodes.size()
  double max_relative = 0.0;  // max_k |formula - fd|_inf / max(1, |formula|_inf)
};

DerivativeComparison compare_d_s_tilde(const HamiltonianSystem& system, const LagrangianSection& section,
                                       const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                                       const ShootingConfig& cfg = {}, double h_fd = 1e-4);

struct HjResidual {
  ShootingPath shooting;
  std::vector<double> values;  // residual_k for the solved nodes
  double max_abs = 0.0;
};

/// residual_k = S~_k - f(x) + sum_{l<k} sum_j h_j(t_mid, x, p_bar_l) dX^j_l with
/// p_bar_l = (p(u_l) + p(u_{l+1}))/2.
HjResidual hj_residual(const HamiltonianSystem& system, const LagrangianSection& section,
                       const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                       const ShootingConfig& cfg = {});

/// Residuals for an existing every-node shooting path.
std::vector<double> hj_residual_values(const HamiltonianSystem& system, const LagrangianSection& section,
                                       const NoisePath& path, const ShootingPath& shooting);

/// CSV columns k,t_k,a1..an,p1..pn,d_k,S_tilde_k,residual_k (residual blank when absent).
void write_csv(std::ostream& os, const ShootingPath& shooting, const std::vector<double>* residual = nullptr);

}  // namespace shj
