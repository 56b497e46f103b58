#pragma once

#include "shj/integrator.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace shj {

/// Partial derivatives of S(t, a, b) at one point.
struct GeneratingPartials {
  double value = 0.0;
  Eigen::VectorXd Sa, Sb;       // dS/da, dS/db
  double St = 0.0;
  Eigen::MatrixXd Saa, Sab, Sbb;  // Sab(i, l) = d2S/da_i db_l
  Eigen::VectorXd Sat, Sbt;
  double Stt = 0.0;
};

/// Type-one generating function S(t, q1, q2) in the generating variable space (a = q1, b = q2).
/// psi_t is defined implicitly by p = dS/da(t, q, q2), p2 = -dS/db(t, q, q2).
class GeneratingFunction {
 public:
  GeneratingFunction() = default;
  explicit GeneratingFunction(ScalarField S);
  static GeneratingFunction from_string(const std::string& source, int n);

  int dimension() const { return S_.dimension(); }
  const ScalarField& field() const { return S_; }

  GeneratingPartials partials(double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                              const Eigen::Ref<const Eigen::VectorXd>& q2) const;
  /// det(d2S/dq1 dq2).
  double twist(double t, const Eigen::Ref<const Eigen::VectorXd>& q1, const Eigen::Ref<const Eigen::VectorXd>& q2) const;

 private:
  ScalarField S_;
};

struct NewtonConfig {
  double tolerance = 1e-12;
  int max_iterations = 50;
  double twist_epsilon = 1e-12;
};

/// (q1, dS/dq1(t, q1, q2)).
PhaseState j_inverse(const GeneratingFunction& S, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                     const Eigen::Ref<const Eigen::VectorXd>& q2);

/// Solves p(z) = dS/dq1(t, q(z), q2) for q2 (seed q2 = q(z)) and returns (q2, -dS/dq2).
/// Throws TransformError on Newton failure or a degenerate twist.
PhaseState apply_psi(const GeneratingFunction& S, double t, const PhaseState& z, const NewtonConfig& cfg = {});

/// Inverse relation: solves P = -dS/dq2(t, q1, Q) for q1 (seed q1 = Q) and returns (q1, dS/dq1).
PhaseState apply_psi_inverse(const GeneratingFunction& S, double t, const PhaseState& Z, const NewtonConfig& cfg = {});

/// Probe set for the q1-independence test: a tensor grid of `grid_points` per axis over
/// [box_lo, box_hi]^n for q1, the same box sampled with `q2_points` per axis for q2, at `times`.
struct IndependenceProbe {
  double box_lo = -1.0;
  double box_hi = 1.0;
  int grid_points = 11;
  int q2_points = 5;
  std::vector<double> times{0.25, 0.5, 1.0};
  double tolerance = 1e-8;
};

/// K_0 = h_0(q1, dS/dq1) + dS/dt, K_j = h_j(q1, dS/dq1) for j >= 1, over (t, q1, q2).
class TransformedSystem {
 public:
  TransformedSystem(GeneratingFunction S, HamiltonianSystem system);

  int channels() const { return system_.r + 1; }
  const GeneratingFunction& generating() const { return S_; }
  const HamiltonianSystem& system() const { return system_; }

  double value(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
               const Eigen::Ref<const Eigen::VectorXd>& q2) const;
  /// dK_j/dq2.
  Eigen::VectorXd d_q2(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                       const Eigen::Ref<const Eigen::VectorXd>& q2) const;
  /// dK_j/dt at fixed (q1, q2).
  double d_t(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
             const Eigen::Ref<const Eigen::VectorXd>& q2) const;

  /// Per channel: max over (t, q2) probes of (max - min) of K_j along the q1 grid.
  std::vector<double> defects;
  double tolerance = 1e-8;
  bool independent() const;

 private:
  void eval(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1, const Eigen::Ref<const Eigen::VectorXd>& q2,
            double* value, Eigen::VectorXd* dq2, double* dt) const;

  GeneratingFunction S_;
  HamiltonianSystem system_;
};

TransformedSystem transform_hamiltonians(const GeneratingFunction& S, const HamiltonianSystem& system,
                                         const IndependenceProbe& probe = {});

struct EquilibriumReport {
  Eigen::MatrixXd mapped;       // Z_k = psi_{t_k}(Gamma_k), 2n x (K + 1)
  Eigen::MatrixXd transformed;  // (Q_k, P_k) from the transformed equations
  double max_q_drift = 0.0;     // max_k |Q_k - Q_0| of the mapped trajectory
  double max_discrepancy = 0.0; // max_k |Z_k - (Q_k, P_k)|
};

/// Integrates Gamma on `path`, maps it through psi, and integrates dQ = 0,
/// dP = -sum_j dK_j/dQ(t_mid, q1_ref, Q) dX^j from Z_0 on the same path.
/// Throws TransformError when the transformed Hamiltonians depend on q1.
EquilibriumReport equilibrium_check(const TransformedSystem& K, const PhaseState& z0, const NoisePath& path,
                                    const SchemeConfig& cfg = {}, const NewtonConfig& newton = {},
                                    double q1_ref = 0.0);

struct BracketReport {
  double commutator = 0.0;       // max |{h_i, h_j}|, 1 <= i < j <= r
  double time_condition = 0.0;   // max |{h_0, h_i} + dK_i/dt(t, q(z), Q(psi_t(z)))|
  bool independent = false;      // q1-independence of K held on its probe grid
  bool affine_admissible = true; // some S affine in q1 could satisfy independence
  std::string affine_reason;
  bool pass(double tol = 1e-6) const { return independent && commutator <= tol && time_condition <= tol; }
};

/// Evaluates the bracket conditions over probe points (t, z).
BracketReport bracket_conditions(const TransformedSystem& K, const std::vector<std::pair<double, PhaseState>>& probes,
                                 const NewtonConfig& newton = {});

/// For S = <a, g(t, b)> + c(t, b) the momentum dS/da does not depend on q1, so independence needs
/// dh_j/dq = 0 for j >= 1 and d2h_0/dq2 = 0. Checked at the probe points; false with a reason when
/// violated.
bool affine_family_admissible(const HamiltonianSystem& system,
                              const std::vector<std::pair<double, PhaseState>>& probes, std::string* reason);

/// CSV columns k,t_k,Q_mapped..,P_mapped..,Q..,P..,discrepancy_k.
void write_csv(std::ostream& os, const EquilibriumReport& report, const TimeGrid& grid);

}  // namespace shj
