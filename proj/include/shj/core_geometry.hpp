#pragma once

#include "shj/errors.hpp"
#include "shj/scalar_field.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace shj {

/// A point (q, p) of T*R^n in Darboux coordinates.
struct PhaseState {
  Eigen::VectorXd q;
  Eigen::VectorXd p;

  PhaseState() = default;
  PhaseState(Eigen::VectorXd q_, Eigen::VectorXd p_);

  /// Splits a stacked (q, p) vector of even length.
  static PhaseState from_stacked(const Eigen::Ref<const Eigen::VectorXd>& z);

  int dimension() const { return static_cast<int>(q.size()); }
  Eigen::VectorXd stacked() const;
};

/// Tangent vector (q-dot, p-dot) at a phase point.
struct TangentVector {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
};

/// One-form components in the (dq, dp) basis.
struct CotangentVector {
  Eigen::VectorXd dq;
  Eigen::VectorXd dp;

  static CotangentVector from_stacked(const Eigen::Ref<const Eigen::VectorXd>& a);
  Eigen::VectorXd stacked() const;
};

/// Stochastic Hamiltonian system h = (h_0, h_1, ..., h_r) on T*R^n. h_0 pairs with time,
/// h_j (j >= 1) with the j-th Brownian channel.
struct HamiltonianSystem {
  int n = 0;
  int r = 0;
  std::vector<ScalarField> h;

  HamiltonianSystem() = default;
  HamiltonianSystem(int n, std::vector<ScalarField> channels);

  /// Builds from DSL strings h_0..h_r in the phase variable space.
  static HamiltonianSystem from_strings(int n, const std::vector<std::string>& channels);
};

/// Standard symplectic matrix [[0, I], [-I, 0]] for dq ^ dp blocks.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> symplectic_matrix(int n) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> omega =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(2 * n, 2 * n);
  omega.topRightCorner(n, n).setIdentity();
  omega.bottomLeftCorner(n, n) = -Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n);
  return omega;
}

/// Max-norm of J^T Omega J - Omega.
template <typename Derived>
typename Derived::Scalar symplectic_defect(const Eigen::MatrixBase<Derived>& J) {
  using Scalar = typename Derived::Scalar;
  if (J.rows() != J.cols() || J.rows() % 2 != 0 || J.rows() == 0) {
    throw DimensionError("symplectic_defect needs a square matrix of even size");
  }
  const auto omega = symplectic_matrix<Scalar>(static_cast<int>(J.rows() / 2));
  return (J.transpose() * omega * J - omega).cwiseAbs().maxCoeff();
}

/// Applies Omega to a stacked (q, p) vector without forming the matrix: (p, -q).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_symplectic(
    const Eigen::MatrixBase<Derived>& v) {
  const Eigen::Index n = v.size() / 2;
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(v.size());
  out.head(n) = v.tail(n);
  out.tail(n) = -v.head(n);
  return out;
}

/// X_h = (dh/dp, -dh/dq), the field with i_{X_h} omega = dh for omega = -d(p dq).
TangentVector hamiltonian_vector_field(const ScalarField& field, double t, const PhaseState& z);

/// {f, g} = sum_i df/dq^i dg/dp_i - df/dp_i dg/dq^i  (equals df(X_g)).
double poisson_bracket(const ScalarField& f, const ScalarField& g, double t, const PhaseState& z);

/// Canonical one-form theta = p dq evaluated on v.
double liouville_pairing(const PhaseState& z, const TangentVector& v);

/// theta at z in (dq, dp) components: (p, 0).
CotangentVector liouville_form(const PhaseState& z);

}  // namespace shj
