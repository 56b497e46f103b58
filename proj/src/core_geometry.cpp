#include "shj/core_geometry.hpp"

#include <cmath>

namespace shj {

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw EvaluationError(std::string("non-finite ") + what);
}

}  // namespace

PhaseState::PhaseState(Eigen::VectorXd q_, Eigen::VectorXd p_) : q(std::move(q_)), p(std::move(p_)) {
  if (q.size() != p.size() || q.size() < 1) {
    throw DimensionError("phase state needs q and p of equal length >= 1");
  }
  require_finite(q, "configuration");
  require_finite(p, "momentum");
}

PhaseState PhaseState::from_stacked(const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() % 2 != 0) throw DimensionError("stacked phase vector has odd length");
  const Eigen::Index n = z.size() / 2;
  return {z.head(n), z.tail(n)};
}

Eigen::VectorXd PhaseState::stacked() const {
  Eigen::VectorXd z(2 * q.size());
  z << q, p;
  return z;
}

CotangentVector CotangentVector::from_stacked(const Eigen::Ref<const Eigen::VectorXd>& a) {
  const Eigen::Index n = a.size() / 2;
  return {a.head(n), a.tail(n)};
}

Eigen::VectorXd CotangentVector::stacked() const {
  Eigen::VectorXd a(2 * dq.size());
  a << dq, dp;
  return a;
}

HamiltonianSystem::HamiltonianSystem(int n_, std::vector<ScalarField> channels)
    : n(n_), r(static_cast<int>(channels.size()) - 1), h(std::move(channels)) {
  if (h.empty()) throw DimensionError("a Hamiltonian system needs at least h_0");
  for (const auto& f : h) {
    if (f.dimension() != n || f.space() != VariableSpace::phase) {
      throw DimensionError("all Hamiltonian components must be phase fields of dimension " +
                           std::to_string(n));
    }
  }
}

HamiltonianSystem HamiltonianSystem::from_strings(int n, const std::vector<std::string>& channels) {
  std::vector<ScalarField> fields;
  fields.reserve(channels.size());
  for (const auto& s : channels) fields.push_back(make_field(s, n));
  return {n, std::move(fields)};
}

TangentVector hamiltonian_vector_field(const ScalarField& field, double t, const PhaseState& z) {
  const int n = z.dimension();
  if (field.dimension() != n) throw DimensionError("field and state dimensions differ");
  Eigen::VectorXd g(field.slots());
  field.gradient(t, z.stacked(), g);
  TangentVector v{g.segment(n, n), -g.head(n)};
  require_finite(v.q, "vector field");
  require_finite(v.p, "vector field");
  return v;
}

double poisson_bracket(const ScalarField& f, const ScalarField& g, double t, const PhaseState& z) {
  const int n = z.dimension();
  if (f.dimension() != n || g.dimension() != n) {
    throw DimensionError("poisson_bracket: field and state dimensions differ");
  }
  const Eigen::VectorXd x = z.stacked();
  Eigen::VectorXd gf(f.slots()), gg(g.slots());
  f.gradient(t, x, gf);
  g.gradient(t, x, gg);
  return gf.head(n).dot(gg.segment(n, n)) - gf.segment(n, n).dot(gg.head(n));
}

double liouville_pairing(const PhaseState& z, const TangentVector& v) {
  if (v.q.size() != z.p.size()) throw DimensionError("liouville_pairing: dimension mismatch");
  return z.p.dot(v.q);
}

CotangentVector liouville_form(const PhaseState& z) {
  return {z.p, Eigen::VectorXd::Zero(z.p.size())};
}

}  // namespace shj
