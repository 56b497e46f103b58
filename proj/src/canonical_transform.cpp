#include "shj/canonical_transform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace shj {

GeneratingFunction::GeneratingFunction(ScalarField S) : S_(std::move(S)) {
  if (S_.empty()) throw StateError("generating function needs a field");
  if (S_.space() != VariableSpace::generating) {
    throw StateError("generating function must use the a1..an, b1..bn, t variables");
  }
}

GeneratingFunction GeneratingFunction::from_string(const std::string& source, int n) {
  return GeneratingFunction(make_field(source, n, VariableSpace::generating));
}

GeneratingPartials GeneratingFunction::partials(double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                                                const Eigen::Ref<const Eigen::VectorXd>& q2) const {
  const int n = dimension();
  if (q1.size() != n || q2.size() != n) throw DimensionError("generating function point has wrong dimension");
  Eigen::VectorXd x(2 * n);
  x << q1, q2;
  Eigen::VectorXd g(2 * n + 1);
  Eigen::MatrixXd H(2 * n + 1, 2 * n + 1);
  GeneratingPartials out;
  out.value = S_.hessian(t, x, g, H);
  out.Sa = g.head(n);
  out.Sb = g.segment(n, n);
  out.St = g(2 * n);
  out.Saa = H.topLeftCorner(n, n);
  out.Sab = H.block(0, n, n, n);
  out.Sbb = H.block(n, n, n, n);
  out.Sat = H.block(0, 2 * n, n, 1);
  out.Sbt = H.block(n, 2 * n, n, 1);
  out.Stt = H(2 * n, 2 * n);
  return out;
}

double GeneratingFunction::twist(double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                                 const Eigen::Ref<const Eigen::VectorXd>& q2) const {
  return partials(t, q1, q2).Sab.determinant();
}

PhaseState j_inverse(const GeneratingFunction& S, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                     const Eigen::Ref<const Eigen::VectorXd>& q2) {
  return PhaseState(q1, S.partials(t, q1, q2).Sa);
}

namespace {

// Newton on G(y) = 0 where `eval` returns (G, dG/dy).
template <typename Eval>
Eigen::VectorXd newton(Eigen::VectorXd y, const NewtonConfig& cfg, Eval eval) {
  for (int it = 0; it < cfg.max_iterations; ++it) {
    auto [G, DG] = eval(y);
    if (std::abs(DG.determinant()) <= cfg.twist_epsilon) throw TransformError("twist condition fails: d2S/dq1dq2 is singular");
    const Eigen::VectorXd delta = DG.partialPivLu().solve(G);
    y -= delta;
    if (!y.allFinite()) break;
    if (delta.lpNorm<Eigen::Infinity>() <= cfg.tolerance * std::max(1.0, y.lpNorm<Eigen::Infinity>())) return y;
  }
  throw TransformError("generating-function Newton solve did not converge");
}

}  // namespace

PhaseState apply_psi(const GeneratingFunction& S, double t, const PhaseState& z, const NewtonConfig& cfg) {
  if (z.dimension() != S.dimension()) throw DimensionError("phase point has wrong dimension");
  const Eigen::VectorXd q2 = newton(z.q, cfg, [&](const Eigen::VectorXd& y) {
    GeneratingPartials d = S.partials(t, z.q, y);
    return std::pair<Eigen::VectorXd, Eigen::MatrixXd>(d.Sa - z.p, d.Sab);
  });
  return PhaseState(q2, -S.partials(t, z.q, q2).Sb);
}

PhaseState apply_psi_inverse(const GeneratingFunction& S, double t, const PhaseState& Z, const NewtonConfig& cfg) {
  if (Z.dimension() != S.dimension()) throw DimensionError("phase point has wrong dimension");
  const Eigen::VectorXd q1 = newton(Z.q, cfg, [&](const Eigen::VectorXd& y) {
    GeneratingPartials d = S.partials(t, y, Z.q);
    return std::pair<Eigen::VectorXd, Eigen::MatrixXd>(-d.Sb - Z.p, -d.Sab.transpose());
  });
  return PhaseState(q1, S.partials(t, q1, Z.q).Sa);
}

TransformedSystem::TransformedSystem(GeneratingFunction S, HamiltonianSystem system)
    : S_(std::move(S)), system_(std::move(system)) {
  if (S_.dimension() != system_.n) throw DimensionError("generating function and system differ in n");
}

void TransformedSystem::eval(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                             const Eigen::Ref<const Eigen::VectorXd>& q2, double* value, Eigen::VectorXd* dq2,
                             double* dt) const {
  if (j < 0 || j > system_.r) throw DimensionError("channel index out of range");
  const int n = system_.n;
  const GeneratingPartials d = S_.partials(t, q1, q2);
  Eigen::VectorXd z(2 * n);
  z << q1, d.Sa;
  Eigen::VectorXd g(2 * n + 1);
  const double h = system_.h[j].gradient(t, z, g);
  const auto gp = g.segment(n, n);
  const bool drift = j == 0;
  if (value) *value = h + (drift ? d.St : 0.0);
  if (dq2) {
    *dq2 = d.Sab.transpose() * gp;
    if (drift) *dq2 += d.Sbt;
  }
  if (dt) *dt = g(2 * n) + gp.dot(d.Sat) + (drift ? d.Stt : 0.0);
}

double TransformedSystem::value(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                                const Eigen::Ref<const Eigen::VectorXd>& q2) const {
  double v = 0.0;
  eval(j, t, q1, q2, &v, nullptr, nullptr);
  return v;
}

Eigen::VectorXd TransformedSystem::d_q2(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                                        const Eigen::Ref<const Eigen::VectorXd>& q2) const {
  Eigen::VectorXd g;
  eval(j, t, q1, q2, nullptr, &g, nullptr);
  return g;
}

double TransformedSystem::d_t(int j, double t, const Eigen::Ref<const Eigen::VectorXd>& q1,
                              const Eigen::Ref<const Eigen::VectorXd>& q2) const {
  double v = 0.0;
  eval(j, t, q1, q2, nullptr, nullptr, &v);
  return v;
}

bool TransformedSystem::independent() const {
  if (defects.empty()) return false;
  return std::all_of(defects.begin(), defects.end(), [&](double d) { return d <= tolerance; });
}

namespace {

// All points of a tensor grid with `points` nodes per axis over [lo, hi]^n.
std::vector<Eigen::VectorXd> tensor_grid(int n, int points, double lo, double hi) {
  Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(points, lo, hi);
  if (points == 1) axis(0) = 0.5 * (lo + hi);
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(n, 0);
  while (true) {
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) p(i) = axis(idx[i]);
    out.push_back(p);
    int i = 0;
    while (i < n && ++idx[i] == points) idx[i++] = 0;
    if (i == n) break;
  }
  return out;
}

}  // namespace

TransformedSystem transform_hamiltonians(const GeneratingFunction& S, const HamiltonianSystem& system,
                                         const IndependenceProbe& probe) {
  if (probe.grid_points < 2 || probe.q2_points < 1 || probe.times.empty() || !(probe.box_hi > probe.box_lo)) {
    throw StateError("invalid independence probe");
  }
  TransformedSystem K(S, system);
  K.tolerance = probe.tolerance;
  const int n = system.n;
  const auto q1_grid = tensor_grid(n, probe.grid_points, probe.box_lo, probe.box_hi);
  const auto q2_grid = tensor_grid(n, probe.q2_points, probe.box_lo, probe.box_hi);
  K.defects.assign(system.r + 1, 0.0);
  for (int j = 0; j <= system.r; ++j) {
    for (double t : probe.times) {
      for (const auto& q2 : q2_grid) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& q1 : q1_grid) {
          const double v = K.value(j, t, q1, q2);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        K.defects[j] = std::max(K.defects[j], hi - lo);
      }
    }
  }
  return K;
}

EquilibriumReport equilibrium_check(const TransformedSystem& K, const PhaseState& z0, const NoisePath& path,
                                    const SchemeConfig& cfg, const NewtonConfig& newton, double q1_ref) {
  if (!K.independent()) throw TransformError("transformed Hamiltonians depend on q1");
  const HamiltonianSystem& system = K.system();
  const int n = system.n;
  const int steps = path.steps();
  const Trajectory traj = integrate_flow(system, z0, path, cfg, false);
  EquilibriumReport out;
  out.mapped.resize(2 * n, steps + 1);
  out.transformed.resize(2 * n, steps + 1);
  for (int k = 0; k <= steps; ++k) {
    out.mapped.col(k) = apply_psi(K.generating(), path.grid.time(k), traj.state(k), newton).stacked();
  }
  const Eigen::VectorXd q1 = Eigen::VectorXd::Constant(n, q1_ref);
  const Eigen::VectorXd Q = out.mapped.col(0).head(n);
  Eigen::VectorXd P = out.mapped.col(0).tail(n);
  out.transformed.col(0) = out.mapped.col(0);
  for (int k = 0; k < steps; ++k) {
    const auto dX = path.step(k);
    const double t_mid = path.grid.time(k) + 0.5 * dX(0);
    for (int j = 0; j <= system.r; ++j) {
      if (dX(j) != 0.0) P -= K.d_q2(j, t_mid, q1, Q) * dX(j);
    }
    out.transformed.col(k + 1) << Q, P;
  }
  for (int k = 0; k <= steps; ++k) {
    out.max_q_drift = std::max(out.max_q_drift, (out.mapped.col(k).head(n) - Q).lpNorm<Eigen::Infinity>());
    out.max_discrepancy =
        std::max(out.max_discrepancy, (out.mapped.col(k) - out.transformed.col(k)).lpNorm<Eigen::Infinity>());
  }
  return out;
}

bool affine_family_admissible(const HamiltonianSystem& system,
                              const std::vector<std::pair<double, PhaseState>>& probes, std::string* reason) {
  const int n = system.n;
  const int m = 2 * n + 1;
  Eigen::VectorXd g(m);
  Eigen::MatrixXd H(m, m);
  constexpr double eps = 1e-12;
  for (const auto& [t, z] : probes) {
    const Eigen::VectorXd x = z.stacked();
    for (int j = 1; j <= system.r; ++j) {
      system.h[j].gradient(t, x, g);
      if (g.head(n).lpNorm<Eigen::Infinity>() > eps) {
        if (reason) *reason = "h" + std::to_string(j) + " depends on q";
        return false;
      }
    }
    system.h[0].hessian(t, x, g, H);
    if (H.topLeftCorner(n, n).lpNorm<Eigen::Infinity>() > eps) {
      if (reason) *reason = "h0 is not affine in q";
      return false;
    }
  }
  if (reason) reason->clear();
  return true;
}

BracketReport bracket_conditions(const TransformedSystem& K, const std::vector<std::pair<double, PhaseState>>& probes,
                                 const NewtonConfig& newton) {
  const HamiltonianSystem& system = K.system();
  BracketReport out;
  out.independent = K.independent();
  out.affine_admissible = affine_family_admissible(system, probes, &out.affine_reason);
  for (const auto& [t, z] : probes) {
    for (int i = 1; i <= system.r; ++i) {
      for (int j = i + 1; j <= system.r; ++j) {
        out.commutator = std::max(out.commutator, std::abs(poisson_bracket(system.h[i], system.h[j], t, z)));
      }
    }
    if (system.r == 0) continue;
    const PhaseState Z = apply_psi(K.generating(), t, z, newton);
    for (int i = 1; i <= system.r; ++i) {
      const double c = poisson_bracket(system.h[0], system.h[i], t, z) + K.d_t(i, t, z.q, Z.q);
      out.time_condition = std::max(out.time_condition, std::abs(c));
    }
  }
  return out;
}

void write_csv(std::ostream& os, const EquilibriumReport& report, const TimeGrid& grid) {
  const int n = static_cast<int>(report.mapped.rows()) / 2;
  os << "k,t_k";
  for (int i = 1; i <= n; ++i) os << ",Q_mapped" << i;
  for (int i = 1; i <= n; ++i) os << ",P_mapped" << i;
  for (int i = 1; i <= n; ++i) os << ",Q" << i;
  for (int i = 1; i <= n; ++i) os << ",P" << i;
  os << ",discrepancy_k\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  for (Eigen::Index k = 0; k < report.mapped.cols(); ++k) {
    os << k;
    put(grid.time(static_cast<int>(k)));
    for (int i = 0; i < 2 * n; ++i) put(report.mapped(i, k));
    for (int i = 0; i < 2 * n; ++i) put(report.transformed(i, k));
    put((report.mapped.col(k) - report.transformed.col(k)).lpNorm<Eigen::Infinity>());
    os << '\n';
  }
}

}  // namespace shj
