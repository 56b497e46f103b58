#include "shj/lagrangian_hj.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <utility>

namespace shj {

LagrangianSection::LagrangianSection(ScalarField f) : f_(std::move(f)) {
  if (f_.empty()) throw StateError("section needs a field");
  if (f_.space() != VariableSpace::phase) throw StateError("section must be a phase-space field");
  if (f_.arity().uses_second || f_.arity().uses_t) throw StateError("section f must depend on q only");
}

LagrangianSection LagrangianSection::from_string(const std::string& source, int n) {
  return LagrangianSection(make_field(source, n));
}

namespace {

Eigen::VectorXd padded(const Eigen::Ref<const Eigen::VectorXd>& a) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * a.size());
  z.head(a.size()) = a;
  return z;
}

}  // namespace

double LagrangianSection::value(const Eigen::Ref<const Eigen::VectorXd>& a) const {
  if (a.size() != dimension()) throw DimensionError("section point has wrong dimension");
  return f_.value(0.0, padded(a));
}

Eigen::VectorXd LagrangianSection::gradient(const Eigen::Ref<const Eigen::VectorXd>& a) const {
  if (a.size() != dimension()) throw DimensionError("section point has wrong dimension");
  Eigen::VectorXd g(f_.slots());
  f_.gradient(0.0, padded(a), g);
  return g.head(dimension());
}

Eigen::MatrixXd LagrangianSection::hessian(const Eigen::Ref<const Eigen::VectorXd>& a) const {
  if (a.size() != dimension()) throw DimensionError("section point has wrong dimension");
  const int m = f_.slots();
  Eigen::VectorXd g(m);
  Eigen::MatrixXd h(m, m);
  f_.hessian(0.0, padded(a), g, h);
  return h.topLeftCorner(dimension(), dimension());
}

PhaseState lift(const LagrangianSection& section, const Eigen::Ref<const Eigen::VectorXd>& a) {
  return PhaseState(a, section.gradient(a));
}

const ShootingNode* ShootingPath::find(int k) const {
  for (const auto& node : nodes) {
    if (node.k == k) return &node;
  }
  return nullptr;
}

namespace {

// Flow of lift(a) advanced node by node, with the shooting determinant monitored.
struct Flow {
  Eigen::VectorXd a, u;
  Eigen::MatrixXd J, H;
  double R = 0.0;
  int k = 0;
  int floor = -1;  // determinant checked only at nodes > floor
  int first_bad = -1;
};

class Shooter {
 public:
  Shooter(const HamiltonianSystem& system, const LagrangianSection& section,
          const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path, const ShootingConfig& cfg)
      : system_(system), section_(section), x_(x), path_(path), cfg_(cfg), stepper_(system, cfg.scheme),
        n_(system.n), S_(2 * system.n, 2 * system.n) {
    if (section.dimension() != n_ || x.size() != n_) throw DimensionError("section, point and system differ in n");
    if (path.r != system.r) throw DimensionError("system and noise path have different channel counts");
    if (cfg.max_iterations < 1 || !(cfg.tolerance > 0.0)) throw StateError("invalid shooting configuration");
    tol_ = cfg.tolerance * std::max(1.0, x_.lpNorm<Eigen::Infinity>());
  }

  ShootingPath run(const std::vector<int>& targets) {
    ShootingPath out;
    out.grid = path_.grid;
    out.x = x_;
    out.xi = path_.steps() + 1;
    int prev = -1;
    for (int k : targets) {
      if (k < 0 || k > path_.steps() || k <= prev) throw DimensionError("targets must be ascending nodes of the grid");
      prev = k;
    }
    prev = -1;
    Flow flow;
    try {
      start(flow, x_, prev);
    } catch (const Error& e) {
      out.xi = 0;
      out.truncation_reason = e.what();
      return out;
    }
    for (int k : targets) {
      ShootingNode node;
      std::string reason;
      const int bad = solve(flow, k, prev, node, reason);
      if (bad >= 0) {
        out.xi = bad;
        out.truncation_reason = reason;
        return out;
      }
      out.nodes.push_back(std::move(node));
      prev = k;
    }
    return out;
  }

 private:
  void start(Flow& f, const Eigen::VectorXd& a, int floor) {
    f.a = a;
    f.u = padded(a);
    f.u.tail(n_) = section_.gradient(a);
    f.H = section_.hessian(a);
    f.J = Eigen::MatrixXd::Identity(2 * n_, 2 * n_);
    f.R = 0.0;
    f.k = 0;
    f.floor = floor;
    f.first_bad = -1;
    monitor(f);
  }

  void advance(Flow& f, int to) {
    while (f.k < to) {
      double dR = 0.0;
      stepper_.step(f.u, path_.grid.time(f.k), path_.step(f.k), &S_, &dR, f.k);
      f.J = S_ * f.J;
      f.R += dR;
      ++f.k;
      monitor(f);
    }
  }

  Eigen::MatrixXd shooting_matrix(const Flow& f) const {
    return f.J.topLeftCorner(n_, n_) + f.J.topRightCorner(n_, n_) * f.H;
  }

  void monitor(Flow& f) const {
    if (f.k <= f.floor || f.first_bad >= 0) return;
    if (shooting_matrix(f).determinant() <= cfg_.det_epsilon) f.first_bad = f.k;
  }

  double residual_norm(const Flow& f) const { return (f.u.head(n_) - x_).lpNorm<Eigen::Infinity>(); }

  // Returns -1 on success, otherwise the truncation node.
  int solve(Flow& flow, int k, int prev, ShootingNode& node, std::string& reason) {
    try {
      flow.floor = prev;
      advance(flow, k);
    } catch (const Error& e) {
      reason = e.what();
      return k;
    }
    int evaluations = 1;
    double err = residual_norm(flow);
    for (int it = 0;; ++it) {
      const Eigen::MatrixXd A = shooting_matrix(flow);
      if (err <= tol_) {
        if (flow.first_bad >= 0 && flow.first_bad < k) {
          reason = "shooting determinant lost sign between targets";
          return flow.first_bad;
        }
        node.det = A.determinant();
        if (node.det <= cfg_.det_epsilon) {
          reason = "shooting determinant below threshold";
          return k;
        }
        node.k = k;
        node.a = flow.a;
        node.u = flow.u;
        node.action = flow.R;
        node.s_tilde = flow.R + section_.value(flow.a);
        node.error = err;
        node.iterations = evaluations;
        return -1;
      }
      if (it >= cfg_.max_iterations) break;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (!lu.isInvertible()) {
        reason = "singular shooting Jacobian";
        return k;
      }
      const Eigen::VectorXd delta = lu.solve(flow.u.head(n_) - x_);
      // Backtracking on the residual norm.
      bool accepted = false;
      double lambda = 1.0;
      for (int tries = 0; tries < 12 && !accepted; ++tries, lambda *= 0.5) {
        Flow trial;
        try {
          start(trial, flow.a - lambda * delta, prev);
          advance(trial, k);
        } catch (const Error&) {
          ++evaluations;
          continue;
        }
        ++evaluations;
        const double trial_err = residual_norm(trial);
        if (trial_err < err) {
          flow = std::move(trial);
          err = trial_err;
          accepted = true;
        }
      }
      if (!accepted) break;
    }
    reason = "shooting Newton did not converge";
    return k;
  }

  const HamiltonianSystem& system_;
  const LagrangianSection& section_;
  Eigen::VectorXd x_;
  const NoisePath& path_;
  ShootingConfig cfg_;
  MidpointStepper stepper_;
  int n_;
  double tol_ = 0.0;
  Eigen::MatrixXd S_;
};

}  // namespace

ShootingPath shoot(const HamiltonianSystem& system, const LagrangianSection& section,
                   const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path, const ShootingConfig& cfg) {
  std::vector<int> all(path.steps() + 1);
  for (int k = 0; k <= path.steps(); ++k) all[k] = k;
  return Shooter(system, section, x, path, cfg).run(all);
}

ShootingPath shoot_nodes(const HamiltonianSystem& system, const LagrangianSection& section,
                         const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                         const std::vector<int>& targets, const ShootingConfig& cfg) {
  return Shooter(system, section, x, path, cfg).run(targets);
}

ShootingPath projected_action(const HamiltonianSystem& system, const LagrangianSection& section,
                              const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                              const ShootingConfig& cfg) {
  return shoot(system, section, x, path, cfg);
}

Eigen::VectorXd d_s_tilde(const HamiltonianSystem& system, const LagrangianSection& section,
                          const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path, int k,
                          DerivativeMode mode, const ShootingConfig& cfg, double h_fd) {
  const int n = system.n;
  auto solved = [&](const Eigen::VectorXd& y) {
    ShootingPath sp = shoot_nodes(system, section, y, path, {k}, cfg);
    if (sp.xi <= k) throw TruncationMismatch("shoot truncated at node " + std::to_string(sp.xi) + " before node " + std::to_string(k));
    return sp.nodes.back();
  };
  if (mode == DerivativeMode::formula) return solved(x).u.tail(n);
  if (!(h_fd > 0.0)) throw StateError("finite-difference step must be positive");
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h_fd;
    xm(i) -= h_fd;
    g(i) = (solved(xp).s_tilde - solved(xm).s_tilde) / (2.0 * h_fd);
  }
  return g;
}

DerivativeComparison compare_d_s_tilde(const HamiltonianSystem& system, const LagrangianSection& section,
                                       const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path,
                                       const ShootingConfig& cfg, double h_fd) {
  if (!(h_fd > 0.0)) throw StateError("finite-difference step must be positive");
  const int n = system.n;
  const ShootingPath base = shoot(system, section, x, path, cfg);
  const std::size_t count = base.nodes.size();
  DerivativeComparison out;
  out.formula.resize(n, static_cast<Eigen::Index>(count));
  out.fd.resize(n, static_cast<Eigen::Index>(count));
  for (std::size_t m = 0; m < count; ++m) {
    out.nodes.push_back(base.nodes[m].k);
    out.formula.col(static_cast<Eigen::Index>(m)) = base.nodes[m].u.tail(n);
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h_fd;
    xm(i) -= h_fd;
    const ShootingPath plus = shoot(system, section, xp, path, cfg);
    const ShootingPath minus = shoot(system, section, xm, path, cfg);
    if (plus.nodes.size() < count || minus.nodes.size() < count) {
      throw TruncationMismatch("finite-difference probe truncated at node " +
                               std::to_string(std::min(plus.xi, minus.xi)) + " before the base shoot");
    }
    for (std::size_t m = 0; m < count; ++m) {
      out.fd(i, static_cast<Eigen::Index>(m)) = (plus.nodes[m].s_tilde - minus.nodes[m].s_tilde) / (2.0 * h_fd);
    }
  }
  for (std::size_t m = 0; m < count; ++m) {
    const auto c = static_cast<Eigen::Index>(m);
    const double scale = std::max(1.0, out.formula.col(c).lpNorm<Eigen::Infinity>());
    out.max_relative = std::max(out.max_relative, (out.formula.col(c) - out.fd.col(c)).lpNorm<Eigen::Infinity>() / scale);
  }
  return out;
}

std::vector<double> hj_residual_values(const HamiltonianSystem& system, const LagrangianSection& section,
                                       const NoisePath& path, const ShootingPath& shooting) {
  const int n = system.n;
  std::vector<double> out;
  out.reserve(shooting.nodes.size());
  const double f_x = section.value(shooting.x);
  Eigen::VectorXd z(2 * n);
  z.head(n) = shooting.x;
  double sum = 0.0;
  for (std::size_t i = 0; i < shooting.nodes.size(); ++i) {
    const ShootingNode& node = shooting.nodes[i];
    if (node.k != static_cast<int>(i)) throw StateError("hj_residual needs a shooting path solved at every node");
    if (i > 0) {
      const int l = node.k - 1;
      z.tail(n) = 0.5 * (shooting.nodes[i - 1].u.tail(n) + node.u.tail(n));
      const auto dX = path.step(l);
      const double t_mid = path.grid.time(l) + 0.5 * dX(0);
      for (int j = 0; j <= system.r; ++j) {
        if (dX(j) != 0.0) sum += system.h[j].value(t_mid, z) * dX(j);
      }
    }
    out.push_back(node.s_tilde - f_x + sum);
  }
  return out;
}

HjResidual hj_residual(const HamiltonianSystem& system, const LagrangianSection& section,
                       const Eigen::Ref<const Eigen::VectorXd>& x, const NoisePath& path, const ShootingConfig& cfg) {
  HjResidual out;
  out.shooting = shoot(system, section, x, path, cfg);
  out.values = hj_residual_values(system, section, path, out.shooting);
  for (double v : out.values) out.max_abs = std::max(out.max_abs, std::abs(v));
  return out;
}

void write_csv(std::ostream& os, const ShootingPath& shooting, const std::vector<double>* residual) {
  const int n = static_cast<int>(shooting.x.size());
  os << "k,t_k";
  for (int i = 1; i <= n; ++i) os << ",a" << i;
  for (int i = 1; i <= n; ++i) os << ",p" << i;
  os << ",d_k,S_tilde_k,residual_k\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  for (std::size_t i = 0; i < shooting.nodes.size(); ++i) {
    const ShootingNode& node = shooting.nodes[i];
    os << node.k;
    put(shooting.grid.time(node.k));
    for (int j = 0; j < n; ++j) put(node.a(j));
    for (int j = 0; j < n; ++j) put(node.u(n + j));
    put(node.det);
    put(node.s_tilde);
    if (residual && i < residual->size()) {
      put((*residual)[i]);
    } else {
      os << ",";
    }
    os << '\n';
  }
}

}  // namespace shj
