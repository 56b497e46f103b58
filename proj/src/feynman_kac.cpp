#include "shj/feynman_kac.hpp"

#include "shj/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace shj {

namespace {

void require_q_only(const ScalarField& field, int n, const char* what) {
  if (field.empty() || field.dimension() != n || field.space() != VariableSpace::phase) {
    throw DimensionError(std::string(what) + " must be a phase-space field of matching dimension");
  }
  if (field.arity().uses_second || field.arity().uses_t) {
    throw StateError(std::string(what) + " must depend on q only");
  }
}

std::vector<int> target_nodes(const FkConfig& cfg) {
  std::vector<double> times = cfg.times.empty() ? std::vector<double>{cfg.grid.t_end} : cfg.times;
  std::vector<int> nodes;
  for (double t : times) {
    const double exact = t / cfg.grid.dt();
    const long k = std::lround(exact);
    if (k < 0 || k > cfg.grid.steps || std::abs(exact - static_cast<double>(k)) > 1e-9 * std::max(1.0, exact)) {
      throw DimensionError("evaluation time is not a grid node");
    }
    nodes.push_back(static_cast<int>(k));
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// Neumaier-compensated running sum.
struct Summation {
  double sum = 0.0, c = 0.0;
  void add(double v) {
    const double t = sum + v;
    c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

HamiltonianSystem fk_system(const FkConfig& cfg) {
  require_q_only(cfg.V, cfg.n, "potential V");
  std::string kinetic;
  for (int i = 1; i <= cfg.n; ++i) {
    if (i > 1) kinetic += " + ";
    kinetic += "p" + std::to_string(i) + "^2";
  }
  std::vector<std::string> channels{"(" + kinetic + ")/2 + " + cfg.V.source()};
  for (int i = 1; i <= cfg.n; ++i) channels.push_back("p" + std::to_string(i));
  return HamiltonianSystem::from_strings(cfg.n, channels);
}

FkReport fk_estimate(const FkConfig& cfg) {
  if (cfg.paths < 100) throw ConfigError("Feynman-Kac estimation needs at least 100 paths");
  if (cfg.points.empty()) throw ConfigError("no evaluation points");
  for (const auto& x : cfg.points) {
    if (x.size() != cfg.n) throw DimensionError("evaluation point has wrong dimension");
  }
  require_q_only(cfg.f, cfg.n, "section f");
  const HamiltonianSystem system = fk_system(cfg);
  const LagrangianSection section(cfg.f);
  const std::vector<int> nodes = target_nodes(cfg);
  const std::size_t P = cfg.points.size();
  const std::size_t T = nodes.size();
  const std::size_t M = static_cast<std::size_t>(cfg.paths);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // values[m * P * T + i * T + j]: S~ for path m, point i, node j; NaN when truncated.
  std::vector<double> values(M * P * T, nan);
  parallel_for(M, cfg.threads, [&](std::size_t m) {
    const NoisePath path = sample_path(cfg.grid, cfg.n, cfg.seed, m);
    for (std::size_t i = 0; i < P; ++i) {
      const ShootingPath sp = shoot_nodes(system, section, cfg.points[i], path, nodes, cfg.shooting);
      for (std::size_t j = 0; j < sp.nodes.size(); ++j) values[m * P * T + i * T + j] = sp.nodes[j].s_tilde;
    }
  });

  FkReport report;
  report.paths = cfg.paths;
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t j = 0; j < T; ++j) {
      FkEntry e;
      e.x = cfg.points[i];
      e.node = nodes[j];
      e.t = cfg.grid.time(nodes[j]);
      Summation sum;
      for (std::size_t m = 0; m < M; ++m) {
        const double v = values[m * P * T + i * T + j];
        if (std::isnan(v)) continue;
        sum.add(v);
        ++e.used;
      }
      e.truncated = cfg.paths - e.used;
      if (e.used == 0) {
        e.mean_s = e.stderr_s = e.phi_hat = e.phi_sigma = nan;
      } else {
        e.mean_s = sum.value() / e.used;
        Summation sq;
        for (std::size_t m = 0; m < M; ++m) {
          const double v = values[m * P * T + i * T + j];
          if (!std::isnan(v)) sq.add((v - e.mean_s) * (v - e.mean_s));
        }
        e.stderr_s = e.used > 1 ? std::sqrt(sq.value() / (e.used - 1) / e.used) : nan;
        e.phi_hat = std::exp(-e.mean_s);
        e.phi_sigma = e.phi_hat * e.stderr_s;
      }
      if (e.truncated * 10 > cfg.paths) report.reliability_warning = true;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

double PdeSolution::at(double xv, int node) const {
  if (node < 0 || node > grid.steps) throw DimensionError("time node outside the PDE grid");
  const Eigen::Index N = x.size();
  if (!(xv >= x(0) && xv <= x(N - 1))) throw DimensionError("point outside the PDE mesh");
  const double h = (x(N - 1) - x(0)) / static_cast<double>(N - 1);
  Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>((xv - x(0)) / h), N - 2);
  const double w = (xv - x(i)) / h;
  return (1.0 - w) * phi(i, node) + w * phi(i + 1, node);
}

double PdeSolution::at_time(double xv, double t) const {
  const long k = std::lround(t / grid.dt());
  return at(xv, static_cast<int>(std::clamp<long>(k, 0, grid.steps)));
}

PdeSolution pde_reference(const ScalarField& V, const ScalarField& f, double x_lo, double x_hi, double dx,
                          const TimeGrid& grid) {
  require_q_only(V, 1, "potential V");
  require_q_only(f, 1, "section f");
  if (!(x_hi > x_lo) || !(dx > 0.0)) throw PdeError("invalid PDE interval");
  const long cells = std::lround((x_hi - x_lo) / dx);
  if (cells < 2) throw PdeError("PDE mesh needs at least 3 points");
  const Eigen::Index N = cells + 1;
  const double h = (x_hi - x_lo) / static_cast<double>(cells);
  PdeSolution out;
  out.grid = grid;
  out.x = Eigen::VectorXd::LinSpaced(N, x_lo, x_hi);
  out.phi.resize(N, grid.steps + 1);
  Eigen::VectorXd v(N);
  Eigen::Vector2d z(0.0, 0.0);
  for (Eigen::Index i = 0; i < N; ++i) {
    z(0) = out.x(i);
    v(i) = V.value(0.0, z);
    out.phi(i, 0) = std::exp(-f.value(0.0, z));
  }
  const double dt = grid.dt();
  const double diff = 0.5 / (h * h);
  const double off = -0.5 * dt * diff;  // sub- and super-diagonal of the implicit side
  const Eigen::Index m = N - 2;
  Eigen::VectorXd rhs(m), cp(m), dp(m);
  for (int k = 0; k < grid.steps; ++k) {
    const auto prev = out.phi.col(k);
    for (Eigen::Index i = 1; i <= m; ++i) {
      const double lap = diff * (prev(i - 1) - 2.0 * prev(i) + prev(i + 1));
      rhs(i - 1) = prev(i) + 0.5 * dt * (v(i) * prev(i) + lap);
    }
    rhs(0) -= off * prev(0);
    rhs(m - 1) -= off * prev(N - 1);
    // Thomas algorithm.
    for (Eigen::Index i = 0; i < m; ++i) {
      const double b = 1.0 - 0.5 * dt * (v(i + 1) - 2.0 * diff);
      const double denom = i == 0 ? b : b - off * cp(i - 1);
      if (std::abs(denom) < 1e-300 || !std::isfinite(denom)) throw PdeError("singular Crank-Nicolson system");
      cp(i) = off / denom;
      dp(i) = (rhs(i) - (i == 0 ? 0.0 : off * dp(i - 1))) / denom;
    }
    auto next = out.phi.col(k + 1);
    next(0) = prev(0);
    next(N - 1) = prev(N - 1);
    next(m) = dp(m - 1);
    for (Eigen::Index i = m - 2; i >= 0; --i) next(i + 1) = dp(i) - cp(i) * next(i + 2);
    if (!next.allFinite()) throw PdeError("non-finite Crank-Nicolson solution");
  }
  return out;
}

bool fk_compare(FkReport& report, const std::function<double(const Eigen::VectorXd&, double)>& reference,
                double budget) {
  bool all = true;
  for (auto& e : report.entries) {
    e.phi_ref = reference(e.x, e.t);
    e.abs_err = std::abs(e.phi_hat - e.phi_ref);
    e.compared = true;
    const double sigma = std::isnan(e.phi_sigma) ? 0.0 : e.phi_sigma;
    e.pass = std::isfinite(e.phi_hat) && e.abs_err <= 3.0 * sigma + budget * std::abs(e.phi_ref);
    all = all && e.pass;
  }
  return all;
}

bool fk_compare(FkReport& report, const PdeSolution& reference, double budget) {
  return fk_compare(report, [&](const Eigen::VectorXd& x, double t) { return reference.at_time(x(0), t); }, budget);
}

void write_csv(std::ostream& os, const FkReport& report) {
  const int n = report.entries.empty() ? 1 : static_cast<int>(report.entries.front().x.size());
  if (n == 1) {
    os << "x";
  } else {
    for (int i = 1; i <= n; ++i) os << (i > 1 ? "," : "") << "x" << i;
  }
  os << ",t,meanS,stderr,phi_hat,phi_ref,abs_err,verdict\n";
  char buf[40];
  auto put = [&](double v, bool comma = true) {
    std::snprintf(buf, sizeof buf, comma ? ",%.17g" : "%.17g", v);
    os << buf;
  };
  for (const auto& e : report.entries) {
    for (int i = 0; i < n; ++i) put(e.x(i), i > 0);
    put(e.t);
    put(e.mean_s);
    put(e.stderr_s);
    put(e.phi_hat);
    if (e.compared) {
      put(e.phi_ref);
      put(e.abs_err);
      os << (e.pass ? ",PASS" : ",FAIL");
    } else {
      os << ",,,";
    }
    os << '\n';
  }
}

void write_plot_script(std::ostream& os, const std::string& csv_name) {
  os << "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'x'\n"
        "set ylabel 'Phi'\n"
        "plot '"
     << csv_name << "' using 1:5:(3*$5*$4) with yerrorbars title 'Monte Carlo', \\\n"
     << "     '" << csv_name << "' using 1:6 with linespoints title 'reference'\n";
}

}  // namespace shj
