#pragma once

#include "shj/lagrangian_hj.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace shj {

/// Monte-Carlo estimate of Phi_t(x) = exp(-E[S~_t(x)]) for h_0 = |p|^2/2 + V(q), h_i = p_i
/// driven by X = (t, B^1..B^n).
struct FkConfig {
  int n = 1;
  ScalarField V;  // q-only
  ScalarField f;  // q-only, initial section
  int paths = 1000;
  TimeGrid grid;
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXd> points;
  std::vector<double> times;  // grid nodes; empty means {t_end}
  ShootingConfig shooting;
  int threads = 1;
};

/// The system assembled from V: h_0 = (p1^2 + .. + pn^2)/2 + V, h_i = p_i.
HamiltonianSystem fk_system(const FkConfig& cfg);

struct FkEntry {
  Eigen::VectorXd x;
  double t = 0.0;
  int node = 0;
  int used = 0;       // paths that reached the node
  int truncated = 0;  // paths excluded by truncation
  double mean_s = 0.0;
  double stderr_s = 0.0;
  double phi_hat = 1.0;    // exp(-mean_s)
  double phi_sigma = 0.0;  // phi_hat * stderr_s
  double phi_ref = 0.0;
  double abs_err = 0.0;
  bool compared = false;
  bool pass = false;
};

struct FkReport {
  std::vector<FkEntry> entries;  // point-major, then time
  int paths = 0;
  bool reliability_warning = false;  // some entry lost more than 10% of its paths
};

/// Deterministic for a given config: per-path results are reduced in path order.
FkReport fk_estimate(const FkConfig& cfg);

/// Crank-Nicolson solution of dPhi/dt = V Phi + Phi_xx / 2, Phi_0 = exp(-f), Dirichlet values
/// held at their initial values.
struct PdeSolution {
  Eigen::VectorXd x;
  TimeGrid grid;
  Eigen::MatrixXd phi;  // x.size() x (grid.steps + 1)

  /// Linear interpolation in x at a grid node; throws DimensionError outside the mesh.
  double at(double xv, int node) const;
  /// At the grid node nearest to t.
  double at_time(double xv, double t) const;
};

PdeSolution pde_reference(const ScalarField& V, const ScalarField& f, double x_lo, double x_hi, double dx,
                          const TimeGrid& grid);

/// Marks each entry PASS when |phi_hat - phi_ref| <= 3 phi_sigma + budget |phi_ref|.
/// Returns true when every entry passes.
bool fk_compare(FkReport& report, const std::function<double(const Eigen::VectorXd&, double)>& reference,
                double budget);
bool fk_compare(FkReport& report, const PdeSolution& reference, double budget);

/// CSV columns x,t,meanS,stderr,phi_hat,phi_ref,abs_err,verdict (x1..xn for n > 1).
void write_csv(std::ostream& os, const FkReport& report);

/// gnuplot script plotting phi_hat with 3 sigma bars against phi_ref from `csv_name`.
void write_plot_script(std::ostream& os, const std::string& csv_name);

}  // namespace shj
