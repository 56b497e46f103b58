#include "shj/app/experiments.hpp"

#include "shj/action.hpp"
#include "shj/canonical_transform.hpp"
#include "shj/errors.hpp"
#include "shj/feynman_kac.hpp"
#include "shj/lagrangian_hj.hpp"
#include "shj/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace shj::app {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string point_text(const Eigen::VectorXd& x) {
  std::string out;
  for (Eigen::Index i = 0; i < x.size(); ++i) out += (i ? " " : "") + num(x(i));
  return out;
}

double nan_max(double a, double b) { return std::isnan(b) ? a : std::max(a, b); }

Check upper(const std::string& label, const std::string& name, double measured, double threshold) {
  return {label, name, measured, threshold, "<=", !std::isnan(measured) && measured <= threshold, ""};
}

Check lower(const std::string& label, const std::string& name, double measured, double threshold) {
  return {label, name, measured, threshold, ">=", !std::isnan(measured) && measured >= threshold, ""};
}

HamiltonianSystem build_system(const SystemSpec& spec) { return HamiltonianSystem::from_strings(spec.n, spec.h); }

TimeGrid case_grid(const RunConfig& cfg, const CaseConfig& c) { return c.grid.value_or(cfg.grid); }

ShootingConfig shooting_config(const RunConfig& cfg) {
  ShootingConfig sc;
  sc.scheme = cfg.scheme;
  return sc;
}

std::string to_string(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

// ---------------------------------------------------------------------------------------------

void run_simulate(const RunConfig& cfg, ExperimentResult& out) {
  std::ostringstream csv;
  csv << "case,draw,max_step_defect,accumulated_defect\n";
  std::string plot = "set datafile separator ','\nset key autotitle columnhead\nset logscale y\n"
                     "set xlabel 'k'\nset ylabel 'symplectic defect'\nplot ";
  bool first_plot = true;
  for (const auto& c : cfg.cases) {
    const HamiltonianSystem sys = build_system(c.system);
    const TimeGrid grid = case_grid(cfg, c);
    struct Row {
      double step = 0.0, accumulated = 0.0;
    };
    std::vector<Row> rows(cfg.paths);
    std::string first_traj;
    parallel_for(rows.size(), cfg.threads, [&](std::size_t m) {
      const NoisePath path = sample_path(grid, sys.r, cfg.seed, m);
      const Eigen::VectorXd z0 = c.initial.at(cfg.seed, m, 2 * sys.n).front();
      const Trajectory traj = integrate_flow(sys, PhaseState::from_stacked(z0), path, cfg.scheme, true);
      rows[m].step = *std::max_element(traj.step_defects.begin(), traj.step_defects.end());
      rows[m].accumulated = *std::max_element(traj.defects.begin(), traj.defects.end());
      if (m == 0) first_traj = to_string([&](std::ostream& os) { write_csv(os, traj, grid); });
    });
    double step = 0.0, accumulated = 0.0;
    for (std::size_t m = 0; m < rows.size(); ++m) {
      csv << c.label << ',' << m << ',' << num(rows[m].step) << ',' << num(rows[m].accumulated) << '\n';
      step = std::max(step, rows[m].step);
      accumulated = std::max(accumulated, rows[m].accumulated);
    }
    if (auto tol = c.tolerance("step_defect")) out.checks.push_back(upper(c.label, "max_step_defect", step, *tol));
    if (auto tol = c.tolerance("accumulated_defect_per_step")) {
      out.checks.push_back(upper(c.label, "accumulated_defect", accumulated, grid.steps * *tol));
    }
    const std::string file = "trajectory_" + c.label + ".csv";
    out.extras.push_back({file, first_traj});
    const int defect_col = 3 + 2 * sys.n;
    plot += std::string(first_plot ? "" : ", \\\n     ") + "'" + file + "' using 1:" + std::to_string(defect_col) +
            " with lines title '" + c.label + "'";
    first_plot = false;
  }
  out.results_csv = csv.str();
  out.plot_script = plot + "\n";
}

// ---------------------------------------------------------------------------------------------

void run_action_check(const RunConfig& cfg, ExperimentResult& out) {
  std::ostringstream csv;
  csv << "case,draw,k,relative_error,hat_r_error\n";
  std::string plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'R'\nplot ";
  bool first_plot = true;
  for (const auto& c : cfg.cases) {
    const HamiltonianSystem sys = build_system(c.system);
    const TimeGrid grid = case_grid(cfg, c);
    std::vector<int> nodes = c.nodes.empty() ? std::vector<int>{grid.steps} : c.nodes;
    for (int k : nodes) {
      if (k > grid.steps) throw ConfigError(c.label + ": node " + std::to_string(k) + " exceeds the grid steps");
    }
    const bool want_hat_r = c.tolerance("hat_r").has_value();
    struct Row {
      double relative = 0.0, hat_r = kNaN;
    };
    std::vector<std::vector<Row>> rows(cfg.paths, std::vector<Row>(nodes.size()));
    std::string first_action;
    parallel_for(rows.size(), cfg.threads, [&](std::size_t m) {
      const NoisePath path = sample_path(grid, sys.r, cfg.seed, m);
      const PhaseState z0 = PhaseState::from_stacked(c.initial.at(cfg.seed, m, 2 * sys.n).front());
      const Trajectory traj = integrate_flow(sys, z0, path, cfg.scheme, true);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Eigen::VectorXd a = action_gradient(traj, nodes[i]).stacked();
        const Eigen::VectorXd b = fd_action_gradient(sys, z0, path, nodes[i], c.h_fd, cfg.scheme).stacked();
        const double scale = std::max(b.lpNorm<Eigen::Infinity>(), std::numeric_limits<double>::min());
        rows[m][i].relative = (a - b).lpNorm<Eigen::Infinity>() / scale;
        if (want_hat_r) rows[m][i].hat_r = hat_r_gradient_check(sys, traj.state(nodes[i]), path, nodes[i], cfg.scheme);
      }
      if (m == 0) {
        first_action = to_string([&](std::ostream& os) { write_csv(os, accumulate_action(traj, path, sys)); });
      }
    });
    double relative = 0.0, hat_r = 0.0;
    for (std::size_t m = 0; m < rows.size(); ++m) {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        csv << c.label << ',' << m << ',' << nodes[i] << ',' << num(rows[m][i].relative) << ','
            << (std::isnan(rows[m][i].hat_r) ? "" : num(rows[m][i].hat_r)) << '\n';
        relative = std::max(relative, rows[m][i].relative);
        hat_r = nan_max(hat_r, rows[m][i].hat_r);
      }
    }
    if (auto tol = c.tolerance("relative")) out.checks.push_back(upper(c.label, "dR_relative_error", relative, *tol));
    if (auto tol = c.tolerance("hat_r")) out.checks.push_back(upper(c.label, "hat_R_route_difference", hat_r, *tol));
    const std::string file = "action_" + c.label + ".csv";
    out.extras.push_back({file, first_action});
    plot += std::string(first_plot ? "" : ", \\\n     ") + "'" + file + "' using 2:3 with lines title '" + c.label + "'";
    first_plot = false;
  }
  out.results_csv = csv.str();
  out.plot_script = plot + "\n";
}

// ---------------------------------------------------------------------------------------------

// max_k |a_k - a_oracle_k|_inf for the closed-form shooting oracles.
double oracle_error(const std::string& oracle, const LagrangianSection& section, const NoisePath& path,
                    const ShootingPath& sp) {
  const int n = section.dimension();
  if (path.r < n) throw ConfigError("the shooting oracle needs one noise channel per coordinate");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  if (oracle == "free_particle") c = section.gradient(Eigen::VectorXd::Zero(n));
  double worst = 0.0;
  for (const auto& node : sp.nodes) {
    for (int i = 0; i < n; ++i) {
      const double expected = sp.x(i) - c(i) * path.grid.time(node.k) - path.value(i + 1, node.k);
      worst = std::max(worst, std::abs(node.a(i) - expected));
    }
  }
  return worst;
}

void run_hj(const RunConfig& cfg, ExperimentResult& out) {
  std::ostringstream csv;
  csv << "case,draw,x,xi,max_shooting_error,max_oracle_error,max_residual,derivative_relative\n";
  std::string plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\n"
                     "set ylabel 'residual'\nplot ";
  bool first_plot = true;
  const ShootingConfig sc = shooting_config(cfg);
  for (const auto& c : cfg.cases) {
    const HamiltonianSystem sys = build_system(c.system);
    const LagrangianSection section = LagrangianSection::from_string(c.section, sys.n);
    const TimeGrid grid = case_grid(cfg, c);
    const bool want_derivative = c.tolerance("derivative").has_value();
    const bool want_oracle = !c.oracle.empty();
    struct Row {
      Eigen::VectorXd x;
      int xi = 0;
      double shooting = 0.0, oracle = kNaN, residual = 0.0, derivative = kNaN;
    };
    std::vector<std::vector<Row>> rows(cfg.paths);
    std::string first_shoot;
    parallel_for(rows.size(), cfg.threads, [&](std::size_t m) {
      const NoisePath path = sample_path(grid, sys.r, cfg.seed, m);
      const auto points = c.points.at(cfg.seed, m, sys.n);
      for (std::size_t i = 0; i < points.size(); ++i) {
        Row row;
        row.x = points[i];
        const HjResidual hr = hj_residual(sys, section, row.x, path, sc);
        row.xi = hr.shooting.xi;
        for (const auto& node : hr.shooting.nodes) row.shooting = std::max(row.shooting, node.error);
        row.residual = hr.max_abs;
        if (want_oracle) row.oracle = oracle_error(c.oracle, section, path, hr.shooting);
        if (want_derivative) row.derivative = compare_d_s_tilde(sys, section, row.x, path, sc, c.h_fd).max_relative;
        if (m == 0 && i == 0) {
          first_shoot = to_string([&](std::ostream& os) { write_csv(os, hr.shooting, &hr.values); });
        }
        rows[m].push_back(std::move(row));
      }
    });
    double shooting = 0.0, oracle = 0.0, residual = 0.0, derivative = 0.0;
    int truncated = 0;
    for (std::size_t m = 0; m < rows.size(); ++m) {
      for (const auto& row : rows[m]) {
        csv << c.label << ',' << m << ',' << point_text(row.x) << ',' << row.xi << ',' << num(row.shooting) << ','
            << (want_oracle ? num(row.oracle) : "") << ',' << num(row.residual) << ','
            << (want_derivative ? num(row.derivative) : "") << '\n';
        shooting = std::max(shooting, row.shooting);
        oracle = nan_max(oracle, row.oracle);
        residual = std::max(residual, row.residual);
        derivative = nan_max(derivative, row.derivative);
        if (row.xi <= grid.steps) ++truncated;
      }
    }
    if (truncated > 0) {
      out.warnings.push_back(c.label + ": " + std::to_string(truncated) + " shooting runs truncated before t_end");
    }
    if (auto tol = c.tolerance("shooting")) out.checks.push_back(upper(c.label, "max_shooting_error", shooting, *tol));
    if (auto tol = c.tolerance("oracle")) {
      if (!want_oracle) throw ConfigError(c.label + ": tolerances.oracle needs an oracle");
      out.checks.push_back(upper(c.label, "max_oracle_error", oracle, *tol));
    }
    if (auto tol = c.tolerance("residual")) out.checks.push_back(upper(c.label, "max_hj_residual", residual, *tol));
    if (auto tol = c.tolerance("derivative")) {
      out.checks.push_back(upper(c.label, "dS_formula_vs_fd_relative", derivative, *tol));
    }
    const std::string file = "shooting_" + c.label + ".csv";
    out.extras.push_back({file, first_shoot});
    const int residual_col = 5 + 2 * sys.n;
    plot += std::string(first_plot ? "" : ", \\\n     ") + "'" + file + "' using 2:" + std::to_string(residual_col) +
            " with lines title '" + c.label + "'";
    first_plot = false;
  }
  out.results_csv = csv.str();
  out.plot_script = plot + "\n";
}

// ---------------------------------------------------------------------------------------------

void run_convergence(const RunConfig& cfg, ExperimentResult& out) {
  std::ostringstream csv;
  csv << "case,level,steps,mean_max_residual,max_max_residual\n";
  const ShootingConfig sc = shooting_config(cfg);
  std::vector<std::string> labels;
  for (const auto& c : cfg.cases) {
    const HamiltonianSystem sys = build_system(c.system);
    const LagrangianSection section = LagrangianSection::from_string(c.section, sys.n);
    const TimeGrid grid = case_grid(cfg, c);
    // residual[m][level] = max over the draw's points of the max residual.
    std::vector<std::vector<double>> residual(cfg.paths, std::vector<double>(c.levels, 0.0));
    parallel_for(residual.size(), cfg.threads, [&](std::size_t m) {
      NoisePath path = sample_path(grid, sys.r, cfg.seed, m);
      const auto points = c.points.at(cfg.seed, m, sys.n);
      for (int level = 0; level < c.levels; ++level) {
        if (level > 0) path = refine(path);
        for (const auto& x : points) {
          residual[m][level] = std::max(residual[m][level], hj_residual(sys, section, x, path, sc).max_abs);
        }
      }
    });
    std::vector<double> log_k, log_r;
    double worst = 0.0;
    for (int level = 0; level < c.levels; ++level) {
      double sum = 0.0, level_max = 0.0;
      for (const auto& r : residual) {
        sum += r[level];
        level_max = std::max(level_max, r[level]);
      }
      const double mean = sum / static_cast<double>(residual.size());
      const int steps = grid.steps << level;
      csv << c.label << ',' << level << ',' << steps << ',' << num(mean) << ',' << num(level_max) << '\n';
      log_k.push_back(std::log2(static_cast<double>(steps)));
      log_r.push_back(std::log2(mean));
      worst = std::max(worst, level_max);
    }
    if (auto tol = c.tolerance("residual")) out.checks.push_back(upper(c.label, "max_hj_residual", worst, *tol));
    if (auto tol = c.tolerance("slope")) {
      double slope = kNaN;
      if (c.levels >= 2 && std::all_of(log_r.begin(), log_r.end(), [](double v) { return std::isfinite(v); })) {
        const double n = static_cast<double>(log_k.size());
        double sk = 0, sr = 0, skk = 0, skr = 0;
        for (std::size_t i = 0; i < log_k.size(); ++i) {
          sk += log_k[i];
          sr += log_r[i];
          skk += log_k[i] * log_k[i];
          skr += log_k[i] * log_r[i];
        }
        slope = -(n * skr - sk * sr) / (n * skk - sk * sk);
      }
      out.checks.push_back(lower(c.label, "log2_residual_slope", slope, *tol));
    }
    labels.push_back(c.label);
  }
  out.results_csv = csv.str();
  std::string plot = "set datafile separator ','\nset key autotitle columnhead\nset logscale xy 2\n"
                     "set xlabel 'K'\nset ylabel 'mean max residual'\nplot ";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    plot += std::string(i ? ", \\\n     " : "") + "'results.csv' using 3:(strcol(1) eq '" + labels[i] +
            "' ? $4 : NaN) with linespoints title '" + labels[i] + "'";
  }
  out.plot_script = plot + "\n";
}

// ---------------------------------------------------------------------------------------------

void run_feynman_kac(const RunConfig& cfg, ExperimentResult& out) {
  std::ostringstream csv;
  csv << "case,x,t,meanS,stderr,phi_hat,phi_ref,abs_err,verdict\n";
  std::string plot;
  for (const auto& c : cfg.cases) {
    const int n = c.system.n;
    FkConfig fk;
    fk.n = n;
    fk.V = make_field(c.potential, n);
    fk.f = make_field(c.section, n);
    fk.paths = cfg.paths;
    fk.grid = case_grid(cfg, c);
    fk.seed = cfg.seed;
    fk.points = c.points.fixed;
    fk.times = c.times;
    fk.shooting = shooting_config(cfg);
    fk.threads = cfg.threads;
    FkReport report = fk_estimate(fk);
    if (report.reliability_warning) {
      out.warnings.push_back(c.label + ": more than 10% of paths truncated at some evaluation point");
    }
    if (c.reference == "pde") {
      double lo = c.points.fixed.front()(0), hi = lo;
      for (const auto& x : c.points.fixed) {
        lo = std::min(lo, x(0));
        hi = std::max(hi, x(0));
      }
      const TimeGrid pde_grid = c.pde.steps > 0 ? TimeGrid(fk.grid.t_end, c.pde.steps) : fk.grid;
      const PdeSolution sol = pde_reference(fk.V, fk.f, lo - c.pde.buffer, hi + c.pde.buffer, c.pde.dx, pde_grid);
      fk_compare(report, sol, c.budget);
    } else if (!c.reference.empty()) {
      const ScalarField ref = make_field(c.reference, n);
      fk_compare(
          report,
          [&](const Eigen::VectorXd& x, double t) {
            Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * n);
            z.head(n) = x;
            return ref.value(t, z);
          },
          c.budget);
    }
    for (const auto& e : report.entries) {
      csv << c.label << ',' << point_text(e.x) << ',' << num(e.t) << ',' << num(e.mean_s) << ',' << num(e.stderr_s)
          << ',' << num(e.phi_hat) << ',' << (e.compared ? num(e.phi_ref) : "") << ','
          << (e.compared ? num(e.abs_err) : "") << ',' << (e.compared ? (e.pass ? "PASS" : "FAIL") : "") << '\n';
      if (e.compared) {
        Check chk = upper(c.label, "phi_abs_err(x=" + short_num(e.x(0)) + ",t=" + short_num(e.t) + ")", e.abs_err,
                          3.0 * e.phi_sigma + c.budget * std::abs(e.phi_ref));
        chk.note = "phi_hat " + short_num(e.phi_hat) + " vs reference " + short_num(e.phi_ref);
        out.checks.push_back(chk);
      }
    }
    const std::string file = "fk_" + c.label + ".csv";
    out.extras.push_back({file, to_string([&](std::ostream& os) { write_csv(os, report); })});
    plot += "set title '" + c.label + "'\n" + to_string([&](std::ostream& os) { write_plot_script(os, file); });
    if (&c != &cfg.cases.back()) plot += "pause -1\n";
  }
  out.results_csv = csv.str();
  out.plot_script = plot;
}

// ---------------------------------------------------------------------------------------------

std::vector<std::pair<double, PhaseState>> probe_points(const ProbeSpec& spec, int n) {
  const int dim = 2 * n;
  Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(spec.points, spec.lo, spec.hi);
  if (spec.points == 1) axis(0) = 0.5 * (spec.lo + spec.hi);
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= spec.points;
  std::vector<std::pair<double, PhaseState>> out;
  for (double t : spec.times) {
    for (long idx = 0; idx < total; ++idx) {
      Eigen::VectorXd z(dim);
      long rest = idx;
      for (int i = 0; i < dim; ++i) {
        z(i) = axis(rest % spec.points);
        rest /= spec.points;
      }
      out.emplace_back(t, PhaseState::from_stacked(z));
    }
  }
  return out;
}

void run_transform(const RunConfig& cfg, ExperimentResult& out) {
  std::ostringstream csv;
  csv << "case,draw,max_q_drift,max_discrepancy,commutator,time_condition,independent,affine_admissible,verdict\n";
  std::string plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'P'\nplot ";
  bool first_plot = true;
  for (const auto& c : cfg.cases) {
    const HamiltonianSystem sys = build_system(c.system);
    const GeneratingFunction S = GeneratingFunction::from_string(c.generating, sys.n);
    const TransformedSystem K = transform_hamiltonians(S, sys);
    const bool want_equilibrium = std::count(c.checks.begin(), c.checks.end(), "equilibrium") > 0;
    const bool want_brackets = std::count(c.checks.begin(), c.checks.end(), "brackets") > 0;
    const TimeGrid grid = case_grid(cfg, c);

    if (want_equilibrium) {
      if (!K.independent()) {
        const double defect = *std::max_element(K.defects.begin(), K.defects.end());
        out.checks.push_back(upper(c.label, "q1_independence_of_K", defect, K.tolerance));
      } else {
        struct Row {
          double drift = 0.0, discrepancy = 0.0;
        };
        std::vector<Row> rows(cfg.paths);
        std::string first_eq;
        parallel_for(rows.size(), cfg.threads, [&](std::size_t m) {
          const NoisePath path = sample_path(grid, sys.r, cfg.seed, m);
          const PhaseState z0 = PhaseState::from_stacked(c.initial.at(cfg.seed, m, 2 * sys.n).front());
          const EquilibriumReport rep = equilibrium_check(K, z0, path, cfg.scheme, {}, c.q1_ref);
          rows[m] = {rep.max_q_drift, rep.max_discrepancy};
          if (m == 0) first_eq = to_string([&](std::ostream& os) { write_csv(os, rep, grid); });
        });
        double drift = 0.0, discrepancy = 0.0;
        for (std::size_t m = 0; m < rows.size(); ++m) {
          csv << c.label << ',' << m << ',' << num(rows[m].drift) << ',' << num(rows[m].discrepancy) << ",,,,,\n";
          drift = std::max(drift, rows[m].drift);
          discrepancy = std::max(discrepancy, rows[m].discrepancy);
        }
        if (auto tol = c.tolerance("q_drift")) out.checks.push_back(upper(c.label, "max_Q_drift", drift, *tol));
        if (auto tol = c.tolerance("discrepancy")) {
          out.checks.push_back(upper(c.label, "mapped_vs_transformed", discrepancy, *tol));
        }
        const std::string file = "equilibrium_" + c.label + ".csv";
        out.extras.push_back({file, first_eq});
        const int p_col = 3 + 3 * sys.n;
        plot += std::string(first_plot ? "" : ", \\\n     ") + "'" + file + "' using 2:" + std::to_string(p_col) +
                " with lines title '" + c.label + "'";
        first_plot = false;
      }
    }

    if (want_brackets) {
      const auto probes = probe_points(c.probe, sys.n);
      BracketReport rep = bracket_conditions(K, probes);
      rep.affine_admissible = affine_family_admissible(sys, probes, &rep.affine_reason);
      const double tol = c.tolerance("bracket").value_or(1e-6);
      const bool verdict = rep.pass(tol);
      csv << c.label << ",,,," << num(rep.commutator) << ',' << num(rep.time_condition) << ','
          << (rep.independent ? "true" : "false") << ',' << (rep.affine_admissible ? "true" : "false") << ','
          << (verdict ? "PASS" : "FAIL") << '\n';
      if (!rep.affine_admissible) out.warnings.push_back(c.label + ": no affine-in-q1 generating function (" + rep.affine_reason + ")");
      if (c.expect_pass) {
        out.checks.push_back(upper(c.label, "bracket_commutator", rep.commutator, tol));
        out.checks.push_back(upper(c.label, "bracket_time_condition", rep.time_condition, tol));
        Check ind{c.label, "q1_independence_of_K", *std::max_element(K.defects.begin(), K.defects.end()),
                  K.tolerance, "<=", rep.independent, ""};
        out.checks.push_back(ind);
      } else {
        Check chk{c.label, "bracket_verdict_is_FAIL", verdict ? 0.0 : 1.0, 1.0, "==", !verdict, ""};
        chk.note = "commutator " + short_num(rep.commutator) + ", time condition " + short_num(rep.time_condition) +
                   (rep.independent ? "" : ", K depends on q1");
        out.checks.push_back(chk);
      }
      if (c.expect_defect) {
        out.checks.push_back(upper(c.label, "commutator_minus_expected", std::abs(rep.commutator - *c.expect_defect), tol));
      }
    }
  }
  out.results_csv = csv.str();
  out.plot_script = first_plot ? std::string("# no equilibrium trajectories in this run\n") : plot + "\n";
}

}  // namespace

bool ExperimentResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  ExperimentResult out;
  switch (cfg.experiment) {
    case ExperimentKind::simulate: run_simulate(cfg, out); break;
    case ExperimentKind::action_check: run_action_check(cfg, out); break;
    case ExperimentKind::hj: run_hj(cfg, out); break;
    case ExperimentKind::feynman_kac: run_feynman_kac(cfg, out); break;
    case ExperimentKind::transform: run_transform(cfg, out); break;
    case ExperimentKind::convergence: run_convergence(cfg, out); break;
  }
  return out;
}

std::string format_report(const RunConfig& cfg, const ExperimentResult& result) {
  std::ostringstream os;
  os << "experiment " << experiment_name(cfg.experiment) << " '" << cfg.name << "': seed " << cfg.seed << ", paths "
     << cfg.paths << ", K " << cfg.grid.steps << ", t_end " << num(cfg.grid.t_end) << '\n';
  int passed = 0;
  for (const auto& c : result.checks) {
    os << (c.pass ? "PASS " : "FAIL ") << c.case_label << ' ' << c.name << ": " << short_num(c.measured) << ' '
       << c.relation << ' ' << short_num(c.threshold);
    if (!c.note.empty()) os << " (" << c.note << ')';
    os << '\n';
    passed += c.pass;
  }
  for (const auto& w : result.warnings) os << "WARNING " << w << '\n';
  os << passed << '/' << result.checks.size() << " checks passed\n";
  return os.str();
}

std::string format_meta(const RunConfig& cfg, const ExperimentResult& result, double wall_seconds) {
  nlohmann::ordered_json meta;
  meta["version"] = kVersion;
  meta["experiment"] = std::string(experiment_name(cfg.experiment));
  meta["name"] = cfg.name;
  meta["seed"] = cfg.seed;
  meta["paths"] = cfg.paths;
  meta["steps"] = cfg.grid.steps;
  meta["threads"] = resolve_threads(cfg.threads);
  meta["wall_seconds"] = wall_seconds;
  meta["all_pass"] = result.all_pass();
  meta["config"] = nlohmann::json::parse(cfg.source);
  return meta.dump(2) + "\n";
}

void write_artifacts(const std::string& dir, const RunConfig& cfg, const ExperimentResult& result,
                     double wall_seconds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (fs::path(dir) / name).string());
    f << content;
  };
  put("results.csv", result.results_csv);
  put("report.txt", format_report(cfg, result));
  put("meta.json", format_meta(cfg, result, wall_seconds));
  put("plot.gp", result.plot_script);
  for (const auto& a : result.extras) put(a.file, a.content);
}

int run_config_file(const std::string& path, const Overrides& overrides, std::optional<ExperimentKind> expected,
                    std::ostream& out, std::ostream& err, ExperimentResult* result_out) {
  RunConfig cfg;
  try {
    cfg = load_config(path, expected);
    apply_overrides(cfg, overrides);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string dir = cfg.output.empty() ? "out/" + cfg.name : cfg.output;
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  try {
    result = run_experiment(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_artifacts(dir, cfg, result, wall);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kNumericalError;
  }
  out << format_report(cfg, result) << "artifacts in " << dir << '\n';
  const bool ok = result.all_pass();
  if (result_out) *result_out = std::move(result);
  return ok ? kAllPass : kSomeFail;
}

}  // namespace shj::app
