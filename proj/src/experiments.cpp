#include "wpn/experiments.hpp"

#include "wpn/dual_pde.hpp"
#include "wpn/kinetic.hpp"
#include "wpn/quadrature.hpp"
#include "wpn/solver.hpp"
#include "wpn/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#ifndef WPN_VERSION
#define WPN_VERSION "unknown"
#endif

namespace wpn {

const char* code_version() { return WPN_VERSION; }

// ---------------------------------------------------------------------------
// configuration

Config ExperimentConfig::to_config() const {
  Config c;
  c.set("experiment", experiment);
  c.set("flux.kind", flux);
  c.set("flux.K", flux_K);
  c.set("flux.R", flux_R);
  c.set("flux.eps", flux_eps);
  c.set("flux.table", flux_table);
  c.set("u0.profile", u0);
  c.set("u0.a", u0_a);
  c.set("u0.b", u0_b);
  c.set("u0.amplitude", u0_amplitude);
  c.set("grid.x_min", x_min);
  c.set("grid.x_max", x_max);
  c.set("grid.n_cells", n_cells);
  c.set("xi.R", xi_R);
  c.set("xi.n_cells", xi_cells);
  c.set("solver.viscosity", viscosity);
  c.set("solver.cfl", cfl);
  c.set("noise.sigma", sigma);
  c.set("noise.n_paths", n_paths);
  c.set("noise.base_seed", base_seed);
  c.set("noise.path_dt", path_dt);
  c.set("run.T", T);
  c.set("run.threads", threads);
  c.set("run.eps_list", eps_list);
  c.set("run.sigma_list", sigma_list);
  c.set("run.delta_list", delta_list);
  c.set("run.times", times);
  return c;
}

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  require(c.has("experiment"), ErrorCode::invalid_parameter, "config lacks the experiment name");
  ExperimentConfig e = default_config(c.get("experiment"));
  auto str = [&](const char* k, std::string& v) { if (c.has(k)) v = c.get(k); };
  auto num = [&](const char* k, double& v) { if (c.has(k)) v = c.get_double(k); };
  auto integer = [&](const char* k, int& v) { if (c.has(k)) v = c.get_int(k); };
  auto list = [&](const char* k, std::vector<double>& v) { if (c.has(k)) v = c.get_list(k); };
  str("flux.kind", e.flux);
  num("flux.K", e.flux_K);
  num("flux.R", e.flux_R);
  num("flux.eps", e.flux_eps);
  str("flux.table", e.flux_table);
  str("u0.profile", e.u0);
  num("u0.a", e.u0_a);
  num("u0.b", e.u0_b);
  num("u0.amplitude", e.u0_amplitude);
  num("grid.x_min", e.x_min);
  num("grid.x_max", e.x_max);
  integer("grid.n_cells", e.n_cells);
  num("xi.R", e.xi_R);
  integer("xi.n_cells", e.xi_cells);
  num("solver.viscosity", e.viscosity);
  num("solver.cfl", e.cfl);
  num("noise.sigma", e.sigma);
  integer("noise.n_paths", e.n_paths);
  if (c.has("noise.base_seed")) e.base_seed = c.get_uint("noise.base_seed");
  num("noise.path_dt", e.path_dt);
  num("run.T", e.T);
  integer("run.threads", e.threads);
  list("run.eps_list", e.eps_list);
  list("run.sigma_list", e.sigma_list);
  list("run.delta_list", e.delta_list);
  list("run.times", e.times);

  require(e.n_cells >= 8 && e.xi_cells >= 4, ErrorCode::invalid_parameter, "grids need at least 8 x-cells and 4 xi-cells");
  require(e.x_max > e.x_min, ErrorCode::invalid_parameter, "x_max must exceed x_min");
  require(e.T > 0.0 && e.flux_R > 0.0 && e.xi_R > 0.0 && e.cfl > 0.0, ErrorCode::invalid_parameter,
          "T, flux R, xi R and cfl must be positive");
  require(e.n_paths >= 1 && e.sigma >= 0.0 && e.flux_eps >= 0.0, ErrorCode::invalid_parameter,
          "need n_paths >= 1, sigma >= 0, flux eps >= 0");
  return e;
}

ExperimentConfig default_config(const std::string& name, bool smoke) {
  require(is_registered(name), ErrorCode::usage, "unknown experiment '" + name + "'");
  ExperimentConfig e;
  e.experiment = name;
  if (name == "nonuniqueness_demo") {
    e.flux_eps = 0.0;
    e.x_min = -2.0;
    e.x_max = 6.0;
    e.n_cells = 1024;
    e.T = 2.0;
    e.times = {0.5, 1.0, 2.0};
  } else if (name == "stability_by_noise") {
    e.flux_eps = 0.1;
    e.x_min = -7.0;
    e.x_max = 8.0;
    e.n_cells = smoke ? 256 : 512;
    e.n_paths = smoke ? 64 : 256;
    e.eps_list = {0.2, 0.1, 0.05};
    e.times = {0.0, 0.25, 0.5, 0.75, 1.0};
  } else if (name == "gap_decay") {
    e.flux_eps = 0.1;
    e.x_min = -7.0;
    e.x_max = 8.0;
    e.n_cells = smoke ? 128 : 256;
    e.n_paths = smoke ? 32 : 128;
    e.u0_b = 1.0;
    e.times = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  } else if (name == "selection_study") {
    e.flux_eps = 0.05;
    e.x_min = -16.0;
    e.x_max = 18.0;
    e.n_cells = smoke ? 512 : 1024;
    e.n_paths = smoke ? 32 : 256;
    e.T = 2.0;
    e.sigma_list = {2.0, 1.0, 0.5, 0.25};
  } else if (name == "commutator_convergence") {
    e.flux = "affine_x";
    e.flux_eps = 0.0;
    e.flux_R = 2.0;
    e.u0 = "gaussian";
    e.u0_a = 0.0;
    e.u0_b = 0.5;
    e.u0_amplitude = 0.8;
    e.x_min = -2.0;
    e.x_max = 2.0;
    e.n_cells = smoke ? 256 : 512;
    e.xi_R = 1.0;
    e.xi_cells = smoke ? 128 : 256;
    e.eps_list = {0.2, 0.1, 0.05};
    e.delta_list = {0.2, 0.1, 0.05};
  } else if (name == "dual_pde_check") {
    e.flux_eps = 0.1;
    e.x_min = -16.0;
    e.x_max = 16.0;
    e.n_cells = smoke ? 2048 : 8192;  // dx = 1/64 or 1/256
    e.T = 0.5;
    e.n_paths = smoke ? 2000 : 100000;  // Feynman-Kac samples per probe
    e.eps_list = {0.2, 0.1, 0.05};
    e.times = {-1.0, -0.5, 0.0, 0.5, 1.0};  // probe points
  } else if (name == "apriori_bounds") {
    e.flux_eps = 0.05;
    e.x_min = -1.0;
    e.x_max = 3.5;
    e.n_cells = smoke ? 576 : 2304;  // dx = 1/128 or 1/512
    e.xi_cells = 128;
    e.viscosity = -1.0;
  } else if (name == "heat_kernel_table") {
    e.times = {0.25, 0.5, 1.0, 2.0, 4.0};
  }
  return e;
}

// ---------------------------------------------------------------------------
// shared builders

namespace {

double overlap(double a, double b, double lo, double hi) { return std::max(0.0, std::min(b, hi) - std::max(a, lo)); }

/// Cell averages of amplitude * 1_[a, b].
GridFunctiond indicator_average(const UniformGrid& g, double a, double b, double amplitude = 1.0) {
  Eigen::VectorXd v(g.n);
  for (Eigen::Index i = 0; i < g.n; ++i) v[i] = amplitude * overlap(a, b, g.edge(i), g.edge(i + 1)) / g.h;
  return GridFunctiond(g, std::move(v));
}

double stochastic_reach(const ExperimentConfig& cfg, double sigma) { return 6.0 * sigma * std::sqrt(cfg.T) + 1.0; }

FluxField raw_flux(const ExperimentConfig& cfg) {
  if (cfg.flux == "model") return model_flux(cfg.flux_K, cfg.flux_R);
  if (cfg.flux == "burgers_like") return burgers_like_flux(1.0, cfg.flux_R);
  if (cfg.flux == "constant") return constant_flux(0.0, cfg.flux_R);
  if (cfg.flux == "affine_x") return affine_flux(0.0, 1.0, 0.0, cfg.flux_R);
  if (cfg.flux == "custom_table") return custom_table_flux(cfg.flux_table);
  throw Error(ErrorCode::invalid_parameter, "unknown flux kind '" + cfg.flux + "'");
}

FluxField flux_with_reach(const ExperimentConfig& cfg, double reach) {
  const FluxField b = raw_flux(cfg);
  if (cfg.flux_eps <= 0.0) return b;
  return tabulated_mollification(b, cfg.flux_eps, cfg.x_min - reach, cfg.x_max + reach, cfg.flux_R);
}

UniformGrid space_grid(const ExperimentConfig& cfg, int n = 0) {
  return UniformGrid(cfg.x_min, cfg.x_max, n > 0 ? n : cfg.n_cells);
}

SolverConfig solver_config(const ExperimentConfig& cfg) {
  SolverConfig s;
  s.viscosity = cfg.viscosity;
  s.cfl = cfg.cfl;
  return s;
}

EnsembleConfig ensemble_config(const ExperimentConfig& cfg) {
  EnsembleConfig e;
  e.n_paths = cfg.n_paths;
  e.base_seed = cfg.base_seed;
  e.sigma = cfg.sigma;
  e.solver = solver_config(cfg);
  e.path_dt = cfg.path_dt;
  e.threads = cfg.threads;
  e.output_times = cfg.times;
  return e;
}

std::vector<std::uint64_t> path_seeds(const ExperimentConfig& cfg, int n) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < n; ++i) s.push_back(cfg.base_seed + std::uint64_t(i));
  return s;
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------
// experiments

ExperimentResult nonuniqueness_demo(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const double K = cfg.flux_K, T = cfg.T;
  const UniformGrid g = space_grid(cfg);
  auto support = [&](int v, double t) {
    const double right = (t / 2 + 1) * (t / 2 + 1);
    return std::pair<double, double>{v == 1 ? 0.0 : -(t / 2) * (t / 2), right};
  };
  auto averages = [&](int v, double t) {
    const auto [a, b] = support(v, t);
    return indicator_average(g, a, b);
  };
  // Keep the closed forms honest against their definition.
  (void)reference_solution(1, T, 0.5, K, T);

  Table gap({"t", "l1_gap_u1_u2", "closed_form"});
  const int n_t = 40;
  for (int k = 0; k <= n_t; ++k) {
    const double t = T * k / n_t;
    gap.add(t, l1_distance(averages(1, t), averages(2, t)), (t / 2) * (t / 2));
  }
  Table snaps({"t", "x", "u1", "u2"});
  for (double t : cfg.times) {
    const double d = l1_distance(averages(1, t), averages(2, t));
    res.certificate.add("l1_gap_at_t=" + fmt(t), std::abs(d - (t / 2) * (t / 2)), 1e-10,
                        std::abs(d - (t / 2) * (t / 2)) <= 1e-10);
    for (Eigen::Index i = 0; i < g.n; ++i) {
      const double x = g.center(i);
      snaps.add(t, x, reference_solution(1, t, x, K, T), reference_solution(2, t, x, K, T));
    }
  }

  const FluxField b = model_flux(K, cfg.flux_R);
  const SpaceTimeWindow w{T, g.lo, g.hi()};
  const std::vector<TestFunction> phis = {
      bump_test_function(1.0, 0.0, 0.5, 0.5), bump_test_function(1.0, 2.25, 0.6, 0.8),
      bump_test_function(0.7, 1.0, 0.5, 2.0), bump_test_function(1.5, -0.5, 0.4, 0.6),
      bump_test_function(1.2, 3.0, 0.7, 1.5)};
  Table kr({"solution", "test_function", "k", "residual"});
  for (int v : {1, 2}) {
    KruzkovOptions opts;
    opts.jumps = [&, v](double t) {
      const auto [a, bb] = support(v, t);
      return std::vector<double>{a, bb};
    };
    auto u = [&, v](double t, double x) { return reference_solution(v, t, x, K, T); };
    double worst = infinity;
    for (std::size_t j = 0; j < phis.size(); ++j)
      for (double k : {0.25, 0.5, 0.75}) {
        const double r = kruzkov_entropy_residual(u, b, k, phis[j], w, opts);
        kr.add(v, int(j), k, r);
        worst = std::min(worst, r);
      }
    res.certificate.add("kruzkov_min_u" + std::to_string(v), worst, -1e-3, worst >= -1e-3);
  }
  res.tables["nonuniqueness_gap"] = std::move(gap);
  res.tables["nonuniqueness_snapshots"] = std::move(snaps);
  res.tables["kruzkov_residuals"] = std::move(kr);
  res.notes.push_back("u1, u2 are closed-form entropy solutions with the same data; gap = (t/2)^2");
  return res;
}

ExperimentResult stability_by_noise(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const double reach = stochastic_reach(cfg, cfg.sigma);
  const FluxField raw = raw_flux(cfg);
  EnsembleConfig ens = ensemble_config(cfg);
  if (ens.output_times.empty()) ens.output_times = {0.0, cfg.T};
  const UniformGrid g = space_grid(cfg);

  // (a) two mollification scales, same data and path: gap along eps_b, with the sigma = 0 control.
  StabilitySetup scales{raw, make_u0(cfg, g), make_u0(cfg, g), Pairing::scales, cfg.eps_list, cfg.T};
  const auto rows = stability_experiment(scales, ens);
  Table t({"pairing", "n_cells", "epsilon", "sigma", "time", "gap_mean", "gap_variance", "gap_stderr",
           "ratio_to_initial", "n_paths"});
  std::vector<double> final_gap, final_se, control_gap;
  for (const auto& r : rows) {
    t.add("scales", cfg.n_cells, r.epsilon, r.sigma, r.time, r.gap_mean, r.gap_variance, r.gap_stderr,
          std::nan(""), r.n_paths);
    if (r.time == ens.output_times.back()) {
      if (r.sigma > 0.0) {
        final_gap.push_back(r.gap_mean);
        final_se.push_back(r.gap_stderr);
      } else {
        control_gap.push_back(r.gap_mean);
      }
    }
  }
  for (std::size_t i = 0; i + 1 < final_gap.size(); ++i) {
    const double rise = final_gap[i + 1] - final_gap[i];
    const double tol = 2.0 * std::hypot(final_se[i], final_se[i + 1]);
    res.certificate.add("gap_monotone_eps=" + fmt(cfg.eps_list[i + 1]), rise, tol, rise <= tol);
  }
  if (!control_gap.empty() && !final_gap.empty()) {
    const double target = 10.0 * final_gap.back();
    res.certificate.add("sigma0_control_gap_vs_10x_noisy", control_gap.back(), target, control_gap.back() >= target);
  }

  // (b) distinct data, one scale, three grids: sup_t gap(t)/gap(0) must stay bounded.
  const double eps_mid = cfg.eps_list.empty() ? cfg.flux_eps : cfg.eps_list[cfg.eps_list.size() / 2];
  std::vector<double> ratios;
  for (int level = 0; level < 3; ++level) {
    const UniformGrid gl = space_grid(cfg, cfg.n_cells << level);
    StabilitySetup data{raw, make_u0(cfg, gl), indicator_average(gl, cfg.u0_a, cfg.u0_b + 0.25, cfg.u0_amplitude),
                        Pairing::data, {eps_mid}, cfg.T};
    data.sigma_zero_control = false;
    double worst = 0.0;
    for (const auto& r : stability_experiment(data, ens)) {
      const double ratio = r.gap_mean / r.initial_gap;
      worst = std::max(worst, ratio);
      t.add("data", int(gl.n), r.epsilon, r.sigma, r.time, r.gap_mean, r.gap_variance, r.gap_stderr, ratio,
            r.n_paths);
    }
    ratios.push_back(worst);
  }
  const double bound = 2.0 * ratios.front();
  for (std::size_t l = 1; l < ratios.size(); ++l)
    res.certificate.add("gap_ratio_bounded_n=" + std::to_string(cfg.n_cells << l), ratios[l], bound,
                        std::isfinite(ratios[l]) && ratios[l] <= bound);
  (void)reach;
  res.tables["stability"] = std::move(t);
  res.seeds = path_seeds(cfg, cfg.n_paths);
  res.notes.push_back("coupled paths: both solves of a pair share the Brownian path");
  res.notes.push_back("pairing 'scales' compares b^eps with b^(eps/2); viscosity follows each mollification scale");
  res.notes.push_back("ratio bound for the refinement check: twice the coarsest-grid sup_t gap(t)/gap(0)");
  res.notes.push_back("noise enters through u(t,x) = v(t,x-W_t); the fractional shift is linear interpolation (O(dx) smearing)");
  return res;
}

ExperimentResult gap_decay(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const FluxField b = flux_with_reach(cfg, stochastic_reach(cfg, cfg.sigma));
  EnsembleConfig ens = ensemble_config(cfg);
  ens.functionals = {Functional::kinetic_gap_total, Functional::l1_gap};
  if (ens.output_times.empty() || ens.output_times.front() != 0.0) ens.output_times.insert(ens.output_times.begin(), 0.0);
  Table t({"n_cells", "time", "functional", "mean", "variance", "stderr", "n_paths", "ratio_to_initial"});
  std::vector<double> c_meas;
  for (int level = 0; level < 2; ++level) {
    const UniformGrid g = space_grid(cfg, cfg.n_cells << level);
    ens.xi_cell = g.h;
    const GridFunctiond u01 = make_u0(cfg, g);
    const GridFunctiond u02 = indicator_average(g, cfg.u0_a, cfg.u0_b + 0.25, cfg.u0_amplitude);
    CoupledProblem prob{b, b, u01, u02};
    const EnsembleStats s = coupled_ensemble(prob, cfg.T, ens);
    const Eigen::Index row = s.row(Functional::kinetic_gap_total);
    const double initial = s.mean(row, 0);
    for (std::size_t f = 0; f < s.functionals.size(); ++f)
      for (std::size_t k = 0; k < s.times.size(); ++k) {
        const double m = s.mean(Eigen::Index(f), Eigen::Index(k));
        t.add(int(g.n), s.times[k], to_string(s.functionals[f]), m, s.variance(Eigen::Index(f), Eigen::Index(k)),
              s.stderr_(Eigen::Index(f), Eigen::Index(k)), s.n_paths,
              m / s.mean(Eigen::Index(f), 0));
      }
    // The t = 0 value against the quarter-squared chi difference, evaluated independently.
    const double U = std::max(u01.linf_norm(), u02.linf_norm());
    const UniformGrid xi = state_grid(U, g.h);
    const PairGap pg = pair_gap_identity(chi_field(u01, xi), chi_field(u02, xi));
    res.certificate.add("initial_gap_identity_n=" + std::to_string(g.n), std::abs(initial - pg.rhs), 1e-12,
                        std::abs(initial - pg.rhs) <= 1e-12);
    c_meas.push_back(s.mean.row(row).maxCoeff() / initial);
    res.notes.push_back("C_meas(n=" + std::to_string(g.n) + ") = " + fmt(c_meas.back()));
  }
  const double change = std::abs(c_meas[1] / c_meas[0] - 1.0);
  res.certificate.add("C_meas_refinement_change", change, 0.2, std::isfinite(change) && change <= 0.2);
  res.tables["gap_decay"] = std::move(t);
  res.seeds = path_seeds(cfg, cfg.n_paths);
  res.notes.push_back("f = (chi1 + chi2)/2 along coupled paths; gap = int int |f| - f^2");
  return res;
}

ExperimentResult selection_study_exp(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const double smax = cfg.sigma_list.empty() ? cfg.sigma : *std::max_element(cfg.sigma_list.begin(), cfg.sigma_list.end());
  const FluxField b = flux_with_reach(cfg, stochastic_reach(cfg, smax));
  const UniformGrid g = space_grid(cfg);
  const auto rows = selection_study(b, make_u0(cfg, g), cfg.flux_K, cfg.sigma_list, cfg.T, ensemble_config(cfg));
  Table t({"sigma", "dist_to_u1", "dist_to_u2", "stderr", "n_paths"});
  for (const auto& r : rows) t.add(r.sigma, r.dist_to_u1, r.dist_to_u2, r.stderr_, r.n_paths);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].sigma >= 2.0) {
      const double d = std::min(rows[i].dist_to_u1, rows[i].dist_to_u2);
      res.certificate.add("smeared_floor_sigma=" + fmt(rows[i].sigma), d, 0.1, d >= 0.1);
    }
    if (i > 0) {
      const double jump = std::max(std::abs(rows[i].dist_to_u1 - rows[i - 1].dist_to_u1),
                                   std::abs(rows[i].dist_to_u2 - rows[i - 1].dist_to_u2));
      res.certificate.add("continuity_sigma=" + fmt(rows[i].sigma), jump, 0.5, jump <= 0.5);
    }
  }
  res.certificate.add("rows_written", double(t.rows.size()), double(cfg.sigma_list.size()),
                      t.rows.size() == cfg.sigma_list.size());
  const auto& last = rows.back();
  res.notes.push_back(std::string("smallest sigma tracks ") + (last.dist_to_u1 < last.dist_to_u2 ? "u1" : "u2") +
                      " (dist_to_u1 = " + fmt(last.dist_to_u1) + ", dist_to_u2 = " + fmt(last.dist_to_u2) + ")");
  res.notes.push_back("stderr column: L1 norm of the pointwise standard error of the mean field");
  res.seeds = path_seeds(cfg, cfg.n_paths);
  res.tables["selection"] = std::move(t);
  return res;
}

ExperimentResult commutator_convergence(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const UniformGrid g = space_grid(cfg);
  const UniformGrid xi(-cfg.xi_R, cfg.xi_R, cfg.xi_cells);
  const KineticField f = chi_field(make_u0(cfg, g), xi);
  const FluxField b = raw_flux(cfg);
  auto phi = [](double x) { return UnitBump::value(x); };
  Table t({"sweep", "epsilon", "delta", "value"});
  const double eps0 = cfg.eps_list.front(), delta_last = cfg.delta_list.back();
  std::vector<double> along_delta, along_eps;
  for (double d : cfg.delta_list) {
    const double v = commutator_error(b, f, eps0, d, phi);
    along_delta.push_back(std::abs(v));
    t.add("delta", eps0, d, v);
  }
  for (double e : cfg.eps_list) {
    const double v = commutator_error(b, f, e, delta_last, phi);
    along_eps.push_back(std::abs(v));
    t.add("epsilon", e, delta_last, v);
  }
  for (std::size_t i = 1; i < along_delta.size(); ++i)
    res.certificate.add("decreasing_in_delta=" + fmt(cfg.delta_list[i]), along_delta[i], along_delta[i - 1],
                        along_delta[i] <= along_delta[i - 1]);
  for (std::size_t i = 1; i < along_eps.size(); ++i)
    res.certificate.add("decreasing_in_eps=" + fmt(cfg.eps_list[i]), along_eps[i], along_eps[i - 1],
                        along_eps[i] <= along_eps[i - 1]);
  res.certificate.add("final_below_tenth_of_initial", along_eps.back(), 0.1 * along_delta.front(),
                      along_eps.back() < 0.1 * along_delta.front());
  const double c = commutator_error(constant_flux(2.5, cfg.flux_R), f, eps0, delta_last, phi);
  t.add("constant_b", eps0, delta_last, c);
  res.certificate.add("constant_b_zero", std::abs(c), 1e-14, std::abs(c) <= 1e-14);
  res.tables["commutator"] = std::move(t);
  res.notes.push_back("f = chi(u) of the configured smooth profile; phi = unit bump on [-1, 1]");
  return res;
}

ExperimentResult dual_pde_check(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const double R = cfg.flux_R, t_fin = cfg.T, dx = (cfg.x_max - cfg.x_min) / cfg.n_cells;

  // Heat kernel closed forms (d = 1) and the scaling law.
  {
    const double t = 0.37;
    const double e1 = std::abs(heat_kernel_norm(t, 1.0) - 1.0);
    const double einf = std::abs(heat_kernel_norm(t, infinity) / std::pow(2 * M_PI * t, -0.5) - 1.0);
    const double e2 = std::abs(heat_kernel_norm(t, 2.0) / std::pow(4 * M_PI * t, -0.25) - 1.0);
    res.certificate.add("heat_kernel_closed_forms", std::max({e1, einf, e2}), 1e-10, std::max({e1, einf, e2}) <= 1e-10);
    double worst = 0.0;
    for (double m : {1.0, 1.5, 2.0, 3.0, infinity})
      for (bool grad : {false, true})
        worst = std::max(worst, std::abs(heat_kernel_norm(4 * t, m, 1, grad) / heat_kernel_norm(t, m, 1, grad) /
                                             std::pow(4.0, heat_kernel_exponent(m, 1, grad)) - 1.0));
    res.certificate.add("heat_kernel_scaling", worst, 1e-12, worst <= 1e-12);
  }

  auto problem_for = [&](double eps, const FluxField& b, UniformGrid& grid) {
    const double radius = 1.0 / eps, half = radius + 2.0 + 4.0;
    const auto n = static_cast<Eigen::Index>(std::llround(2.0 * half / dx));
    grid = UniformGrid(-half, half, n);
    const Cutoff psi{radius, 2.0};
    DualPDEProblem p;
    p.F = divergence_potential(b, R, grid);
    p.psi = [psi](double x) { return psi.value(x); };
    p.psi_linf = 1.0;
    p.psi_grad = psi.grad_sup();
    p.t_fin = t_fin;
    p.T = t_fin;
    return p;
  };
  auto mollified = [&](double eps, double half) {
    return tabulated_mollification(raw_flux(cfg), eps, -half - 1.0, half + 1.0, R);
  };

  // Main scale: finite differences against Feynman-Kac, and both certificates.
  const double eps = cfg.flux_eps;
  const FluxField b = mollified(eps, 1.0 / eps + 7.0);
  UniformGrid grid;
  const DualPDEProblem prob = problem_for(eps, b, grid);
  const DualSolution sol = solve_dual_backward(prob);
  Table cross({"x", "finite_difference", "feynman_kac", "fk_stderr", "z"});
  const GridFunctiond F = prob.F;
  auto Ffun = [&F](double y) { return F.interpolate(y); };
  double worst_z = 0.0;
  for (std::size_t j = 0; j < cfg.times.size(); ++j) {
    const double x = cfg.times[j];
    const double fd = sol.initial().interpolate(x);
    const auto fk = feynman_kac(Ffun, {}, prob.psi, t_fin, x, cfg.n_paths, cfg.base_seed + 1000003ull * j, 512,
                                cfg.threads);
    const double z = (fd - fk.estimate) / fk.stderr_;
    worst_z = std::max(worst_z, std::abs(z));
    cross.add(x, fd, fk.estimate, fk.stderr_, z);
  }
  res.certificate.add("fd_vs_feynman_kac_max_z", worst_z, 3.0, worst_z <= 3.0);

  PotentialNorms norms;
  norms.p = raw_flux(cfg).p_exponent();
  norms.g_lp = std::pow(F.lp_norm_pow(norms.p), 1.0 / norms.p);
  const Certificate w = w1inf_certificate(sol, norms);
  for (const auto& c : w.checks) res.certificate.checks.push_back(c);
  const Certificate gr = gronwall_certificate(sol, b, R);
  for (const auto& c : gr.checks) res.certificate.checks.push_back(c);
  res.certificate.add("gronwall_resolution_dx", dx, 1.0 / 256, dx <= 1.0 / 256 * (1 + 1e-12));

  // Uniformity in the regularization scale.
  Table uni({"epsilon", "n_cells", "F_lp_norm", "w1inf_measured", "w1inf_bound"});
  std::vector<double> measured;
  for (double e : cfg.eps_list) {
    const FluxField be = mollified(e, 1.0 / e + 7.0);
    UniformGrid ge;
    const DualPDEProblem pe = problem_for(e, be, ge);
    const DualSolution se = solve_dual_backward(pe);
    PotentialNorms ne = norms;
    ne.g_lp = std::pow(pe.F.lp_norm_pow(ne.p), 1.0 / ne.p);
    const double m = w1inf_measured(se);
    measured.push_back(m);
    uni.add(e, int(ge.n), ne.g_lp, m, w1inf_bound(ne, pe.psi_linf, pe.psi_grad, t_fin).total());
  }
  if (!measured.empty()) {
    const auto [lo, hi] = std::minmax_element(measured.begin(), measured.end());
    res.certificate.add("w1inf_uniform_in_eps", *hi / *lo - 1.0, 0.05, *hi / *lo - 1.0 <= 0.05);
  }
  res.tables["dual_crossval"] = std::move(cross);
  res.tables["dual_uniformity"] = std::move(uni);
  res.notes.push_back("backward problem dt phi + (1/2) dxx phi + F^eps phi = 0, F^eps = sup_|xi|<=R |div b^eps|");
  res.notes.push_back("terminal data: 1 on |x| <= 1/eps, quintic decay over width 2");
  res.notes.push_back("Feynman-Kac: " + std::to_string(cfg.n_paths) + " samples per probe, 512 steps, trapezoid rule");
  return res;
}

ExperimentResult apriori_bounds(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const FluxField b = flux_with_reach(cfg, 1.0);
  const UniformGrid g = space_grid(cfg);
  SolverConfig s = solver_config(cfg);
  s.record_stride = 10;
  const GridFunctiond u0 = make_u0(cfg, g);
  const Trajectory traj = solve_viscous(ShiftedFlux(b), u0, s, cfg.T);
  const UniformGrid xi = state_grid(u0.linf_norm(), 2.0 * u0.linf_norm() / cfg.xi_cells);
  const DefectMeasureEstimate m = defect_measure(traj, xi);
  res.certificate = check_apriori_bounds(traj, m, b, 2.0);
  const std::size_t last = traj.snapshots.size() - 1;
  res.tables["apriori_trajectory"] = trajectory_table(traj, {0, last / 2, last});
  res.tables["defect_mass"] = defect_mass_table(m);
  Table t({"time", "linf_norm", "l2_norm_pow", "defect_mass"});
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    t.add(traj.times[k], traj.snapshots[k].linf_norm(), traj.snapshots[k].lp_norm_pow(2.0), m.mass_at_t[k]);
  res.tables["apriori"] = std::move(t);
  res.notes.push_back("viscosity = " + fmt(traj.viscosity) + ", dx = " + fmt(g.h) + ", steps = " +
                      std::to_string(traj.steps));
  return res;
}

ExperimentResult heat_kernel_table(const ExperimentConfig& cfg) {
  ExperimentResult res;
  Table t({"t", "m", "d", "gradient", "norm", "exponent", "ratio_4t", "quadrature"});
  double worst_ratio = 0.0, worst_closed = 0.0, worst_quad = 0.0;
  for (double time : cfg.times)
    for (int d : {1, 2, 3})
      for (double m : {1.0, 1.5, 2.0, 3.0, infinity})
        for (bool grad : {false, true}) {
          const double v = heat_kernel_norm(time, m, d, grad);
          const double ex = heat_kernel_exponent(m, d, grad);
          const double ratio = heat_kernel_norm(4 * time, m, d, grad) / v;
          worst_ratio = std::max(worst_ratio, std::abs(ratio / std::pow(4.0, ex) - 1.0));
          double quad = std::nan("");
          if (d == 1 && !std::isinf(m)) {
            // Gauss panels on the half line in x = s^2, which smooths the |x|^m kink at 0.
            const double smax = std::sqrt(40.0 * std::sqrt(time));
            const double acc = 2.0 * quad::gauss_panels([&](double s) {
              const double x = s * s;
              const double p = std::exp(-x * x / (2 * time)) / std::sqrt(2 * M_PI * time);
              return 2.0 * s * std::pow(grad ? x / time * p : p, m);
            }, 0.0, smax, 400);
            quad = std::pow(acc, 1.0 / m);
            worst_quad = std::max(worst_quad, std::abs(quad / v - 1.0));
          }
          if (!grad && m == 1.0) worst_closed = std::max(worst_closed, std::abs(v - 1.0));
          if (!grad && std::isinf(m))
            worst_closed = std::max(worst_closed, std::abs(v / std::pow(2 * M_PI * time, -0.5 * d) - 1.0));
          t.add(time, m, d, grad ? 1 : 0, v, ex, ratio, quad);
        }
  res.certificate.add("closed_forms", worst_closed, 1e-10, worst_closed <= 1e-10);
  res.certificate.add("quadrature_d1", worst_quad, 1e-10, worst_quad <= 1e-10);
  res.certificate.add("scaling_ratio", worst_ratio, 1e-12, worst_ratio <= 1e-12);
  res.tables["heat_kernel_norms"] = std::move(t);
  return res;
}

const std::vector<std::pair<std::string, ExperimentFn>>& registry() {
  static const std::vector<std::pair<std::string, ExperimentFn>> r = {
      {"nonuniqueness_demo", nonuniqueness_demo},
      {"stability_by_noise", stability_by_noise},
      {"gap_decay", gap_decay},
      {"selection_study", selection_study_exp},
      {"commutator_convergence", commutator_convergence},
      {"dual_pde_check", dual_pde_check},
      {"apriori_bounds", apriori_bounds},
      {"heat_kernel_table", heat_kernel_table},
  };
  return r;
}

}  // namespace

FluxField make_flux(const ExperimentConfig& cfg) { return flux_with_reach(cfg, stochastic_reach(cfg, cfg.sigma)); }

GridFunctiond make_u0(const ExperimentConfig& cfg, const UniformGrid& grid) {
  if (cfg.u0 == "indicator") return indicator_average(grid, cfg.u0_a, cfg.u0_b, cfg.u0_amplitude);
  if (cfg.u0 == "step") return indicator_average(grid, -infinity, cfg.u0_a, cfg.u0_amplitude);
  if (cfg.u0 == "gaussian") {
    require(cfg.u0_b > 0.0, ErrorCode::invalid_parameter, "gaussian variance must be positive");
    return GridFunctiond::sample(grid, [&](double x) {
      return cfg.u0_amplitude * std::exp(-(x - cfg.u0_a) * (x - cfg.u0_a) / (2.0 * cfg.u0_b));
    });
  }
  throw Error(ErrorCode::invalid_parameter, "unknown initial profile '" + cfg.u0 + "'");
}

Table trajectory_table(const Trajectory& traj, const std::vector<std::size_t>& snapshots) {
  Table t({"t", "x", "u"});
  auto emit = [&](std::size_t k) {
    const GridFunctiond& u = traj.snapshots.at(k);
    for (Eigen::Index i = 0; i < u.grid.n; ++i) t.add(traj.times[k], u.grid.center(i), u.values[i]);
  };
  if (snapshots.empty())
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) emit(k);
  else
    for (std::size_t k : snapshots) emit(k);
  return t;
}

Table defect_mass_table(const DefectMeasureEstimate& m) {
  Table t({"t", "mass_at_t"});
  for (std::size_t k = 0; k < m.times.size(); ++k) t.add(m.times[k], m.mass_at_t[k]);
  return t;
}

Table kinetic_table(const KineticField& f) {
  Table t({"x", "xi", "f"});
  for (Eigen::Index i = 0; i < f.x.n; ++i)
    for (Eigen::Index j = 0; j < f.xi.n; ++j) t.add(f.x.center(i), f.xi.center(j), f.values(i, j));
  return t;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, f] : registry()) n.push_back(k);
    return n;
  }();
  return names;
}

bool is_registered(const std::string& name) {
  const auto& n = experiment_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  for (const auto& [k, f] : registry())
    if (k == cfg.experiment) return f(cfg);
  std::string list;
  for (const auto& n : experiment_names()) list += (list.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::usage, "unknown experiment '" + cfg.experiment + "'; registry: " + list);
}

void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& res, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec && std::filesystem::is_directory(dir), ErrorCode::io_error, "cannot create output directory " + dir);
  for (const auto& [stem, table] : res.tables) emit_csv(table, dir + "/" + stem + ".csv");

  std::ostringstream meta;
  meta << "# experiment metadata\n";
  meta << "code_version = " << code_version() << "\n";
  meta << "seeds = ";
  if (res.seeds.empty()) meta << "none";
  else meta << res.seeds.front() << ".." << res.seeds.back() << " (base_seed + path index)";
  meta << "\n\n" << cfg.to_config().serialize();
  write_text(dir + "/metadata.txt", meta.str());

  std::ostringstream sum;
  sum << "experiment: " << cfg.experiment << "\n";
  sum << "status: " << (res.certificate.passed() ? "PASS" : "FAIL") << "\n\n";
  sum << "[certificates]\n" << res.certificate.to_text();
  if (!res.notes.empty()) {
    sum << "\n[notes]\n";
    for (const auto& n : res.notes) sum << n << "\n";
  }
  sum << "\n[outputs]\n";
  for (const auto& [stem, table] : res.tables) sum << stem << ".csv (" << table.rows.size() << " rows)\n";
  write_text(dir + "/summary.txt", sum.str());
}

}  // namespace wpn
