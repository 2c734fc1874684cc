#include "wpn/stochastic.hpp"

#include "wpn/parallel.hpp"
#include "wpn/rng.hpp"

#include <algorithm>
#include <cmath>

namespace wpn {

double BrownianPath::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= times.back()) return values.back();
  const double s = t / dt();
  const auto k = std::min(static_cast<std::size_t>(s), times.size() - 2);
  const double w = s - double(k);
  return (1.0 - w) * values[k] + w * values[k + 1];
}

double BrownianPath::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

BrownianPath sample_brownian(double T, double dt, double sigma, std::uint64_t seed) {
  require(dt > 0.0 && T >= dt * (1 - 1e-12), ErrorCode::invalid_parameter, "Brownian lattice needs dt > 0 and T >= dt");
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::invalid_parameter, "noise amplitude must be >= 0");
  const auto n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  const double h = T / double(n), scale = sigma * std::sqrt(h);
  BrownianPath W;
  W.sigma = sigma;
  W.seed = seed;
  W.times.resize(n + 1);
  W.values.resize(n + 1);
  W.times[0] = 0.0;
  W.values[0] = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    W.times[k + 1] = k + 1 == n ? T : double(k + 1) * h;
    W.values[k + 1] = W.values[k] + scale * standard_normal(seed, k);
  }
  return W;
}

GridFunctiond shift_grid_function(const GridFunctiond& v, double s) {
  const UniformGrid& g = v.grid;
  // x - s sits at fractional index i - s/h of the centre lattice.
  const double q = s / g.h;
  const double fl = std::floor(q);
  const auto m = static_cast<Eigen::Index>(fl);
  const double w = q - fl;  // u_i = (1-w) v_{i-m} + w v_{i-m-1}
  Eigen::VectorXd out(g.n);
  for (Eigen::Index i = 0; i < g.n; ++i) {
    const Eigen::Index a = i - m, b = i - m - 1;
    const double va = (a >= 0 && a < g.n) ? v.values[a] : 0.0;
    const double vb = (b >= 0 && b < g.n) ? v.values[b] : 0.0;
    out[i] = w == 0.0 ? va : (1.0 - w) * va + w * vb;
  }
  return GridFunctiond(g, std::move(out));
}

Trajectory transformed_solve_per_path(const FluxField& b, const GridFunctiond& u0, const BrownianPath& W,
                                      const SolverConfig& cfg, double T, std::vector<double> output_times) {
  require(W.horizon() >= T * (1 - 1e-12), ErrorCode::invalid_parameter, "Brownian path shorter than the horizon");
  const ShiftedFlux g(b, [&W](double t) { return W(t); });
  SolverConfig c = cfg;
  if (c.max_dt <= 0.0) c.max_dt = W.dt();
  Trajectory traj = solve_viscous(g, u0, c, T, std::move(output_times));

  const UniformGrid& grid = u0.grid;
  const double guard = cfg.guard_level * u0.linf_norm();
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const double s = W(traj.times[k]);
    const GridFunctiond& v = traj.snapshots[k];
    if (cfg.boundary == Boundary::pad) {
      for (Eigen::Index i = 0; i < grid.n; ++i) {
        const double x = grid.center(i) + s;
        if (std::abs(v[i]) > guard && (x < grid.lo + grid.h || x > grid.hi() - grid.h))
          throw Error(ErrorCode::domain_too_small, "shift W = " + std::to_string(s) + " at t = " +
                                                       std::to_string(traj.times[k]) + " leaves the padded domain");
      }
    }
    traj.snapshots[k] = shift_grid_function(v, s);
  }
  return traj;
}

const char* to_string(Functional f) {
  switch (f) {
    case Functional::l1_norm: return "l1_norm";
    case Functional::linf_norm: return "linf_norm";
    case Functional::mass: return "mass";
    case Functional::l1_gap: return "l1_gap";
    case Functional::kinetic_gap_total: return "kinetic_gap_total";
  }
  return "unknown";
}

Functional parse_functional(const std::string& name) {
  for (auto f : {Functional::l1_norm, Functional::linf_norm, Functional::mass, Functional::l1_gap,
                 Functional::kinetic_gap_total})
    if (name == to_string(f)) return f;
  throw Error(ErrorCode::invalid_parameter, "unknown functional '" + name + "'");
}

Eigen::Index EnsembleStats::row(Functional f) const {
  const auto it = std::find(functionals.begin(), functionals.end(), f);
  require(it != functionals.end(), ErrorCode::invalid_parameter, std::string("functional not recorded: ") + to_string(f));
  return Eigen::Index(it - functionals.begin());
}

EnsembleStats reduce_samples(const std::vector<Eigen::MatrixXd>& samples, std::vector<double> times,
                             std::vector<Functional> functionals) {
  require(!samples.empty(), ErrorCode::invalid_parameter, "no samples to reduce");
  const auto n = double(samples.size());
  EnsembleStats s;
  s.times = std::move(times);
  s.functionals = std::move(functionals);
  s.n_paths = int(samples.size());
  s.mean = Eigen::MatrixXd::Zero(samples[0].rows(), samples[0].cols());
  for (const auto& m : samples) s.mean += m;
  s.mean /= n;
  s.variance = Eigen::MatrixXd::Zero(s.mean.rows(), s.mean.cols());
  if (samples.size() > 1) {
    for (const auto& m : samples) s.variance += (m - s.mean).array().square().matrix();
    s.variance /= n - 1.0;
  }
  s.stderr_ = (s.variance.array() / n).sqrt().matrix();
  return s;
}

namespace {

std::vector<double> resolved_times(const EnsembleConfig& ens, double T) {
  auto t = ens.output_times.empty() ? std::vector<double>{T} : ens.output_times;
  std::sort(t.begin(), t.end());
  return t;
}

BrownianPath path_for(const EnsembleConfig& ens, int i, double T) {
  const double dt = ens.path_dt > 0.0 ? std::min(ens.path_dt, T) : T / 1024.0;
  return sample_brownian(T, dt, ens.sigma, ens.seed_of(i));
}

bool needs_other(const std::vector<Functional>& fs) {
  return std::any_of(fs.begin(), fs.end(),
                     [](Functional f) { return f == Functional::l1_gap || f == Functional::kinetic_gap_total; });
}

double evaluate(Functional f, const GridFunctiond& u, const GridFunctiond* other, double xi_cell) {
  switch (f) {
    case Functional::l1_norm: return u.l1_norm();
    case Functional::linf_norm: return u.linf_norm();
    case Functional::mass: return u.integral();
    case Functional::l1_gap: return l1_distance(u, *other);
    case Functional::kinetic_gap_total: {
      const double U = std::max(u.linf_norm(), other->linf_norm());
      const UniformGrid xi = state_grid(U > 0.0 ? U : 1.0, xi_cell > 0.0 ? xi_cell : u.grid.h);
      return pair_gap_identity(chi_field(u, xi), chi_field(*other, xi)).lhs;
    }
  }
  return 0.0;
}

[[noreturn]] void rethrow_with_seed(const Error& e, std::uint64_t seed) {
  throw Error(e.code(), std::string(e.what()) + " [path seed " + std::to_string(seed) + "]");
}

}  // namespace

EnsembleStats ensemble_expectation(const FluxField& b, const GridFunctiond& u0, double T, const EnsembleConfig& ens,
                                   const SolutionFn& other) {
  require(ens.n_paths >= 1, ErrorCode::invalid_parameter, "ensemble needs at least one path");
  require(!needs_other(ens.functionals) || bool(other), ErrorCode::invalid_parameter,
          "gap functionals need a second solution");
  const auto times = resolved_times(ens, T);
  std::vector<Eigen::MatrixXd> samples(std::size_t(ens.n_paths));
  parallel_for(samples.size(), ens.threads, [&](std::size_t i) {
    const BrownianPath W = path_for(ens, int(i), T);
    try {
      const Trajectory traj = transformed_solve_per_path(b, u0, W, ens.solver, T, times);
      Eigen::MatrixXd m(Eigen::Index(ens.functionals.size()), Eigen::Index(times.size()));
      for (std::size_t k = 0; k < times.size(); ++k) {
        const GridFunctiond& u = traj.output(k);
        GridFunctiond ref;
        if (other) ref = GridFunctiond::sample(u.grid, [&](double x) { return other(traj.output_time(k), x); });
        for (std::size_t f = 0; f < ens.functionals.size(); ++f)
          m(Eigen::Index(f), Eigen::Index(k)) = evaluate(ens.functionals[f], u, other ? &ref : nullptr, ens.xi_cell);
      }
      samples[i] = std::move(m);
    } catch (const Error& e) {
      rethrow_with_seed(e, W.seed);
    }
  });
  return reduce_samples(samples, times, ens.functionals);
}

EnsembleStats coupled_ensemble(const CoupledProblem& prob, double T, const EnsembleConfig& ens) {
  require(ens.n_paths >= 1, ErrorCode::invalid_parameter, "ensemble needs at least one path");
  require(prob.u01.grid.same_as(prob.u02.grid), ErrorCode::grid_mismatch, "coupled data on different grids");
  const auto times = resolved_times(ens, T);
  SolverConfig c1 = ens.solver, c2 = ens.solver;
  if (prob.viscosity1 >= 0.0) c1.viscosity = prob.viscosity1;
  if (prob.viscosity2 >= 0.0) c2.viscosity = prob.viscosity2;
  std::vector<Eigen::MatrixXd> samples(std::size_t(ens.n_paths));
  parallel_for(samples.size(), ens.threads, [&](std::size_t i) {
    const BrownianPath W = path_for(ens, int(i), T);
    try {
      const Trajectory t1 = transformed_solve_per_path(prob.b1, prob.u01, W, c1, T, times);
      const Trajectory t2 = transformed_solve_per_path(prob.b2, prob.u02, W, c2, T, times);
      Eigen::MatrixXd m(Eigen::Index(ens.functionals.size()), Eigen::Index(times.size()));
      for (std::size_t k = 0; k < times.size(); ++k)
        for (std::size_t f = 0; f < ens.functionals.size(); ++f)
          m(Eigen::Index(f), Eigen::Index(k)) = evaluate(ens.functionals[f], t1.output(k), &t2.output(k), ens.xi_cell);
      samples[i] = std::move(m);
    } catch (const Error& e) {
      rethrow_with_seed(e, W.seed);
    }
  });
  return reduce_samples(samples, times, ens.functionals);
}

MeanField ensemble_mean_field(const FluxField& b, const GridFunctiond& u0, double T, const EnsembleConfig& ens) {
  require(ens.n_paths >= 1, ErrorCode::invalid_parameter, "ensemble needs at least one path");
  std::vector<Eigen::MatrixXd> samples(std::size_t(ens.n_paths));
  parallel_for(samples.size(), ens.threads, [&](std::size_t i) {
    const BrownianPath W = path_for(ens, int(i), T);
    try {
      samples[i] = transformed_solve_per_path(b, u0, W, ens.solver, T).final_state().values;
    } catch (const Error& e) {
      rethrow_with_seed(e, W.seed);
    }
  });
  const EnsembleStats s = reduce_samples(samples, {T}, {});
  return {GridFunctiond(u0.grid, s.mean.col(0)), GridFunctiond(u0.grid, s.stderr_.col(0))};
}

FluxField tabulated_mollification(const FluxField& b, double eps, double x_lo, double x_hi, double R) {
  const FluxField m = mollify_flux(b, {eps, eps});
  if (!m.separable()) return m;
  const double dxi = std::min(eps / 8.0, R / 64.0);
  return tabulate_separable(m, x_lo, x_hi, eps / 64.0, -R - 2.0 * dxi, R + 2.0 * dxi, dxi);
}

std::vector<StabilityRow> stability_experiment(const StabilitySetup& setup, const EnsembleConfig& ens) {
  require(!setup.eps_list.empty(), ErrorCode::invalid_parameter, "empty mollification list");
  const UniformGrid& grid = setup.u01.grid;
  const double reach = 6.0 * ens.sigma * std::sqrt(setup.T) + 1.0;
  const double R = std::max(setup.u01.linf_norm(), setup.u02.linf_norm()) + 0.5;
  const double initial = setup.pairing == Pairing::data ? l1_distance(setup.u01, setup.u02) : 0.0;

  std::vector<StabilityRow> rows;
  for (double eps : setup.eps_list) {
    require(eps > 0.0, ErrorCode::invalid_parameter, "mollification scales must be positive");
    const FluxField b1 = tabulated_mollification(setup.b, eps, grid.lo - reach, grid.hi() + reach, R);
    CoupledProblem prob{b1, b1, setup.u01, setup.u02};
    if (setup.pairing == Pairing::data) {
      if (setup.tie_viscosity) prob.viscosity1 = prob.viscosity2 = eps;
    } else {
      prob.b2 = tabulated_mollification(setup.b, 0.5 * eps, grid.lo - reach, grid.hi() + reach, R);
      prob.u02 = setup.u01;
      if (setup.tie_viscosity) {
        prob.viscosity1 = eps;
        prob.viscosity2 = 0.5 * eps;
      }
    }
    EnsembleConfig e = ens;
    e.functionals = {Functional::l1_gap};
    std::vector<EnsembleConfig> runs{e};
    if (setup.sigma_zero_control) {
      EnsembleConfig c = e;
      c.sigma = 0.0;
      c.n_paths = 1;  // every path is W = 0
      runs.push_back(c);
    }
    for (const auto& run : runs) {
      const EnsembleStats s = coupled_ensemble(prob, setup.T, run);
      for (std::size_t k = 0; k < s.times.size(); ++k) {
        StabilityRow r;
        r.epsilon = eps;
        r.sigma = run.sigma;
        r.time = s.times[k];
        r.gap_mean = s.mean(0, Eigen::Index(k));
        r.gap_variance = s.variance(0, Eigen::Index(k));
        r.gap_stderr = s.stderr_(0, Eigen::Index(k));
        r.initial_gap = initial;
        r.n_paths = s.n_paths;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::vector<SelectionRow> selection_study(const FluxField& b, const GridFunctiond& u0, double K,
                                          const std::vector<double>& sigmas, double T, const EnsembleConfig& ens) {
  require(!sigmas.empty(), ErrorCode::invalid_parameter, "empty sigma list");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    require(sigmas[i] > 0.0, ErrorCode::invalid_parameter, "sigma values must be positive");
    require(i == 0 || sigmas[i] < sigmas[i - 1], ErrorCode::invalid_parameter, "sigma list must strictly decrease");
  }
  const auto u1 = GridFunctiond::sample(u0.grid, [&](double x) { return reference_solution(1, T, x, K, T); });
  const auto u2 = GridFunctiond::sample(u0.grid, [&](double x) { return reference_solution(2, T, x, K, T); });
  std::vector<SelectionRow> rows;
  for (double s : sigmas) {
    EnsembleConfig e = ens;
    e.sigma = s;
    const MeanField m = ensemble_mean_field(b, u0, T, e);
    rows.push_back({s, l1_distance(m.mean, u1), l1_distance(m.mean, u2), m.stderr_.l1_norm(), e.n_paths});
  }
  return rows;
}

}  // namespace wpn
