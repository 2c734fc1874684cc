#include "wpn/solver.hpp"

#include "wpn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wpn {

namespace {

double ghost(const Eigen::VectorXd& v, Eigen::Index i, Boundary bc) {
  const Eigen::Index n = v.size();
  if (i >= 0 && i < n) return v[i];
  if (bc == Boundary::pad) return 0.0;
  return i < 0 ? v[0] : v[n - 1];
}

double estimate_speed(const ShiftedFlux& g, const UniformGrid& grid, double U) {
  double s = 0.0;
  const double probes[] = {-U, -0.5 * U, 0.0, 0.5 * U, U};
  for (Eigen::Index j = 0; j <= grid.n; ++j)
    for (double xi : probes) s = std::max(s, std::abs(g(0.0, grid.edge(j), xi)));
  return s;
}

}  // namespace

Trajectory solve_viscous(const ShiftedFlux& g, const GridFunctiond& u0, const SolverConfig& cfg, double T,
                         std::vector<double> output_times) {
  require(cfg.cfl > 0.0 && cfg.cfl < 1.0, ErrorCode::invalid_parameter, "cfl must lie in (0, 1)");
  require(T > 0.0, ErrorCode::invalid_parameter, "horizon T must be positive");
  require(u0.values.allFinite(), ErrorCode::invalid_parameter, "initial data is not finite");
  const UniformGrid& grid = u0.grid;
  require(grid.n >= 3, ErrorCode::invalid_parameter, "solver needs at least 3 cells");
  if (output_times.empty()) output_times = {T};
  std::sort(output_times.begin(), output_times.end());
  require(output_times.front() >= 0.0 && output_times.back() <= T * (1 + 1e-12), ErrorCode::invalid_parameter,
          "output times must lie in [0, T]");

  const double dx = grid.h;
  const double eps = cfg.viscosity < 0.0 ? dx : cfg.viscosity;
  const double U = u0.linf_norm();
  const double speed = estimate_speed(g, grid, U);
  const double rate = 2.0 * speed / dx + 2.0 * eps / (dx * dx);
  std::size_t n_steps = rate > 0.0 ? static_cast<std::size_t>(std::ceil(T * rate / cfg.cfl)) : 1;
  if (cfg.max_dt > 0.0) n_steps = std::max(n_steps, static_cast<std::size_t>(std::ceil(T / cfg.max_dt - 1e-9)));
  n_steps = std::max<std::size_t>(n_steps, 1);
  double dt = T / double(n_steps);

  Trajectory traj;
  traj.viscosity = eps;
  traj.config = cfg;

  Eigen::VectorXd v = u0.values;
  Eigen::VectorXd next(v.size());
  Eigen::VectorXd speeds(grid.n + 1);
  std::size_t pending = 0;

  auto record = [&](double t, bool as_output) {
    if (!traj.times.empty() && traj.times.back() == t) {
      if (as_output) traj.outputs.push_back(traj.times.size() - 1);
      return;
    }
    traj.times.push_back(t);
    traj.snapshots.emplace_back(grid, v);
    if (as_output) traj.outputs.push_back(traj.times.size() - 1);
  };
  auto flush_outputs = [&](double t, double step) {
    while (pending < output_times.size() && t >= output_times[pending] - 0.5 * step) {
      record(t, true);
      ++pending;
    }
  };

  record(0.0, false);
  flush_outputs(0.0, dt);

  const double guard = cfg.guard_level * U;
  const Eigen::Index nguard = std::min<Eigen::Index>(cfg.guard_cells, grid.n / 2);
  int halvings = 0;
  double t = 0.0;
  std::size_t step = 0;
  // Steps are counted in units of the current dt; the run ends exactly at T.
  double remaining_units = double(n_steps);
  while (remaining_units > 0.5) {
    const double t_mid = t + 0.5 * dt;
    const double W = g.shift(t_mid);
    const FluxField& b = g.base();
    for (Eigen::Index j = 0; j <= grid.n; ++j) {
      const double vl = ghost(v, j - 1, cfg.boundary), vr = ghost(v, j, cfg.boundary);
      speeds[j] = b.state_mean(grid.edge(j) + W, std::min(vl, vr), std::max(vl, vr));
    }
    const double lambda = dt / dx, mu = eps * dt / (dx * dx);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < grid.n; ++i)
      worst = std::max(worst, lambda * (std::max(speeds[i], 0.0) - std::min(speeds[i + 1], 0.0)) + 2.0 * mu);
    if (!(worst <= 1.0 + 1e-12)) {
      require(++halvings <= cfg.max_halvings, ErrorCode::step_size_underflow,
              "time step halved " + std::to_string(cfg.max_halvings) + " times without restoring monotonicity");
      dt *= 0.5;
      remaining_units *= 2.0;
      continue;
    }
    for (Eigen::Index i = 0; i < grid.n; ++i) {
      const double vm = ghost(v, i - 1, cfg.boundary), vp = ghost(v, i + 1, cfg.boundary);
      next[i] = v[i] - lambda * (std::max(speeds[i], 0.0) * (v[i] - vm) + std::min(speeds[i + 1], 0.0) * (vp - v[i])) +
                mu * (vp - 2.0 * v[i] + vm);
    }
    v.swap(next);
    ++step;
    remaining_units -= 1.0;
    t = remaining_units > 0.5 ? t + dt : T;

    if (cfg.boundary == Boundary::pad) {
      const double edge = std::max(v.head(nguard).cwiseAbs().maxCoeff(), v.tail(nguard).cwiseAbs().maxCoeff());
      if (edge > guard)
        throw Error(ErrorCode::domain_too_small, "solution reached the boundary guard at t = " + std::to_string(t) +
                                                     " (|v| = " + std::to_string(edge) + ")");
    }
    if (cfg.record_stride > 0 && step % std::size_t(cfg.record_stride) == 0) record(t, false);
    flush_outputs(t, dt);
  }
  if (traj.times.back() != t) record(t, false);
  while (pending < output_times.size()) {
    traj.outputs.push_back(traj.times.size() - 1);
    ++pending;
  }
  traj.dt = dt;
  traj.steps = step;
  return traj;
}

double DefectMeasureEstimate::weighted_total(const std::function<double(double)>& w) const {
  Eigen::VectorXd wv(xi.n);
  for (Eigen::Index j = 0; j < xi.n; ++j) wv[j] = w(xi.center(j));
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double a = by_state.row(Eigen::Index(k)).dot(wv), b = by_state.row(Eigen::Index(k + 1)).dot(wv);
    total += 0.5 * (times[k + 1] - times[k]) * (a + b) * xi.h;
  }
  return total;
}

namespace {

// Visits the nonzero entries (i, j, density) of the defect density at one snapshot.
template <typename Visit>
void visit_defect(const Trajectory& traj, std::size_t snapshot, const UniformGrid& xi_grid, double delta,
                  Visit&& visit) {
  const GridFunctiond& s = traj.snapshots.at(snapshot);
  const Eigen::VectorXd& v = s.values;
  const Boundary bc = traj.config.boundary;
  const double dx = s.grid.h;
  const auto reach = static_cast<Eigen::Index>(std::ceil(delta / xi_grid.h)) + 1;
  std::vector<double> w(std::size_t(2 * reach + 1));
  for (Eigen::Index i = 0; i < s.grid.n; ++i) {
    const double dp = (ghost(v, i + 1, bc) - v[i]) / dx, dm = (v[i] - ghost(v, i - 1, bc)) / dx;
    const double energy = traj.viscosity * 0.5 * (dp * dp + dm * dm);
    if (energy == 0.0) continue;
    // Discrete kernel weights renormalized to unit mass, so each x carries exactly eps |dx v|^2.
    const Eigen::Index c = static_cast<Eigen::Index>(std::floor((v[i] - xi_grid.lo) / xi_grid.h));
    const Eigen::Index j0 = std::max<Eigen::Index>(0, c - reach), j1 = std::min(xi_grid.n - 1, c + reach);
    double wsum = 0.0;
    for (Eigen::Index j = j0; j <= j1; ++j) {
      w[std::size_t(j - j0)] = BumpKernel::scaled(xi_grid.center(j) - v[i], delta);
      wsum += w[std::size_t(j - j0)];
    }
    require(wsum > 0.0, ErrorCode::state_out_of_range, "solution value outside the state grid");
    const double scale = energy / (wsum * xi_grid.h);
    for (Eigen::Index j = j0; j <= j1; ++j)
      if (w[std::size_t(j - j0)] > 0.0) visit(i, j, w[std::size_t(j - j0)] * scale);
  }
}

}  // namespace

Eigen::MatrixXd defect_density(const Trajectory& traj, std::size_t snapshot, const UniformGrid& xi_grid,
                               double delta) {
  require(traj.viscosity > 0.0, ErrorCode::defect_undefined, "defect measure needs a viscous (eps > 0) trajectory");
  if (delta <= 0.0) delta = 2.0 * xi_grid.h;
  Eigen::MatrixXd density = Eigen::MatrixXd::Zero(traj.snapshots.at(snapshot).grid.n, xi_grid.n);
  visit_defect(traj, snapshot, xi_grid, delta, [&](Eigen::Index i, Eigen::Index j, double d) { density(i, j) = d; });
  return density;
}

DefectMeasureEstimate defect_measure(const Trajectory& traj, const UniformGrid& xi_grid, double delta) {
  require(traj.viscosity > 0.0, ErrorCode::defect_undefined, "defect measure needs a viscous (eps > 0) trajectory");
  if (delta <= 0.0) delta = 2.0 * xi_grid.h;
  DefectMeasureEstimate m;
  m.x = traj.snapshots.front().grid;
  m.xi = xi_grid;
  m.delta = delta;
  m.times = traj.times;
  const auto nt = static_cast<Eigen::Index>(traj.times.size());
  m.by_state = Eigen::MatrixXd::Zero(nt, xi_grid.n);
  m.by_space = Eigen::MatrixXd::Zero(nt, m.x.n);
  m.mass_at_t.assign(traj.times.size(), 0.0);
  for (Eigen::Index k = 0; k < nt; ++k) {
    double mass = 0.0;
    visit_defect(traj, std::size_t(k), xi_grid, delta, [&](Eigen::Index i, Eigen::Index j, double d) {
      m.by_state(k, j) += d * m.x.h;
      m.by_space(k, i) += d * xi_grid.h;
      mass += d;
    });
    m.mass_at_t[std::size_t(k)] = mass * m.x.h * xi_grid.h;
  }
  for (std::size_t k = 0; k + 1 < m.times.size(); ++k)
    m.total_mass += 0.5 * (m.times[k + 1] - m.times[k]) * (m.mass_at_t[k] + m.mass_at_t[k + 1]);
  return m;
}

Certificate check_apriori_bounds(const Trajectory& traj, const DefectMeasureEstimate& m, const FluxField& b,
                                 double p) {
  require(p >= 1.0, ErrorCode::invalid_parameter, "p must be >= 1");
  const GridFunctiond& u0 = traj.snapshots.front();
  const double U = u0.linf_norm();
  const double T = traj.times.back();

  double max_norm = 0.0;
  for (const auto& s : traj.snapshots) max_norm = std::max(max_norm, s.linf_norm());
  Certificate cert;
  const double max_slack = U + 1e-12 * U - max_norm;
  cert.add("max_principle_slack", max_slack, 0.0, max_slack >= 0.0);

  // ||div b||_{L^1([0,T] x grid x [-U, U])}
  double div_l1 = 0.0;
  if (U > 0.0) {
    for (Eigen::Index i = 0; i < u0.grid.n; ++i) {
      const double x = u0.grid.center(i);
      const double row = quad::gauss_split([&](double xi) { return std::abs(b.div_x(x, xi)); }, -U, U, {0.0}, 8);
      if (std::isfinite(row)) div_l1 += row * u0.grid.h;
    }
    div_l1 *= T;
  }
  // Time-resolved form: ||u(t)||_p^p + p(p-1) int_0^t int int |xi|^{p-2} m  <=  RHS  for every t.
  Eigen::VectorXd wv(m.xi.n);
  for (Eigen::Index j = 0; j < m.xi.n; ++j)
    wv[j] = p == 2.0 ? 1.0 : std::pow(std::abs(m.xi.center(j)), p - 2.0);
  require(m.times.size() == traj.times.size(), ErrorCode::grid_mismatch, "defect estimate from another trajectory");
  double cumulative = 0.0, lhs = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    if (k > 0) {
      const double a = m.by_state.row(Eigen::Index(k - 1)).dot(wv), c = m.by_state.row(Eigen::Index(k)).dot(wv);
      cumulative += 0.5 * (traj.times[k] - traj.times[k - 1]) * (a + c) * m.xi.h;
    }
    lhs = std::max(lhs, traj.snapshots[k].lp_norm_pow(p) + p * (p - 1.0) * cumulative);
  }
  const double u0_lp = u0.lp_norm_pow(p);
  const double rhs = u0_lp + p * std::pow(U, p - 1.0) * div_l1;
  const double slack = rhs - lhs;
  cert.add("lp_budget_slack", slack, -1e-3 * u0_lp, slack >= -1e-3 * u0_lp);
  return cert;
}

TestFunction bump_test_function(double tc, double xc, double rt, double rx) {
  require(rt > 0.0 && rx > 0.0, ErrorCode::invalid_test_function, "test function widths must be positive");
  TestFunction phi;
  phi.value = [=](double t, double x) { return UnitBump::value((t - tc) / rt) * UnitBump::value((x - xc) / rx); };
  phi.dt = [=](double t, double x) { return UnitBump::d1((t - tc) / rt) / rt * UnitBump::value((x - xc) / rx); };
  phi.dx = [=](double t, double x) { return UnitBump::value((t - tc) / rt) * UnitBump::d1((x - xc) / rx) / rx; };
  phi.t_lo = tc - rt;
  phi.t_hi = tc + rt;
  phi.x_lo = xc - rx;
  phi.x_hi = xc + rx;
  return phi;
}

double kruzkov_entropy_residual(const std::function<double(double, double)>& u, const FluxField& b, double k,
                                const TestFunction& phi, const SpaceTimeWindow& window, const KruzkovOptions& opts) {
  require(phi.t_lo > 0.0 && phi.t_hi < window.T, ErrorCode::invalid_test_function,
          "test function support touches t = 0 or t = T");
  require(phi.x_lo > window.x_lo && phi.x_hi < window.x_hi, ErrorCode::invalid_test_function,
          "test function support touches the spatial boundary");

  auto integrand = [&](double t, double x) {
    const double w = u(t, x);
    const double s = w > k ? 1.0 : (w < k ? -1.0 : 0.0);
    if (s == 0.0) return 0.0;
    const double flux = b.antiderivative(x, w) - b.antiderivative(x, k);
    const double source = b.antiderivative_dx(x, w) - b.antiderivative_dx(x, k);
    return std::abs(w - k) * phi.dt(t, x) + s * flux * phi.dx(t, x) + s * source * phi.value(t, x);
  };

  const double width = phi.x_hi - phi.x_lo;
  auto space_integral = [&](double t) {
    std::vector<double> cuts{phi.x_lo, phi.x_hi};
    std::vector<double> kinks;
    for (double c : b.kinks())
      if (c > phi.x_lo && c < phi.x_hi) {
        cuts.push_back(c);
        kinks.push_back(c);
      }
    if (opts.jumps)
      for (double c : opts.jumps(t))
        if (c > phi.x_lo && c < phi.x_hi) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto is_kink = [&](double c) { return std::find(kinks.begin(), kinks.end(), c) != kinks.end(); };

    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], c = cuts[i + 1];
      if (c <= a) continue;
      const int panels = std::max(2, int(std::ceil(opts.space_panels * (c - a) / width)));
      const double m = 0.5 * (a + c), half = 0.5 * (c - a);
      // Halves that end at a kink of b are integrated in tau with x = kink +- half tau^2, which
      // absorbs inverse-square-root singularities of div b.
      auto graded = [&](double kink, double dir) {
        return quad::gauss_panels(
            [&](double tau) { return integrand(t, kink + dir * half * tau * tau) * 2.0 * half * tau; }, 0.0, 1.0,
            (panels + 1) / 2);
      };
      sum += is_kink(a) ? graded(a, 1.0) : quad::gauss_panels([&](double x) { return integrand(t, x); }, a, m, (panels + 1) / 2);
      sum += is_kink(c) ? graded(c, -1.0) : quad::gauss_panels([&](double x) { return integrand(t, x); }, m, c, (panels + 1) / 2);
    }
    return sum;
  };
  return quad::gauss_panels(space_integral, phi.t_lo, phi.t_hi, opts.time_panels);
}

}  // namespace wpn
