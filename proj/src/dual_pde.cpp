#include "wpn/dual_pde.hpp"

#include "wpn/parallel.hpp"
#include "wpn/rng.hpp"

#include <algorithm>
#include <cmath>

namespace wpn {

namespace {
constexpr double two_pi = 6.283185307179586;
}

double heat_kernel_exponent(double m, int d, bool gradient) {
  require(m >= 1.0 && d >= 1, ErrorCode::invalid_parameter, "need m >= 1 and d >= 1");
  const double inv_m = std::isinf(m) ? 0.0 : 1.0 / m;
  return -((gradient ? 1.0 : 0.0) + d - d * inv_m) / 2.0;
}

double heat_kernel_norm(double t, double m, int d, bool gradient) {
  require(t > 0.0, ErrorCode::invalid_parameter, "heat kernel norm needs t > 0");
  const double scale = std::pow(t, heat_kernel_exponent(m, d, gradient));
  const double peak = std::pow(two_pi, -0.5 * d);
  double unit;
  if (std::isinf(m)) {
    unit = gradient ? peak * std::exp(-0.5) : peak;
  } else if (!gradient) {
    // int exp(-m|y|^2/2) dy = (2 pi / m)^{d/2}
    unit = peak * std::pow(two_pi / m, 0.5 * d / m);
  } else {
    // int |y|^m exp(-m|y|^2/2) dy = |S^{d-1}| (1/2) (2/m)^{(m+d)/2} Gamma((m+d)/2)
    const double sphere = 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
    const double log_int = std::log(0.5 * sphere) + 0.5 * (m + d) * std::log(2.0 / m) + std::lgamma(0.5 * (m + d));
    unit = peak * std::exp(log_int / m);
  }
  return unit * scale;
}

double Cutoff::value(double x) const {
  const double s = (std::abs(x) - radius) / width;
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double Cutoff::d1(double x) const {
  const double s = (std::abs(x) - radius) / width;
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double ds = 30.0 * s * s * (1.0 - s) * (1.0 - s);
  return -(x > 0.0 ? 1.0 : -1.0) * ds / width;
}

double Cutoff::d2(double x) const {
  const double s = (std::abs(x) - radius) / width;
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (width * width);
}

double DualSolution::value(double t, double y) const {
  if (t >= t_fin) return psi(y);
  // times decrease; find k with times[k] >= t >= times[k+1]
  std::size_t k = 0;
  while (k + 2 < times.size() && times[k + 1] > t) ++k;
  const double t0 = times[k], t1 = times[k + 1];
  const double w = t0 == t1 ? 0.0 : (t0 - t) / (t0 - t1);
  return (1.0 - w) * phi[k].interpolate(y) + w * phi[k + 1].interpolate(y);
}

DualSolution solve_dual_backward(const DualPDEProblem& prob, const DualConfig& cfg) {
  require(cfg.cfl > 0.0 && cfg.cfl <= 1.0, ErrorCode::step_size_underflow, "dual solve needs 0 < cfl <= 1");
  require(prob.t_fin > 0.0 && prob.t_fin <= prob.T * (1 + 1e-12), ErrorCode::invalid_parameter,
          "dual horizon must satisfy 0 < t_fin <= T");
  require(bool(prob.psi), ErrorCode::invalid_parameter, "terminal data missing");
  const UniformGrid& grid = prob.F.grid;
  require(grid.n >= 3, ErrorCode::invalid_parameter, "dual solve needs at least 3 cells");
  require(prob.F.values.minCoeff() >= 0.0 && prob.F.values.allFinite(), ErrorCode::invalid_parameter,
          "potential F must be finite and nonnegative");
  Eigen::VectorXd V = prob.F.values;
  if (prob.h.size() > 0) {
    require(prob.h.grid.same_as(grid), ErrorCode::grid_mismatch, "h and F on different grids");
    V += prob.h.values;
  }

  const double dx = grid.h;
  const double rate = 1.0 / (dx * dx) + std::max(0.0, V.maxCoeff());
  const auto n_steps = std::max<std::size_t>(1, std::size_t(std::ceil(prob.t_fin * rate / cfg.cfl)));
  const double dt = prob.t_fin / double(n_steps);
  const std::size_t stride =
      cfg.record_stride > 0 ? std::size_t(cfg.record_stride) : std::max<std::size_t>(1, n_steps / 200);

  DualSolution out;
  out.x = grid;
  out.dt = dt;
  out.t_fin = prob.t_fin;
  out.T = prob.T;
  out.psi = prob.psi;
  out.psi_linf = prob.psi_linf;
  out.psi_grad = prob.psi_grad;

  Eigen::VectorXd phi(grid.n), next(grid.n);
  for (Eigen::Index i = 0; i < grid.n; ++i) phi[i] = prob.psi(grid.center(i));
  const double mu = 0.5 * dt / (dx * dx);
  const Eigen::Index n = grid.n;
  for (std::size_t step = 0; step <= n_steps; ++step) {
    // One explicit step backward in time (also taken past t = 0 to form the last difference quotient).
    for (Eigen::Index i = 0; i < n; ++i) {
      const double l = phi[std::max<Eigen::Index>(i - 1, 0)], r = phi[std::min(i + 1, n - 1)];
      next[i] = phi[i] + mu * (r - 2.0 * phi[i] + l) + dt * V[i] * phi[i];
    }
    if (step % stride == 0 || step == n_steps) {
      const double t = step == n_steps ? 0.0 : prob.t_fin - double(step) * dt;
      out.times.push_back(t);
      out.phi.emplace_back(grid, phi);
      out.phi_dt.emplace_back(grid, (phi - next) / dt);
    }
    if (step == n_steps) break;
    phi.swap(next);
    const double lowest = phi.minCoeff();
    if (lowest < -1e-12)
      throw Error(ErrorCode::scheme_monotonicity_violation, "dual solution went negative: " + std::to_string(lowest));
  }
  return out;
}

MonteCarloEstimate feynman_kac(const std::function<double(double)>& g, const std::function<double(double)>& h,
                               const std::function<double(double)>& data, double t, double x, int n_samples,
                               std::uint64_t seed, int n_steps, int threads) {
  require(n_samples >= 100, ErrorCode::invalid_parameter, "feynman_kac needs at least 100 samples");
  require(t > 0.0 && n_steps >= 1, ErrorCode::invalid_parameter, "feynman_kac needs t > 0 and n_steps >= 1");
  const double dt = t / n_steps, sd = std::sqrt(dt);
  std::vector<double> values(static_cast<std::size_t>(n_samples));
  parallel_for(values.size(), threads, [&](std::size_t i) {
    std::vector<double> W(std::size_t(n_steps) + 1, 0.0);
    for (int k = 0; k < n_steps; ++k) W[std::size_t(k) + 1] = W[std::size_t(k)] + sd * standard_normal(seed + i, std::uint64_t(k));
    const double Wt = W.back();
    auto V = [&](double y) { return (g ? g(y) : 0.0) + (h ? h(y) : 0.0); };
    double integral = 0.0;
    for (int k = 0; k <= n_steps; ++k) {
      const double w = (k == 0 || k == n_steps) ? 0.5 : 1.0;
      integral += w * V(x + W[std::size_t(k)] - Wt);
    }
    values[i] = std::exp(integral * dt) * data(x - Wt);
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n_samples;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n_samples - 1);
  return {mean, std::sqrt(var / n_samples), n_samples};
}

W1InfBound w1inf_bound(const PotentialNorms& norms, double phi0_linf, double phi0_grad, double T) {
  require(norms.p > 1.0 && T > 0.0, ErrorCode::invalid_parameter, "w1inf bound needs p > d = 1 and T > 0");
  const double q = 1.0 - 1.0 / norms.p;   // 1 - 1/p
  const double pc = norms.p / (norms.p - 1.0);  // conjugate exponent p'
  const double c = heat_kernel_norm(1.0, pc, 1, false), cg = heat_kernel_norm(1.0, pc, 1, true);
  const double K2 = 2.0 * c * c * norms.g_lp * norms.g_lp * std::pow(T, q) / q + 2.0 * norms.h_linf * norms.h_linf * T;
  W1InfBound b;
  b.linf = std::sqrt(2.0) * phi0_linf * std::exp(K2 * T);
  b.grad = phi0_grad + b.linf * (norms.g_lp * cg * std::pow(T, 0.5 * q) / (0.5 * q) +
                                 norms.h_linf * 2.0 * std::sqrt(2.0 * T / M_PI));
  return b;
}

namespace {
double grad_sup(const GridFunctiond& f) {
  const auto& v = f.values;
  if (v.size() < 2) return 0.0;
  return (v.tail(v.size() - 1) - v.head(v.size() - 1)).cwiseAbs().maxCoeff() / f.grid.h;
}
}  // namespace

double w1inf_measured(const DualSolution& phi) {
  double m = 0.0;
  for (const auto& f : phi.phi) m = std::max(m, f.linf_norm() + grad_sup(f));
  return m;
}

Certificate w1inf_certificate(const DualSolution& phi, const PotentialNorms& norms) {
  double linf = 0.0, grad = 0.0;
  for (const auto& f : phi.phi) {
    linf = std::max(linf, f.linf_norm());
    grad = std::max(grad, grad_sup(f));
  }
  const W1InfBound b = w1inf_bound(norms, phi.psi_linf, phi.psi_grad, phi.t_fin);
  const double total = w1inf_measured(phi);
  Certificate c;
  c.add("linf_norm", linf, b.linf, linf <= b.linf);
  c.add("grad_norm", grad, b.grad, grad <= b.grad);
  c.add("w1inf_norm", total, b.total(), total <= b.total());
  return c;
}

GridFunctiond divergence_potential(const FluxField& b, double R, const UniformGrid& grid, int n_xi) {
  require(R > 0.0 && n_xi >= 2, ErrorCode::invalid_parameter, "divergence potential needs R > 0, n_xi >= 2");
  return GridFunctiond::sample(grid, [&](double x) {
    double m = 0.0;
    for (int j = 0; j < n_xi; ++j) m = std::max(m, std::abs(b.div_x(x, -R + 2.0 * R * j / (n_xi - 1))));
    return m;
  });
}

Certificate gronwall_certificate(const DualSolution& phi, const FluxField& b, double R, int n_xi, double tol) {
  require(R > 0.0 && R <= b.support_radius() * (1 + 1e-12), ErrorCode::invalid_parameter,
          "R must lie within the flux support radius");
  const UniformGrid& g = phi.x;
  const double dx = g.h;
  std::vector<double> xis(static_cast<std::size_t>(n_xi));
  for (int j = 0; j < n_xi; ++j) xis[std::size_t(j)] = -R + 2.0 * R * j / (n_xi - 1);
  Eigen::MatrixXd bv(g.n, n_xi), dv(g.n, n_xi);
  for (Eigen::Index i = 0; i < g.n; ++i)
    for (int j = 0; j < n_xi; ++j) {
      bv(i, j) = b(g.center(i), xis[std::size_t(j)]);
      dv(i, j) = b.div_x(g.center(i), xis[std::size_t(j)]);
    }
  double sup = -infinity, grad = 0.0;
  for (std::size_t k = 0; k < phi.phi.size(); ++k) {
    const auto& f = phi.phi[k].values;
    const auto& ft = phi.phi_dt[k].values;
    grad = std::max(grad, grad_sup(phi.phi[k]));
    for (Eigen::Index i = 1; i + 1 < g.n; ++i) {
      const double lap = 0.5 * (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dx * dx);
      const double d = (f[i + 1] - f[i - 1]) / (2.0 * dx);
      for (int j = 0; j < n_xi; ++j) sup = std::max(sup, ft[i] + lap + dv(i, j) * f[i] + bv(i, j) * d);
    }
  }
  const double target = bv.cwiseAbs().maxCoeff() * grad;
  Certificate c;
  c.add("gronwall_sup", sup, target, sup <= (1.0 + tol) * target + 1e-9);
  return c;
}

}  // namespace wpn
