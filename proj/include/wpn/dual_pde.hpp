#pragma once

#include "wpn/core.hpp"
#include "wpn/flux.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace wpn {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// ||p_t||_{L^m(R^d)} (or ||grad p_t||) for the kernel of (1/2) Laplacian,
/// p_t(x) = (2 pi t)^{-d/2} exp(-|x|^2 / 2t). Closed-form Gaussian integrals; m = infinity allowed.
double heat_kernel_norm(double t, double m, int d = 1, bool gradient = false);
/// The t-exponent of that norm: -(d - d/m)/2, or -(1 + d - d/m)/2 for the gradient.
double heat_kernel_exponent(double m, int d = 1, bool gradient = false);

/// [0, 1]-valued cutoff: 1 on |x| <= radius, quintic smoothstep down to 0 over `width`.
struct Cutoff {
  double radius = 1.0;
  double width = 2.0;

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  double grad_sup() const { return 15.0 / (8.0 * width); }
  double w1inf_norm() const { return 1.0 + grad_sup(); }
};

/// Backward problem  dt phi + (1/2) dxx phi + (F + h) phi = 0 on [0, t_fin],  phi(t_fin) = psi,
/// extended by phi = psi on [t_fin, T].
struct DualPDEProblem {
  GridFunctiond F;                      // potential on the solve grid, >= 0
  GridFunctiond h;                      // bounded extra potential; empty means 0
  std::function<double(double)> psi;    // terminal data
  double psi_linf = 1.0, psi_grad = 0.0;
  double t_fin = 1.0;
  double T = 1.0;
};

struct DualConfig {
  double cfl = 0.45;
  int record_stride = 0;  // 0: ~200 snapshots
};

/// Snapshots of phi at decreasing times t_fin = times[0] > ... > times.back() = 0.
/// phi_dt[k] is the one-step difference (phi(t_k) - phi(t_k - dt)) / dt at the same level.
struct DualSolution {
  UniformGrid x;
  std::vector<double> times;
  std::vector<GridFunctiond> phi;
  std::vector<GridFunctiond> phi_dt;
  double dt = 0.0;
  double t_fin = 0.0, T = 0.0;
  std::function<double(double)> psi;
  double psi_linf = 0.0, psi_grad = 0.0;

  /// phi(0, .)
  const GridFunctiond& initial() const { return phi.back(); }
  /// phi(t, x) for t in [0, T]: linear in t between snapshots, psi beyond t_fin.
  double value(double t, double x) const;
};

DualSolution solve_dual_backward(const DualPDEProblem& prob, const DualConfig& cfg = {});

struct MonteCarloEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  int n_samples = 0;
};

/// E[ exp(int_0^t (g + h)(x + W_r - W_t) dr) data(x - W_t) ] with a standard Brownian W on
/// `n_steps` lattice steps, trapezoid rule in r. Sample i uses key seed + i.
MonteCarloEstimate feynman_kac(const std::function<double(double)>& g, const std::function<double(double)>& h,
                               const std::function<double(double)>& data, double t, double x, int n_samples,
                               std::uint64_t seed, int n_steps = 512, int threads = 1);

struct PotentialNorms {
  double g_lp = 0.0;  // ||g||_{L^p}
  double p = 1.5;
  double h_linf = 0.0;
};

/// Constants of the a-priori estimate for  dt phi = (1/2) dxx phi + (g + h) phi  on [0, T], d = 1:
///   sup ||phi||_inf  <= M = sqrt(2) ||phi_0||_inf exp(K^2 T),
///     K^2 = 2 c^2 ||g||_p^2 T^{1-1/p}/(1 - 1/p) + 2 ||h||_inf^2 T,   c = ||p_1||_{p'}
///   sup ||dx phi||_inf <= ||dx phi_0||_inf + M (||g||_p c' T^{(1-1/p)/2} / ((1-1/p)/2) + ||h||_inf 2 sqrt(2T/pi)),
///     c' = ||dx p_1||_{p'}
/// (Young for the convolutions, Cauchy-Schwarz and Gronwall for the L^inf bound).
struct W1InfBound {
  double linf = 0.0;
  double grad = 0.0;
  double total() const { return linf + grad; }
};
W1InfBound w1inf_bound(const PotentialNorms& norms, double phi0_linf, double phi0_grad, double T);

/// max_t ( ||phi_t||_inf + ||dx phi_t||_inf )  (one-sided differences) against w1inf_bound.
Certificate w1inf_certificate(const DualSolution& phi, const PotentialNorms& norms);
double w1inf_measured(const DualSolution& phi);

/// sup over snapshots, interior cells and xi in [-R, R] of
///   dt phi + (1/2) dxx phi + div b phi + b dx phi
/// against C_target = ||b||_inf ||dx phi||_inf (both measured on the same lattice), at relative tolerance `tol`.
Certificate gronwall_certificate(const DualSolution& phi, const FluxField& b, double R, int n_xi = 33,
                                 double tol = 0.05);

/// F(x) = sup_{|xi| <= R} |div b(x, xi)| on the grid (kinks are not skipped; use a mollified b).
GridFunctiond divergence_potential(const FluxField& b, double R, const UniformGrid& grid, int n_xi = 33);

}  // namespace wpn
