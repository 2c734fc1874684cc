#pragma once

#include "wpn/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wpn {

/// Flux of the form b(x, xi) = a(x) c(xi). Most fields in this library have it,
/// and the solvers use it to avoid re-evaluating the spatial factor per state.
struct SeparableForm {
  std::function<double(double)> spatial;     // a(x)
  std::function<double(double)> spatial_dx;  // a'(x)
  std::function<double(double)> state;       // c(xi)
};

/// Inhomogeneous velocity field b(x, xi) together with its spatial divergence.
/// Immutable after construction; copies share the underlying callables.
class FluxField {
 public:
  using Fn = std::function<double(double, double)>;

  FluxField(std::string name, Fn eval, Fn div_x, double support_radius, double linf_bound, double p_exponent,
            std::vector<double> kinks = {});
  FluxField(std::string name, SeparableForm form, double support_radius, double linf_bound, double p_exponent,
            std::vector<double> kinks = {});

  double operator()(double x, double xi) const { return eval_(x, xi); }
  double eval(double x, double xi) const { return eval_(x, xi); }
  double div_x(double x, double xi) const { return div_(x, xi); }

  /// Mean of b(x, .) over the state interval between v_lo and v_hi
  /// (the point value when the interval is degenerate).
  double state_mean(double x, double v_lo, double v_hi) const;

  /// B(x, w) = int_0^w b(x, v) dv.
  double antiderivative(double x, double w) const;
  /// Partial x-derivative of B at fixed w: int_0^w div_x b(x, v) dv.
  double antiderivative_dx(double x, double w) const;

  const std::string& name() const { return name_; }
  double support_radius() const { return support_radius_; }
  double linf_bound() const { return linf_bound_; }
  double p_exponent() const { return p_exponent_; }
  /// Points where b(., xi) is not differentiable; div_x is meaningless there.
  const std::vector<double>& kinks() const { return kinks_; }
  const std::optional<SeparableForm>& separable() const { return separable_; }

  /// Same field with a different declared support radius (and linf bound).
  FluxField with_bounds(double support_radius, double linf_bound) const;

 private:
  std::string name_;
  Fn eval_;
  Fn div_;
  std::optional<SeparableForm> separable_;
  double support_radius_;
  double linf_bound_;
  double p_exponent_;
  std::vector<double> kinks_;
};

struct MollifierSpec {
  double spatial_scale = 0.1;  // epsilon
  double state_scale = 0.1;    // delta
};

/// 2 sgn(x) min(sqrt|x|, K) xi : the irregular model flux. Kinks at 0 and +-K^2.
FluxField model_flux(double K, double support_radius = 1.0);

/// b(x, xi) = c0 + cx x + cxi xi; divergence cx.
FluxField affine_flux(double c0, double cx, double cxi, double support_radius = 1.0);
inline FluxField constant_flux(double c, double support_radius = 1.0) {
  return affine_flux(c, 0.0, 0.0, support_radius);
}
/// Homogeneous Burgers-type velocity b(x, xi) = scale * xi.
inline FluxField burgers_like_flux(double scale = 1.0, double support_radius = 1.0) {
  return affine_flux(0.0, 0.0, scale, support_radius);
}

/// Rectangular table of samples (x, xi, b, div_b) with bilinear interpolation.
/// Outside the table the nearest edge value is used.
FluxField tabulated_flux(std::vector<double> xs, std::vector<double> xis, std::vector<double> b_values,
                         std::vector<double> div_values, double p_exponent = 1.5);
/// Reads a CSV with header x,xi,b,div_b (any row order) into tabulated_flux.
FluxField custom_table_flux(const std::string& path, double p_exponent = 1.5);

/// Convolution of b with rho_eps(x) rho-bar_delta(xi); divergence from the kernel derivative.
FluxField mollify_flux(const FluxField& b, const MollifierSpec& spec, double window_half_width = 1e300);

/// Cached copy of a smooth separable field: a, a' and c are sampled on uniform
/// lattices and evaluated by cubic Hermite interpolation. Used to make repeated
/// solver sweeps over a mollified field affordable. Outside the lattices the
/// original callables are used.
FluxField tabulate_separable(const FluxField& b, double x_lo, double x_hi, double dx, double xi_lo, double xi_hi,
                             double dxi);

/// Closed-form entropy solutions of the model problem with u0 = 1_[0,1].
/// variant 1 keeps the left edge at 0, variant 2 spreads it to -(t/2)^2.
double reference_solution(int variant, double t, double x, double K, double T_max);

struct DivergenceSup {
  GridFunctiond F;                    // sup_xi |div_x b(x, xi)|
  std::vector<Eigen::Index> skipped;  // cells within half a cell of a kink (F set to 0)
  double p = 1.5;
  double lp_norm = 0.0;               // (sum |F|^p dx)^(1/p), skipped cells excluded
};

DivergenceSup divergence_sup(const FluxField& b, double R, const UniformGrid& grid, int n_state_samples = 33);

}  // namespace wpn
