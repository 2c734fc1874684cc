#pragma once

#include "wpn/core.hpp"
#include "wpn/flux.hpp"

#include <functional>
#include <vector>

namespace wpn {

enum class Boundary {
  pad,      // zero ghost values; abort if the solution reaches the guard cells
  outflow,  // ghost = nearest interior value
};

struct SolverConfig {
  double viscosity = -1.0;  // epsilon; negative means "use dx"
  double cfl = 0.45;
  Boundary boundary = Boundary::pad;
  int record_stride = 0;    // also keep every k-th step (0: only the requested output times)
  int max_halvings = 20;
  int guard_cells = 5;
  double guard_level = 1e-8;  // relative to ||u0||_inf
  double max_dt = 0.0;        // > 0: cap on the step (e.g. the lattice of a driving path)
};

/// g(t, x, xi) = b(x + W(t), xi). Without a shift this is just b.
class ShiftedFlux {
 public:
  explicit ShiftedFlux(FluxField b, std::function<double(double)> shift = {})
      : b_(std::move(b)), shift_(std::move(shift)) {}

  double shift(double t) const { return shift_ ? shift_(t) : 0.0; }
  double operator()(double t, double x, double xi) const { return b_(x + shift(t), xi); }
  const FluxField& base() const { return b_; }

 private:
  FluxField b_;
  std::function<double(double)> shift_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<GridFunctiond> snapshots;
  std::vector<std::size_t> outputs;  // indices of the snapshots taken for requested output times
  double viscosity = 0.0;
  double dt = 0.0;                   // final step size (after any halving)
  std::size_t steps = 0;
  SolverConfig config;

  const GridFunctiond& final_state() const { return snapshots.back(); }
  const GridFunctiond& output(std::size_t k) const { return snapshots.at(outputs.at(k)); }
  double output_time(std::size_t k) const { return times.at(outputs.at(k)); }
};

/// Explicit solve of  dt v + g(t,x,v) dx v = eps dxx v  on the grid of u0.
/// The transport part is upwinded by fluctuation splitting: at each interface the
/// speed is the mean of g over the states on both sides, so jumps travel at the
/// correct (Rankine-Hugoniot) speed; the diffusion is the centred 3-point stencil.
/// The step is dt = T/N with N the smallest count satisfying
/// dt <= cfl / (2 sup|g|/dx + 2 eps/dx^2); it is halved if a step would break monotonicity.
Trajectory solve_viscous(const ShiftedFlux& g, const GridFunctiond& u0, const SolverConfig& cfg, double T,
                         std::vector<double> output_times = {});

/// Kinetic defect of a viscous trajectory,  eps |dx v|^2 rhobar_delta(xi - v),
/// reduced to its two marginals (the full density is large; see defect_density).
struct DefectMeasureEstimate {
  UniformGrid x;
  UniformGrid xi;
  double delta = 0.0;
  std::vector<double> times;
  Eigen::MatrixXd by_state;  // times x xi : int density dx
  Eigen::MatrixXd by_space;  // times x x  : int density dxi
  std::vector<double> mass_at_t;
  double total_mass = 0.0;

  /// int_0^T int int w(xi) m  (trapezoid in time).
  double weighted_total(const std::function<double(double)>& w) const;
};

/// Uses every snapshot of the trajectory (record densely via record_stride).
/// delta <= 0 selects two state cells.
DefectMeasureEstimate defect_measure(const Trajectory& traj, const UniformGrid& xi_grid, double delta = 0.0);
/// Full (x, xi) density at one snapshot.
Eigen::MatrixXd defect_density(const Trajectory& traj, std::size_t snapshot, const UniformGrid& xi_grid,
                               double delta = 0.0);

/// Max principle slack and the L^p energy budget slack.
Certificate check_apriori_bounds(const Trajectory& traj, const DefectMeasureEstimate& m, const FluxField& b,
                                 double p);

/// Smooth nonnegative test function in (t, x) with its partial derivatives and support box.
struct TestFunction {
  std::function<double(double, double)> value, dt, dx;
  double t_lo = 0.0, t_hi = 0.0, x_lo = 0.0, x_hi = 0.0;
};
/// Product bump centred at (tc, xc) with half-widths (rt, rx).
TestFunction bump_test_function(double tc, double xc, double rt, double rx);

struct SpaceTimeWindow {
  double T = 1.0;
  double x_lo = -1.0, x_hi = 1.0;
};

struct KruzkovOptions {
  int time_panels = 48;
  int space_panels = 96;
  /// Known discontinuities of u at time t (improves the x quadrature).
  std::function<std::vector<double>(double)> jumps;
};

/// int int |u-k| phi_t + sgn(u-k) (B(x,u) - B(x,k)) phi_x + sgn(u-k) (dxB(x,u) - dxB(x,k)) phi,
/// B(x,w) = int_0^w b(x,v) dv. Nonnegative for entropy solutions of dt u + b(x,u) dx u = 0.
double kruzkov_entropy_residual(const std::function<double(double, double)>& u, const FluxField& b, double k,
                                const TestFunction& phi, const SpaceTimeWindow& window,
                                const KruzkovOptions& opts = {});

}  // namespace wpn
