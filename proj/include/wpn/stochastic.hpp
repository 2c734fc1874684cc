#pragma once

#include "wpn/core.hpp"
#include "wpn/flux.hpp"
#include "wpn/kinetic.hpp"
#include "wpn/solver.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wpn {

/// sigma * (standard Brownian motion) on a uniform lattice, linear in between.
struct BrownianPath {
  std::vector<double> times;
  std::vector<double> values;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  double horizon() const { return times.back(); }
  /// W(t); constant beyond the horizon.
  double operator()(double t) const;
  double max_abs() const;
};

/// N = ceil(T/dt) increments of variance sigma^2 T/N. Increment k is normal draw k under key `seed`.
BrownianPath sample_brownian(double T, double dt, double sigma, std::uint64_t seed);

/// u(t, x) = v(t, x - W_t) where v solves  dt v + b(x + W_t, v) dx v = eps dxx v.
/// Snapshots of the returned trajectory are already shifted back; times and outputs as in solve_viscous.
Trajectory transformed_solve_per_path(const FluxField& b, const GridFunctiond& u0, const BrownianPath& W,
                                      const SolverConfig& cfg, double T, std::vector<double> output_times = {});

/// u(x - s) on the same grid, linear interpolation at fractional offsets, zero outside.
GridFunctiond shift_grid_function(const GridFunctiond& v, double s);

enum class Functional { l1_norm, linf_norm, mass, l1_gap, kinetic_gap_total };
const char* to_string(Functional f);
Functional parse_functional(const std::string& name);

struct EnsembleConfig {
  int n_paths = 1;
  std::uint64_t base_seed = 0;  // path i uses seed base_seed + i
  double sigma = 1.0;
  SolverConfig solver;
  double path_dt = 0.0;  // Brownian lattice step; <= 0 means T/1024
  int threads = 1;
  std::vector<Functional> functionals{Functional::l1_norm};
  std::vector<double> output_times;  // empty: {T}
  double xi_cell = 0.0;              // state cell for kinetic_gap_total; <= 0 means the space cell

  std::uint64_t seed_of(int path) const { return base_seed + std::uint64_t(path); }
};

struct EnsembleStats {
  std::vector<double> times;
  std::vector<Functional> functionals;
  Eigen::MatrixXd mean;      // functional x time
  Eigen::MatrixXd variance;  // unbiased
  Eigen::MatrixXd stderr_;   // sqrt(variance / n)
  int n_paths = 0;

  Eigen::Index row(Functional f) const;
};

/// Index-ordered mean / unbiased variance / standard error of per-path samples,
/// samples[path](functional, time).
EnsembleStats reduce_samples(const std::vector<Eigen::MatrixXd>& samples, std::vector<double> times,
                             std::vector<Functional> functionals);

/// Pathwise gap functionals compare against `other`, a second solution u2(t, x);
/// without one the gap functionals are undefined.
using SolutionFn = std::function<double(double, double)>;

EnsembleStats ensemble_expectation(const FluxField& b, const GridFunctiond& u0, double T, const EnsembleConfig& ens,
                                   const SolutionFn& other = {});

/// Two solves per path driven by the same W; gap functionals compare them, the others refer to u1.
struct CoupledProblem {
  FluxField b1, b2;
  GridFunctiond u01, u02;
  double viscosity1 = -1.0, viscosity2 = -1.0;  // override the ensemble solver viscosity when >= 0
};
EnsembleStats coupled_ensemble(const CoupledProblem& prob, double T, const EnsembleConfig& ens);

/// Ensemble mean field of u(T, .) with its pointwise standard error.
struct MeanField {
  GridFunctiond mean;
  GridFunctiond stderr_;
};
MeanField ensemble_mean_field(const FluxField& b, const GridFunctiond& u0, double T, const EnsembleConfig& ens);

enum class Pairing {
  data,    // u0_1 vs u0_2 under the same b^eps
  scales,  // u0_1 under b^eps vs b^{eps/2}
};

struct StabilityRow {
  double epsilon = 0.0;
  double sigma = 0.0;
  double time = 0.0;
  double gap_mean = 0.0, gap_variance = 0.0, gap_stderr = 0.0;
  double initial_gap = 0.0;  // int |u0_1 - u0_2| dx
  int n_paths = 0;
};

struct StabilitySetup {
  FluxField b;  // unmollified
  GridFunctiond u01, u02;
  Pairing pairing = Pairing::data;
  std::vector<double> eps_list;
  double T = 1.0;
  bool tie_viscosity = true;  // viscosity = mollification scale of each solve (otherwise the solver's)
  bool sigma_zero_control = true;
};
/// Rows for sigma = ens.sigma and, with the control, sigma = 0 (one path).
std::vector<StabilityRow> stability_experiment(const StabilitySetup& setup, const EnsembleConfig& ens);

/// The mollified flux used for scale eps, tabulated over [x_lo, x_hi] x [-R, R].
FluxField tabulated_mollification(const FluxField& b, double eps, double x_lo, double x_hi, double R);

struct SelectionRow {
  double sigma = 0.0;
  double dist_to_u1 = 0.0, dist_to_u2 = 0.0;
  double stderr_ = 0.0;  // int of the pointwise standard error of the mean field
  int n_paths = 0;
};
/// Mean solution at T against the two closed-form solutions of the model example with cap K.
std::vector<SelectionRow> selection_study(const FluxField& b, const GridFunctiond& u0, double K,
                                          const std::vector<double>& sigmas, double T, const EnsembleConfig& ens);

}  // namespace wpn
