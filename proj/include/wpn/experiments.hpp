#pragma once

#include "wpn/core.hpp"
#include "wpn/flux.hpp"
#include "wpn/io.hpp"
#include "wpn/kinetic.hpp"
#include "wpn/solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace wpn {

/// Everything an experiment run depends on. Round-trips through Config bit-exactly.
struct ExperimentConfig {
  std::string experiment;

  // flux
  std::string flux = "model";  // model | burgers_like | constant | affine_x | custom_table
  double flux_K = 3.0;
  double flux_R = 1.0;         // state support radius
  double flux_eps = 0.1;       // mollification scale (0: raw field)
  std::string flux_table;      // path, for custom_table

  // initial data: indicator on [a, b] | gaussian (centre a, variance b) | step (1 for x < a)
  std::string u0 = "indicator";
  double u0_a = 0.0, u0_b = 1.0, u0_amplitude = 1.0;

  // grids
  double x_min = -4.0, x_max = 6.0;
  int n_cells = 256;
  double xi_R = 1.0;
  int xi_cells = 64;

  // solver
  double viscosity = -1.0;  // < 0: dx
  double cfl = 0.45;

  // noise
  double sigma = 1.0;
  int n_paths = 64;
  std::uint64_t base_seed = 20240601;
  double path_dt = 0.0;

  double T = 1.0;
  int threads = 1;

  // experiment-specific lists
  std::vector<double> eps_list;
  std::vector<double> sigma_list;
  std::vector<double> delta_list;
  std::vector<double> times;

  Config to_config() const;
  static ExperimentConfig from_config(const Config& c);
};

/// Registry defaults for an experiment; `smoke` selects the tiny profile.
ExperimentConfig default_config(const std::string& experiment, bool smoke = false);

struct ExperimentResult {
  std::map<std::string, Table> tables;  // file stem -> table
  Certificate certificate;
  std::vector<std::string> notes;  // free-form summary lines
  std::vector<std::uint64_t> seeds;
};

using ExperimentFn = std::function<ExperimentResult(const ExperimentConfig&)>;

/// Names in registry order.
const std::vector<std::string>& experiment_names();
bool is_registered(const std::string& name);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes <stem>.csv for every table, metadata.txt and summary.txt into `dir` (created if needed).
void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& res, const std::string& dir);

/// Flux and initial data as configured.
FluxField make_flux(const ExperimentConfig& cfg);
GridFunctiond make_u0(const ExperimentConfig& cfg, const UniformGrid& grid);

const char* code_version();

/// CSV schemas of the solver and kinetic types: (t, x, u), (t, mass_at_t), (x, xi, f).
/// `snapshots` selects trajectory snapshots by index; empty means all.
Table trajectory_table(const Trajectory& traj, const std::vector<std::size_t>& snapshots = {});
Table defect_mass_table(const DefectMeasureEstimate& m);
Table kinetic_table(const KineticField& f);

}  // namespace wpn
