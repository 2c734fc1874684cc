#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wpn {

/// Failure categories shared by every module. Carried by wpn::Error.
enum class ErrorCode {
  invalid_parameter,
  state_out_of_range,
  not_a_kinetic_function,
  resolution_insufficient,
  step_size_underflow,
  domain_too_small,
  defect_undefined,
  invalid_test_function,
  scheme_monotonicity_violation,
  grid_mismatch,
  io_error,
  usage,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

/// One named inequality check. `value` is compared against `bound` by the producer;
/// slack-style checks store the slack in `value` and 0 in `bound`.
struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Collection of checks emitted by a certification routine.
struct Certificate {
  std::vector<Check> checks;

  void add(std::string name, double value, double bound, bool pass) {
    checks.push_back({std::move(name), value, bound, pass});
  }
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  const Check& at(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw std::out_of_range("no check named " + name);
  }
  /// "name: value=..., bound=..., PASS|FAIL" lines.
  std::string to_text() const;
};

/// Uniform cell-centred lattice on [lo, lo + n*h].
/// Used both for space (x) and for the kinetic state variable (xi).
struct UniformGrid {
  double lo = 0.0;
  double h = 1.0;
  Eigen::Index n = 0;

  UniformGrid() = default;
  UniformGrid(double lo_, double hi_, Eigen::Index n_) : lo(lo_), h((hi_ - lo_) / double(n_)), n(n_) {
    require(n_ > 0 && hi_ > lo_, ErrorCode::invalid_parameter, "grid needs n > 0 and hi > lo");
  }

  double hi() const { return lo + double(n) * h; }
  double center(Eigen::Index i) const { return lo + (double(i) + 0.5) * h; }
  double edge(Eigen::Index i) const { return lo + double(i) * h; }

  Eigen::VectorXd centers() const {
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c[i] = center(i);
    return c;
  }

  /// Index of the cell containing y (clamped to the grid).
  Eigen::Index locate(double y) const {
    auto i = static_cast<Eigen::Index>(std::floor((y - lo) / h));
    return std::clamp<Eigen::Index>(i, 0, n - 1);
  }

  bool same_as(const UniformGrid& o) const { return lo == o.lo && h == o.h && n == o.n; }
};

/// A scalar field sampled at the cell centres of a uniform grid.
template <typename Scalar = double>
struct GridFunction {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  UniformGrid grid;
  Vector values;

  GridFunction() = default;
  GridFunction(UniformGrid g, Vector v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.n, ErrorCode::grid_mismatch, "values size differs from grid size");
  }

  /// Sample a callable f(x) at the cell centres.
  template <typename F>
  static GridFunction sample(const UniformGrid& g, F&& f) {
    Vector v(g.n);
    for (Eigen::Index i = 0; i < g.n; ++i) v[i] = static_cast<Scalar>(f(g.center(i)));
    return GridFunction(g, std::move(v));
  }

  Eigen::Index size() const { return grid.n; }
  Scalar operator[](Eigen::Index i) const { return values[i]; }

  Scalar linf_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : Scalar(0); }
  Scalar l1_norm() const { return values.cwiseAbs().sum() * Scalar(grid.h); }
  Scalar integral() const { return values.sum() * Scalar(grid.h); }
  Scalar lp_norm_pow(Scalar p) const { return values.cwiseAbs().array().pow(p).sum() * Scalar(grid.h); }

  /// Piecewise-linear interpolation through the cell centres; zero outside the grid.
  Scalar interpolate(double y) const {
    const double s = (y - grid.lo) / grid.h - 0.5;
    const double fl = std::floor(s);
    const auto i = static_cast<Eigen::Index>(fl);
    const double w = s - fl;
    const Scalar left = (i >= 0 && i < grid.n) ? values[i] : Scalar(0);
    const Scalar right = (i + 1 >= 0 && i + 1 < grid.n) ? values[i + 1] : Scalar(0);
    return Scalar(1.0 - w) * left + Scalar(w) * right;
  }
};

using GridFunctiond = GridFunction<double>;

template <typename Scalar>
Scalar l1_distance(const GridFunction<Scalar>& a, const GridFunction<Scalar>& b) {
  require(a.grid.same_as(b.grid), ErrorCode::grid_mismatch, "l1_distance on different grids");
  return (a.values - b.values).cwiseAbs().sum() * Scalar(a.grid.h);
}

/// Smooth, even, unit-mass polynomial bump on [-1, 1]:  (35/32) (1 - z^2)^3.
/// The same profile serves as rho (space) and rho-bar (state) mollifier.
struct BumpKernel {
  static constexpr double norm = 35.0 / 32.0;

  static double value(double z) {
    const double a = 1.0 - z * z;
    return a > 0.0 ? norm * a * a * a : 0.0;
  }
  static double derivative(double z) {
    const double a = 1.0 - z * z;
    return a > 0.0 ? -6.0 * norm * z * a * a : 0.0;
  }
  /// Kernel rescaled to support [-scale, scale]:  scale^-1 value(z/scale).
  static double scaled(double z, double scale) { return value(z / scale) / scale; }
  static double scaled_derivative(double z, double scale) { return derivative(z / scale) / (scale * scale); }
  /// Second moment of the unit profile, int z^2 rho(z) dz.
  static constexpr double second_moment = 1.0 / 9.0;
};

/// Height-one bump (1 - z^2)^3 with its first two derivatives; used for test functions.
struct UnitBump {
  static double value(double z) {
    const double a = 1.0 - z * z;
    return a > 0.0 ? a * a * a : 0.0;
  }
  static double d1(double z) {
    const double a = 1.0 - z * z;
    return a > 0.0 ? -6.0 * z * a * a : 0.0;
  }
  static double d2(double z) {
    const double a = 1.0 - z * z;
    return a > 0.0 ? -6.0 * a * a + 24.0 * z * z * a : 0.0;
  }
};

}  // namespace wpn
