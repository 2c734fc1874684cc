#pragma once

#include "wpn/core.hpp"
#include "wpn/flux.hpp"

#include <functional>
#include <string>

namespace wpn {

/// f(x, xi) on a tensor grid; rows index x, columns index xi.
template <typename Scalar = double>
struct KineticFieldT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  UniformGrid x;
  UniformGrid xi;
  Matrix values;

  KineticFieldT() = default;
  KineticFieldT(UniformGrid x_, UniformGrid xi_) : x(x_), xi(xi_), values(Matrix::Zero(x_.n, xi_.n)) {}
  KineticFieldT(UniformGrid x_, UniformGrid xi_, Matrix v) : x(x_), xi(xi_), values(std::move(v)) {
    require(values.rows() == x.n && values.cols() == xi.n, ErrorCode::grid_mismatch,
            "kinetic values do not match the tensor grid");
  }

  bool same_grids(const KineticFieldT& o) const { return x.same_as(o.x) && xi.same_as(o.xi); }
  double cell_area() const { return x.h * xi.h; }
};

using KineticField = KineticFieldT<double>;

/// Symmetric cell-centred state grid of spacing ~dxi covering [-R, R], where R is
/// u_max rounded up to a whole cell plus one padding cell (so the edge cells stay empty).
UniformGrid state_grid(double u_max, double dxi);

/// chi(u, xi) = 1_{xi < u} - 1_{xi < 0}, evaluated at cell centres.
double chi(double u, double xi);
KineticField chi_field(const GridFunctiond& u, const UniformGrid& xi_grid);

struct Moments {
  GridFunctiond u;         // sum_xi f dxi
  GridFunctiond moment_p;  // p sum_xi |xi|^(p-1) sgn(xi) f dxi
};
Moments reconstruct_u(const KineticField& f, double p = 2.0);

struct GapReport {
  double gap_total = 0.0;
  double gap_density_max = 0.0;
  bool sign_ok = true;
  bool bound_ok = true;
  bool monotone_ok = true;
  bool jump_ok = true;

  bool all_flags() const { return sign_ok && bound_ok && monotone_ok && jump_ok; }
  /// Name of the first failing flag, or empty.
  std::string first_failure() const;
  /// Flat "key = value" block.
  std::string to_text() const;
};

inline constexpr double kinetic_tolerance = 1e-9;

GapReport gap_report(const KineticField& f, double tol = kinetic_tolerance);

struct PairGap {
  double lhs = 0.0;  // gap_total of (chi1 + chi2)/2
  double rhs = 0.0;  // (1/4) sum |chi1 - chi2|^2 dx dxi
};
PairGap pair_gap_identity(const KineticField& chi1, const KineticField& chi2);

struct Reconstruction {
  GridFunctiond u;
  double residual = 0.0;  // || f - chi(u) ||_1
};
/// Recovers u from a generalized kinetic function whose gap is (numerically) zero.
Reconstruction reconstruct_from_generalized(const KineticField& f, double tol = kinetic_tolerance);

/// The mollification-mismatch integral
///   int f^{eps,delta}(x,xi) f(y,zeta) rhobar_delta(xi-zeta)
///       [rho_eps'(x-y) (b(x,xi) - b(y,zeta)) + rho_eps(x-y) div_y b(y,zeta)] phi(x)
/// by tensor midpoint quadrature on the grids of f.
double commutator_error(const FluxField& b, const KineticField& f, double eps, double delta,
                        const std::function<double(double)>& phi);

}  // namespace wpn
