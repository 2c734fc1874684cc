#include "wpn/kinetic.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wpn {

UniformGrid state_grid(double u_max, double dxi) {
  require(dxi > 0.0 && u_max >= 0.0, ErrorCode::invalid_parameter, "state grid needs dxi > 0 and u_max >= 0");
  const auto half = static_cast<Eigen::Index>(std::ceil(u_max / dxi - 1e-12)) + 1;
  const double R = double(half) * dxi;
  return UniformGrid(-R, R, 2 * half);
}

double chi(double u, double xi) { return (xi < u ? 1.0 : 0.0) - (xi < 0.0 ? 1.0 : 0.0); }

KineticField chi_field(const GridFunctiond& u, const UniformGrid& xi_grid) {
  const double R = std::min(-xi_grid.lo, xi_grid.hi());
  require(u.linf_norm() <= R, ErrorCode::state_out_of_range,
          "|u| = " + std::to_string(u.linf_norm()) + " exceeds the state grid radius " + std::to_string(R));
  KineticField f(u.grid, xi_grid);
  for (Eigen::Index i = 0; i < u.grid.n; ++i)
    for (Eigen::Index j = 0; j < xi_grid.n; ++j) f.values(i, j) = chi(u[i], xi_grid.center(j));
  return f;
}

Moments reconstruct_u(const KineticField& f, double p) {
  require(p >= 1.0, ErrorCode::invalid_parameter, "moment exponent must be >= 1");
  Eigen::VectorXd w(f.xi.n);
  for (Eigen::Index j = 0; j < f.xi.n; ++j) {
    const double xi = f.xi.center(j);
    w[j] = p * std::pow(std::abs(xi), p - 1.0) * (xi > 0 ? 1.0 : (xi < 0 ? -1.0 : 0.0)) * f.xi.h;
  }
  Eigen::VectorXd u = f.values.rowwise().sum() * f.xi.h;
  Eigen::VectorXd m = f.values * w;
  return {GridFunctiond(f.x, std::move(u)), GridFunctiond(f.x, std::move(m))};
}

std::string GapReport::first_failure() const {
  if (!sign_ok) return "sign";
  if (!bound_ok) return "bound";
  if (!monotone_ok) return "monotone";
  if (!jump_ok) return "jump";
  return {};
}

std::string GapReport::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "gap_total = " << gap_total << "\n"
     << "gap_density_max = " << gap_density_max << "\n"
     << "sign_ok = " << sign_ok << "\n"
     << "bound_ok = " << bound_ok << "\n"
     << "monotone_ok = " << monotone_ok << "\n"
     << "jump_ok = " << jump_ok << "\n";
  return os.str();
}

GapReport gap_report(const KineticField& f, double tol) {
  GapReport r;
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.x.n; ++i) {
    double running_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < f.xi.n; ++j) {
      const double v = f.values(i, j);
      const double xi = f.xi.center(j);
      const double density = std::abs(v) - v * v;
      total += density;
      r.gap_density_max = std::max(r.gap_density_max, density);
      const double s = xi > 0 ? 1.0 : (xi < 0 ? -1.0 : 0.0);
      if (s * v < -tol) r.sign_ok = false;
      if (std::abs(v) > 1.0 + tol) r.bound_ok = false;
      if (j + 1 < f.xi.n) {
        const double next = f.xi.center(j + 1);
        if (xi * next > 0.0 && v < f.values(i, j + 1) - tol) r.monotone_ok = false;
      }
      // f(xi) - f(xi + h) + 1 >= 0 for every h > 0  <=>  f_k - min_{j<k} f_j <= 1
      if (v - running_min > 1.0 + tol) r.jump_ok = false;
      running_min = std::min(running_min, v);
    }
  }
  r.gap_total = total * f.cell_area();
  return r;
}

PairGap pair_gap_identity(const KineticField& chi1, const KineticField& chi2) {
  require(chi1.same_grids(chi2), ErrorCode::invalid_parameter, "pair_gap_identity on mismatched grids");
  const KineticField mean(chi1.x, chi1.xi, 0.5 * (chi1.values + chi2.values));
  PairGap g;
  g.lhs = gap_report(mean).gap_total;
  g.rhs = 0.25 * (chi1.values - chi2.values).squaredNorm() * chi1.cell_area();
  return g;
}

Reconstruction reconstruct_from_generalized(const KineticField& f, double tol) {
  const GapReport rep = gap_report(f, tol);
  if (!rep.all_flags()) throw Error(ErrorCode::not_a_kinetic_function, "failing flag: " + rep.first_failure());
  if (rep.gap_total > tol)
    throw Error(ErrorCode::not_a_kinetic_function, "failing flag: gap (gap_total = " + std::to_string(rep.gap_total) + ")");
  Reconstruction out;
  out.u = reconstruct_u(f).u;
  // The cell sum can overshoot the radius by rounding; chi needs |u| <= R.
  const double R = std::min(-f.xi.lo, f.xi.hi());
  out.u.values = out.u.values.cwiseMax(-R).cwiseMin(R);
  out.residual = (f.values - chi_field(out.u, f.xi).values).cwiseAbs().sum() * f.cell_area();
  return out;
}

double commutator_error(const FluxField& b, const KineticField& f, double eps, double delta,
                        const std::function<double(double)>& phi) {
  require(eps > 0.0 && delta > 0.0, ErrorCode::invalid_parameter, "commutator scales must be positive");
  require(eps < 0.5 * (f.x.hi() - f.x.lo) && delta < 0.5 * (f.xi.hi() - f.xi.lo), ErrorCode::invalid_parameter,
          "commutator scales exceed half the working window");
  require(eps >= 2.0 * f.x.h * (1 - 1e-12), ErrorCode::resolution_insufficient,
          "eps below two spatial cells");
  require(delta >= 2.0 * f.xi.h * (1 - 1e-12), ErrorCode::resolution_insufficient,
          "delta below two state cells");

  const Eigen::Index nx = f.x.n, nxi = f.xi.n;
  const double dx = f.x.h, dxi = f.xi.h;
  // Outer xi lattice: the f grid widened by the state kernel support, since f^{eps,delta} spills over.
  const auto pad = static_cast<Eigen::Index>(std::ceil(delta / dxi));
  const UniformGrid xo(f.xi.lo - double(pad) * dxi, f.xi.hi() + double(pad) * dxi, nxi + 2 * pad);

  Eigen::MatrixXd b_in(nx, nxi), d_in(nx, nxi);
  for (Eigen::Index k = 0; k < nx; ++k)
    for (Eigen::Index l = 0; l < nxi; ++l) {
      b_in(k, l) = b(f.x.center(k), f.xi.center(l));
      d_in(k, l) = b.div_x(f.x.center(k), f.xi.center(l));
    }

  // State convolutions with rhobar_delta, onto the outer lattice: g = f*rho, gb = (f b)*rho, gd = (f div b)*rho.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nx, xo.n), gb = g, gd = g;
  const auto wxi = static_cast<Eigen::Index>(std::ceil(delta / dxi)) + 1;
  for (Eigen::Index j = 0; j < xo.n; ++j) {
    const Eigen::Index c = j - pad;
    for (Eigen::Index l = std::max<Eigen::Index>(0, c - wxi); l <= std::min(nxi - 1, c + wxi); ++l) {
      const double w = BumpKernel::scaled(xo.center(j) - f.xi.center(l), delta) * dxi;
      if (w == 0.0) continue;
      for (Eigen::Index k = 0; k < nx; ++k) {
        const double fv = f.values(k, l);
        if (fv == 0.0) continue;
        g(k, j) += w * fv;
        gb(k, j) += w * fv * b_in(k, l);
        gd(k, j) += w * fv * d_in(k, l);
      }
    }
  }

  const auto wx = static_cast<Eigen::Index>(std::ceil(eps / dx)) + 1;
  double total = 0.0;
  for (Eigen::Index i = 0; i < nx; ++i) {
    const double x = f.x.center(i);
    const double ph = phi(x);
    if (ph == 0.0) continue;
    for (Eigen::Index j = 0; j < xo.n; ++j) {
      const double xi = xo.center(j);
      double f_mol = 0.0, drift = 0.0, flux_part = 0.0, div_part = 0.0;
      for (Eigen::Index k = std::max<Eigen::Index>(0, i - wx); k <= std::min(nx - 1, i + wx); ++k) {
        const double r = x - f.x.center(k);
        const double rho = BumpKernel::scaled(r, eps) * dx;
        const double drho = BumpKernel::scaled_derivative(r, eps) * dx;
        f_mol += rho * g(k, j);
        drift += drho * g(k, j);
        flux_part += drho * gb(k, j);
        div_part += rho * gd(k, j);
      }
      if (f_mol == 0.0) continue;
      const double inner = b(x, xi) * drift - flux_part + div_part;
      total += f_mol * ph * inner;
    }
  }
  return total * dx * dxi;
}

}  // namespace wpn
