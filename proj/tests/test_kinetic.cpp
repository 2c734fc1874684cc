#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wpn/kinetic.hpp"
#include "wpn/solver.hpp"

#include <cmath>
#include <random>

using namespace wpn;

namespace {

GridFunctiond constant(const UniformGrid& g, double c) {
  return GridFunctiond::sample(g, [c](double) { return c; });
}

// Closest kinetic function to f in L^1, found by trying every threshold cell edge.
double l1_projection_oracle(const KineticField& f) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.x.n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index e = 0; e <= f.xi.n; ++e) {
      const double c = f.xi.edge(e);
      double d = 0.0;
      for (Eigen::Index j = 0; j < f.xi.n; ++j) d += std::abs(f.values(i, j) - chi(c, f.xi.center(j)));
      best = std::min(best, d);
    }
    total += best;
  }
  return total * f.cell_area();
}

}  // namespace

TEST_CASE("state grid is symmetric with an empty edge cell") {
  const UniformGrid g = state_grid(1.0, 0.1);
  CHECK(g.lo == doctest::Approx(-1.1));
  CHECK(g.hi() == doctest::Approx(1.1));
  CHECK(g.n == 22);
  const UniformGrid g2 = state_grid(0.95, 0.1);
  CHECK(g2.hi() == doctest::Approx(1.1));
}

TEST_CASE("chi field values") {
  const UniformGrid x(0.0, 1.0, 4);
  const UniformGrid xi = state_grid(2.0, 0.25);
  const KineticField one = chi_field(constant(x, 1.0), xi);
  const KineticField neg = chi_field(constant(x, -2.0), xi);
  for (Eigen::Index j = 0; j < xi.n; ++j) {
    const double c = xi.center(j);
    if (c == 0.625 || c == 0.375) CHECK(one.values(0, j) == 1.0);
    if (c == -0.875) CHECK(neg.values(2, j) == -1.0);
  }
  CHECK(chi(1.0, 0.5) == 1.0);
  CHECK(chi(-2.0, -1.0) == -1.0);
  CHECK(chi_field(constant(x, 0.0), xi).values.isZero(0.0));
  CHECK_THROWS_AS(chi_field(constant(x, 3.0), xi), Error);
  try {
    chi_field(constant(x, -3.0), xi);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::state_out_of_range);
  }
}

TEST_CASE("moments of chi") {
  const UniformGrid x(0.0, 1.0, 8);
  const double dxi = 0.01;
  const UniformGrid xi = state_grid(3.0, dxi);
  auto m = reconstruct_u(chi_field(constant(x, 3.0), xi));
  CHECK(std::abs(m.u[3] - 3.0) <= dxi);
  m = reconstruct_u(chi_field(constant(x, 2.0), xi), 2.0);
  CHECK(std::abs(m.moment_p[5] - 4.0) <= 2 * dxi);

  // Sine profile, p = 3, against the same sum on a 16x finer state grid.
  const UniformGrid xs(0.0, 1.0, 256);
  const GridFunctiond u = GridFunctiond::sample(xs, [](double y) { return 1.7 * std::sin(2 * M_PI * y); });
  const UniformGrid coarse = state_grid(1.7, 0.05), fine = state_grid(1.7, 0.05 / 16);
  const auto mc = reconstruct_u(chi_field(u, coarse), 3.0);
  const auto mf = reconstruct_u(chi_field(u, fine), 3.0);
  const double R = -coarse.lo;
  for (Eigen::Index i = 0; i < xs.n; ++i) {
    CHECK(std::abs(mc.moment_p[i] - std::pow(std::abs(u[i]), 3.0)) <= 3 * R * R * coarse.h);
    CHECK(std::abs(mf.moment_p[i] - std::pow(std::abs(u[i]), 3.0)) <= 3 * R * R * fine.h);
  }
}

TEST_CASE("gap report") {
  const UniformGrid x(0.0, 1.0, 1);
  const UniformGrid xi(-2.5, 2.5, 500);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const UniformGrid xs(0.0, 1.0, 32);
  const auto rep = gap_report(chi_field(GridFunctiond::sample(xs, [&](double) { return U(rng); }), xi));
  CHECK(rep.gap_total == 0.0);
  CHECK(rep.all_flags());

  const KineticField c1 = chi_field(constant(x, 1.0), xi), c2 = chi_field(constant(x, 2.0), xi);
  const KineticField mean(x, xi, 0.5 * (c1.values + c2.values));
  const auto r2 = gap_report(mean);
  CHECK(r2.gap_total == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r2.gap_density_max == 0.25);
  CHECK(r2.all_flags());

  KineticField bump(x, xi);
  for (Eigen::Index j = 0; j < xi.n; ++j) bump.values(0, j) = (xi.center(j) > 1 && xi.center(j) < 2) ? 1.0 : 0.0;
  const auto r3 = gap_report(bump);
  CHECK_FALSE(r3.monotone_ok);
  CHECK(r3.sign_ok);
  CHECK(r3.first_failure() == "monotone");

  KineticField neg = c1;
  neg.values(0, 300) = -0.5;  // xi > 0 with a negative value
  CHECK_FALSE(gap_report(neg).sign_ok);
  KineticField big = c1;
  big.values(0, 260) = 1.5;
  CHECK_FALSE(gap_report(big).bound_ok);
  // A rise of more than one across xi = 0 breaks the jump bound but not monotonicity on either side.
  KineticField jump(x, xi);
  for (Eigen::Index j = 0; j < xi.n; ++j) jump.values(0, j) = xi.center(j) < 0 ? -1.0 : 0.5;
  const auto r4 = gap_report(jump);
  CHECK(r4.monotone_ok);
  CHECK_FALSE(r4.jump_ok);
}

TEST_CASE("gap density is at most a quarter, attained at |f| = 1/2") {
  const UniformGrid x(0.0, 1.0, 1), xi(0.0, 1.0, 101);
  KineticField f(x, xi);
  for (Eigen::Index j = 0; j < xi.n; ++j) f.values(0, j) = 1.0 - double(j) / 100.0;
  const auto r = gap_report(f);
  CHECK(r.gap_density_max == 0.25);
  CHECK(r.all_flags());
}

TEST_CASE("pair gap identity") {
  const UniformGrid x(0.0, 1.0, 1), xi(-2.5, 2.5, 500);
  const auto a = chi_field(constant(x, 1.0), xi), b = chi_field(constant(x, 2.0), xi);
  auto g = pair_gap_identity(a, a);
  CHECK(g.lhs == 0.0);
  CHECK(g.rhs == 0.0);
  g = pair_gap_identity(a, b);
  CHECK(g.lhs == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g.rhs == doctest::Approx(0.25).epsilon(1e-12));

  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.5);
  const UniformGrid xs(0.0, 1.0, 128), xi2 = state_grid(1.0, 0.05);
  const auto u1 = GridFunctiond::sample(xs, [&](double) { return coin(rng) ? 1.0 : 0.0; });
  const auto u2 = GridFunctiond::sample(xs, [&](double) { return coin(rng) ? 1.0 : 0.0; });
  const auto c1 = chi_field(u1, xi2), c2 = chi_field(u2, xi2);
  g = pair_gap_identity(c1, c2);
  // Direct evaluation of both sides.
  double lhs = 0.0, rhs = 0.0;
  for (Eigen::Index i = 0; i < xs.n; ++i)
    for (Eigen::Index j = 0; j < xi2.n; ++j) {
      const double f = 0.5 * (c1.values(i, j) + c2.values(i, j));
      lhs += std::abs(f) - f * f;
      rhs += 0.25 * std::pow(c1.values(i, j) - c2.values(i, j), 2);
    }
  lhs *= xs.h * xi2.h;
  rhs *= xs.h * xi2.h;
  CHECK(std::abs(g.lhs - lhs) < 1e-12);
  CHECK(std::abs(g.rhs - rhs) < 1e-12);
  CHECK(std::abs(g.lhs - g.rhs) < 1e-12);
  // Reflection xi -> -xi with sign flip maps chi(u) to chi(-u) and leaves the gap unchanged.
  const auto r1 = chi_field(GridFunctiond(xs, -u1.values), xi2), r2 = chi_field(GridFunctiond(xs, -u2.values), xi2);
  CHECK(pair_gap_identity(r1, r2).lhs == doctest::Approx(g.lhs).epsilon(1e-14));

  CHECK_THROWS_AS(pair_gap_identity(c1, chi_field(constant(x, 0.0), xi)), Error);
}

TEST_CASE("reconstruction from generalized kinetic functions") {
  const UniformGrid xs(-1.0, 1.0, 64), xi = state_grid(1.0, 0.02);
  const auto step = GridFunctiond::sample(xs, [](double y) { return y < 0.1 ? 0.8 : -0.4; });
  const auto rec = reconstruct_from_generalized(chi_field(step, xi));
  CHECK(rec.residual == 0.0);

  KineticField bad = chi_field(step, xi);
  bad.values(10, xi.n / 2 + 3) = 0.5;
  CHECK_THROWS_AS(reconstruct_from_generalized(bad), Error);
  try {
    reconstruct_from_generalized(bad);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_a_kinetic_function);
  }

  // Round trip chi o reconstruct_u on random profiles is exact to one state cell.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.99, 0.99);
  const auto u = GridFunctiond::sample(xs, [&](double) { return U(rng); });
  const auto f = chi_field(u, xi);
  const auto back = chi_field(reconstruct_u(f).u, xi);
  CHECK((f.values - back.values).cwiseAbs().sum() * f.cell_area() <= xi.h * xs.n * xs.h);
}

TEST_CASE("reconstruction of a viscous solution slice") {
  const UniformGrid xs(-1.0, 3.0, 400);
  const auto u0 = GridFunctiond::sample(xs, [](double y) { return (y > 0 && y < 1) ? 1.0 : 0.0; });
  SolverConfig cfg;
  cfg.viscosity = 1e-3;
  const auto traj = solve_viscous(ShiftedFlux(burgers_like_flux(1.0)), u0, cfg, 0.5);
  const UniformGrid xi = state_grid(1.0, 0.02);
  // Kinetic output on the state grid: chi averaged over each state cell.
  const GridFunctiond& v = traj.final_state();
  KineticField f(xs, xi);
  for (Eigen::Index i = 0; i < xs.n; ++i)
    for (Eigen::Index j = 0; j < xi.n; ++j) {
      const double a = xi.edge(j), c = xi.edge(j + 1);
      const double pos = std::clamp((std::min(v[i], c) - std::max(0.0, a)) / xi.h, 0.0, 1.0);
      const double neg = std::clamp((std::min(0.0, c) - std::max(v[i], a)) / xi.h, 0.0, 1.0);
      f.values(i, j) = pos - neg;
    }
  const auto rep = gap_report(f);
  CHECK(rep.gap_total > 0.0);
  CHECK(rep.all_flags());
  CHECK_THROWS_AS(reconstruct_from_generalized(f), Error);  // gap above the default tolerance
  const auto rec = reconstruct_from_generalized(f, rep.gap_total * (1 + 1e-9));
  CHECK((rec.u.values - v.values).cwiseAbs().maxCoeff() < 1e-12);
  const double oracle = l1_projection_oracle(f);
  CHECK(rec.residual <= 5 * rep.gap_total / xi.h);
  CHECK(rec.residual == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("commutator error vanishes for constant fields") {
  const UniformGrid xs(-1.0, 1.0, 100), xi = state_grid(1.0, 0.02);
  const auto u = GridFunctiond::sample(xs, [](double y) { return 0.8 * std::exp(-8 * y * y); });
  const auto f = chi_field(u, xi);
  auto phi = [](double y) { return UnitBump::value(y / 0.7); };
  CHECK(std::abs(commutator_error(constant_flux(2.5), f, 0.1, 0.05, phi)) < 1e-14);
  CHECK_THROWS_AS(commutator_error(constant_flux(1.0), f, 0.01, 0.05, phi), Error);
  try {
    commutator_error(constant_flux(1.0), f, 0.1, 0.01, phi);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::resolution_insufficient);
  }
}

TEST_CASE("commutator error against a 4x refined tensor quadrature") {
  // Model flux, mollified; f = chi of a smooth profile.
  const FluxField b = tabulate_separable(mollify_flux(model_flux(3.0), {0.1, 0.1}), -1.5, 1.5, 1e-3, -1.2, 1.2, 0.01);
  const UniformGrid xs(-0.8, 0.8, 80), xi = state_grid(0.9, 0.025);
  auto profile = [](double y) { return 0.9 * std::cos(2.0 * y) * std::exp(-y * y); };
  const auto f = chi_field(GridFunctiond::sample(xs, profile), xi);
  auto phi = [](double y) { return UnitBump::value(y / 0.5); };
  const double eps = 0.1, delta = 0.05;
  const double value = commutator_error(b, f, eps, delta, phi);

  // Oracle: direct 4-fold midpoint sum on grids refined 4x in x and xi, f injected piecewise constant.
  const int r = 4;
  const UniformGrid xf(xs.lo, xs.hi(), xs.n * r);
  const double dxf = xf.h, dxif = xi.h / r;
  const double Rpad = -xi.lo + delta;
  const auto nxo = static_cast<int>(std::round(2 * Rpad / dxif));
  auto f_at = [&](Eigen::Index kf, double zeta) {
    const Eigen::Index k = kf / r;
    const Eigen::Index l = xi.locate(zeta);
    if (zeta < xi.lo || zeta >= xi.hi()) return 0.0;
    return f.values(k, l);
  };
  std::vector<double> zetas(std::size_t(xi.n * r));
  for (std::size_t l = 0; l < zetas.size(); ++l) zetas[l] = xi.lo + (double(l) + 0.5) * dxif;
  double total = 0.0;
  for (Eigen::Index i = 0; i < xf.n; ++i) {
    const double x = xf.center(i);
    const double ph = phi(x);
    if (ph == 0.0) continue;
    for (int j = 0; j < nxo; ++j) {
      const double s = -Rpad + (j + 0.5) * dxif;
      double fm = 0.0, inner = 0.0;
      for (Eigen::Index k = 0; k < xf.n; ++k) {
        const double y = xf.center(k);
        if (std::abs(x - y) >= eps) continue;
        const double rho = BumpKernel::scaled(x - y, eps), drho = BumpKernel::scaled_derivative(x - y, eps);
        const auto l0 = std::max<long>(0, long(std::floor((s - delta - xi.lo) / dxif)));
        const auto l1 = std::min<long>(long(zetas.size()) - 1, long(std::ceil((s + delta - xi.lo) / dxif)));
        for (long l = l0; l <= l1; ++l) {
          const double zeta = zetas[std::size_t(l)];
          if (std::abs(s - zeta) >= delta) continue;
          const double fv = f_at(k, zeta);
          if (fv == 0.0) continue;
          const double rb = BumpKernel::scaled(s - zeta, delta);
          fm += rho * rb * fv;
          inner += fv * rb * (drho * (b(x, s) - b(y, zeta)) + rho * b.div_x(y, zeta));
        }
      }
      total += fm * inner * ph * std::pow(dxf * dxif, 3);
    }
  }
  // Same field injected onto the fine lattice: the separable evaluation must reproduce the brute-force sum.
  KineticField fine(xf, UniformGrid(xi.lo, xi.hi(), xi.n * r));
  for (Eigen::Index k = 0; k < xf.n; ++k)
    for (Eigen::Index l = 0; l < fine.xi.n; ++l) fine.values(k, l) = f.values(k / r, l / r);
  const double fine_value = commutator_error(b, fine, eps, delta, phi);
  CHECK(std::abs(fine_value - total) < 1e-4);
  CHECK(std::abs(value - total) < 0.25 * std::abs(total));  // coarse lattice: O(dx/eps) kernel sampling error
}
