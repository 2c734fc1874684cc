#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wpn/dual_pde.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace wpn;

namespace {

// ||p_t||_m (or of its gradient) in R^d as a radial integral, by Boost quadrature.
double kernel_norm_oracle(double t, double m, int d, bool grad) {
  const double sphere = 2 * std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0);
  auto f = [&](double r) {
    const double p = std::pow(2 * M_PI * t, -d / 2.0) * std::exp(-r * r / (2 * t));
    const double v = grad ? r / t * p : p;
    return sphere * std::pow(r, d - 1) * std::pow(v, m);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return std::pow(integrator.integrate(f), 1.0 / m);
}

DualPDEProblem constant_problem(const UniformGrid& g, double c, double t_fin, double radius) {
  DualPDEProblem p;
  p.F = GridFunctiond::sample(g, [c](double) { return c; });
  const Cutoff psi{radius, 2.0};
  p.psi = [psi](double x) { return psi.value(x); };
  p.psi_linf = 1.0;
  p.psi_grad = psi.grad_sup();
  p.t_fin = t_fin;
  p.T = t_fin;
  return p;
}

}  // namespace

TEST_CASE("heat kernel norms against quadrature") {
  for (int d : {1, 2, 3})
    for (double m : {1.0, 1.5, 2.0, 3.0})
      for (bool grad : {false, true})
        for (double t : {0.3, 1.0, 2.5}) {
          CAPTURE(d);
          CAPTURE(m);
          CAPTURE(grad);
          CAPTURE(t);
          CHECK(heat_kernel_norm(t, m, d, grad) == doctest::Approx(kernel_norm_oracle(t, m, d, grad)).epsilon(1e-10));
        }
}

TEST_CASE("heat kernel norms: closed forms and scaling") {
  CHECK(heat_kernel_norm(0.7, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(heat_kernel_norm(0.7, infinity, 2) == doctest::Approx(1.0 / (2 * M_PI * 0.7)).epsilon(1e-14));
  CHECK(heat_kernel_norm(0.7, 2.0) == doctest::Approx(std::pow(4 * M_PI * 0.7, -0.25)).epsilon(1e-14));
  // sup |x/t p_t| is attained at |x| = sqrt(t).
  CHECK(heat_kernel_norm(0.7, infinity, 1, true) ==
        doctest::Approx(std::exp(-0.5) / (std::sqrt(0.7) * std::sqrt(2 * M_PI * 0.7))).epsilon(1e-14));
  for (double m : {1.0, 1.25, 2.0, infinity})
    for (bool grad : {false, true})
      CHECK(heat_kernel_norm(3.2, m, 1, grad) / heat_kernel_norm(0.8, m, 1, grad) ==
            doctest::Approx(std::pow(4.0, heat_kernel_exponent(m, 1, grad))).epsilon(1e-13));
  CHECK(heat_kernel_exponent(infinity, 1, true) == -1.0);
  CHECK_THROWS_AS(heat_kernel_norm(0.0, 2.0), Error);
  CHECK_THROWS_AS(heat_kernel_norm(1.0, 0.5), Error);
}

TEST_CASE("cutoff: plateau, support, derivative bound") {
  const Cutoff c{3.0, 2.0};
  CHECK(c.value(0.0) == 1.0);
  CHECK(c.value(-3.0) == 1.0);
  CHECK(c.value(5.0) == 0.0);
  CHECK(c.value(-7.0) == 0.0);
  double sup = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = 2.5 + 3.0 * i / 4000;
    sup = std::max(sup, std::abs(c.d1(x)));
    const double h = 1e-6;
    CHECK(c.d1(x) == doctest::Approx((c.value(x + h) - c.value(x - h)) / (2 * h)).epsilon(1e-6).scale(1.0));
  }
  CHECK(sup == doctest::Approx(c.grad_sup()).epsilon(1e-6));
  CHECK(c.d1(4.0) == doctest::Approx(-c.grad_sup()));
}

TEST_CASE("constant potential: growth factor exp(c t)") {
  const UniformGrid g(-12, 12, 480);
  const double c = 0.8, t_fin = 0.5;
  const DualSolution sol = solve_dual_backward(constant_problem(g, c, t_fin, 6.0));
  CHECK(sol.times.front() == doctest::Approx(t_fin));
  CHECK(sol.times.back() == 0.0);
  // Far from the cutoff ramp the diffusion sees a constant: the explicit step multiplies by 1 + c dt.
  const double steps = std::round(t_fin / sol.dt);
  CHECK(steps * sol.dt == doctest::Approx(t_fin).epsilon(1e-12));
  CHECK(sol.initial().interpolate(0.0) == doctest::Approx(std::pow(1 + c * sol.dt, steps)).epsilon(1e-10));
  CHECK(sol.initial().interpolate(0.0) == doctest::Approx(std::exp(c * t_fin)).epsilon(c * c * t_fin * sol.dt));
  CHECK(sol.value(t_fin, 0.3) == doctest::Approx(1.0));
  CHECK(sol.value(t_fin + 1.0, 0.3) == doctest::Approx(1.0));
  // The separable solution factors, phi(t) = exp(c (t_fin - t)) * heat flow of psi, up to O(dt).
  const DualSolution heat = solve_dual_backward(constant_problem(g, 0.0, t_fin, 6.0));
  for (Eigen::Index i = 0; i < g.n; i += 37)
    CHECK(sol.initial().values[i] ==
          doctest::Approx(std::exp(c * t_fin) * heat.initial().values[i]).epsilon(5e-3).scale(1.0));
}

TEST_CASE("feynman-kac: exact for constant data, agrees with the finite-difference solve") {
  const auto one = [](double) { return 1.0; };
  const auto fk = feynman_kac([](double) { return 0.6; }, {}, one, 0.5, 0.0, 1000, 5);
  CHECK(fk.estimate == doctest::Approx(std::exp(0.3)).epsilon(1e-12));
  CHECK(fk.stderr_ < 1e-10);

  const UniformGrid g(-10, 10, 2560);
  DualPDEProblem p = constant_problem(g, 0.0, 0.5, 1.0);
  p.F = GridFunctiond::sample(g, [](double x) { return 1.5 * std::exp(-x * x); });
  const DualSolution sol = solve_dual_backward(p);
  const GridFunctiond F = p.F;
  for (double x : {-1.5, 0.0, 0.7}) {
    const auto e = feynman_kac([&](double y) { return F.interpolate(y); }, {}, p.psi, 0.5, x, 20000, 11, 256, 2);
    CAPTURE(x);
    CHECK(std::abs(sol.initial().interpolate(x) - e.estimate) < 3.5 * e.stderr_);
  }
  // Sample i depends only on seed + i: thread count is irrelevant.
  const auto a = feynman_kac([&](double y) { return F.interpolate(y); }, {}, p.psi, 0.5, 0.1, 500, 3, 64, 1);
  const auto b = feynman_kac([&](double y) { return F.interpolate(y); }, {}, p.psi, 0.5, 0.1, 500, 3, 64, 4);
  CHECK(a.estimate == b.estimate);
  CHECK_THROWS_AS(feynman_kac(one, {}, one, 0.5, 0.0, 10, 1), Error);
}

TEST_CASE("a-priori bound: constants collapse without potential, and dominate measurement") {
  const W1InfBound z = w1inf_bound(PotentialNorms{0.0, 1.5, 0.0}, 2.0, 0.7, 1.0);
  CHECK(z.linf == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(z.grad == doctest::Approx(0.7));
  CHECK(z.total() == doctest::Approx(2.0 * std::sqrt(2.0) + 0.7));
  const W1InfBound w = w1inf_bound(PotentialNorms{1.0, 2.0, 0.5}, 1.0, 1.0, 0.5);
  CHECK(w.linf > z.linf / 2.0);
  CHECK_THROWS_AS(w1inf_bound(PotentialNorms{1.0, 1.0, 0.0}, 1.0, 1.0, 1.0), Error);

  const UniformGrid g(-10, 10, 1280);
  DualPDEProblem p = constant_problem(g, 0.0, 0.5, 2.0);
  p.F = GridFunctiond::sample(g, [](double x) { return std::exp(-x * x); });
  const DualSolution sol = solve_dual_backward(p);
  PotentialNorms n;
  n.p = 1.5;
  n.g_lp = std::pow(p.F.lp_norm_pow(n.p), 1.0 / n.p);
  const Certificate c = w1inf_certificate(sol, n);
  CHECK(c.passed());
  CHECK(c.at("w1inf_norm").value == doctest::Approx(w1inf_measured(sol)));
  CHECK(c.at("linf_norm").value >= 1.0);
}

TEST_CASE("gronwall certificate: constant field, scheme residual only from transport") {
  const UniformGrid g(-10, 10, 1280);
  const DualSolution sol = solve_dual_backward(constant_problem(g, 0.0, 0.4, 2.0));
  const FluxField b = constant_flux(1.5, 1.0);
  const Certificate c = gronwall_certificate(sol, b, 1.0);
  CHECK(c.passed());
  CHECK(c.at("gronwall_sup").value <= c.at("gronwall_sup").bound);
  CHECK(c.at("gronwall_sup").value > 0.0);
}

TEST_CASE("divergence potential of a separable field") {
  const UniformGrid g(-3, 3, 60);
  const GridFunctiond F = divergence_potential(affine_flux(0.0, 2.0, 0.0, 1.0), 1.0, g);
  CHECK(F.values.minCoeff() == doctest::Approx(2.0));
  CHECK(F.values.maxCoeff() == doctest::Approx(2.0));
}

TEST_CASE("dual solve input validation") {
  const UniformGrid g(-4, 4, 64);
  DualPDEProblem p = constant_problem(g, 0.0, 0.5, 1.0);
  DualConfig bad;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(solve_dual_backward(p, bad), Error);
  p.t_fin = 2.0;
  CHECK_THROWS_AS(solve_dual_backward(p), Error);
  p = constant_problem(g, -1.0, 0.5, 1.0);
  CHECK_THROWS_AS(solve_dual_backward(p), Error);
}
