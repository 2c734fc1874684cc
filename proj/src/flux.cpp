#include "wpn/flux.hpp"

#include "wpn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace wpn {

namespace {

// Mean of f over [lo, hi] by 4-point Gauss-Legendre; exact for cubics.
template <typename F>
double interval_mean(F&& f, double lo, double hi) {
  if (hi == lo) return f(lo);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += quad::gl4_weights[k] * f(mid + half * quad::gl4_nodes[k]);
  return 0.5 * s;
}

FluxField::Fn separable_eval(const SeparableForm& f) {
  return [a = f.spatial, c = f.state](double x, double xi) { return a(x) * c(xi); };
}
FluxField::Fn separable_div(const SeparableForm& f) {
  return [da = f.spatial_dx, c = f.state](double x, double xi) { return da(x) * c(xi); };
}

// Breakpoints (in kernel coordinates z) where x - scale*z hits a kink.
std::vector<double> kernel_breaks(double x, double scale, const std::vector<double>& kinks) {
  std::vector<double> z;
  for (double k : kinks) {
    const double zk = (x - k) / scale;
    if (zk > -1.0 && zk < 1.0) z.push_back(zk);
  }
  return z;
}

}  // namespace

FluxField::FluxField(std::string name, Fn eval, Fn div_x, double support_radius, double linf_bound,
                     double p_exponent, std::vector<double> kinks)
    : name_(std::move(name)),
      eval_(std::move(eval)),
      div_(std::move(div_x)),
      support_radius_(support_radius),
      linf_bound_(linf_bound),
      p_exponent_(p_exponent),
      kinks_(std::move(kinks)) {
  require(support_radius_ > 0.0, ErrorCode::invalid_parameter, "flux support radius must be positive");
  require(linf_bound_ >= 0.0, ErrorCode::invalid_parameter, "flux linf bound must be nonnegative");
  require(p_exponent_ > 1.0, ErrorCode::invalid_parameter, "divergence exponent p must exceed the dimension 1");
}

FluxField::FluxField(std::string name, SeparableForm form, double support_radius, double linf_bound,
                     double p_exponent, std::vector<double> kinks)
    : FluxField(std::move(name), separable_eval(form), separable_div(form), support_radius, linf_bound, p_exponent,
                std::move(kinks)) {
  separable_ = std::move(form);
}

double FluxField::state_mean(double x, double v_lo, double v_hi) const {
  if (separable_) {
    const auto& c = separable_->state;
    return separable_->spatial(x) * interval_mean(c, v_lo, v_hi);
  }
  return interval_mean([&](double v) { return eval_(x, v); }, v_lo, v_hi);
}

double FluxField::antiderivative(double x, double w) const {
  if (separable_) return separable_->spatial(x) * w * interval_mean(separable_->state, 0.0, w);
  return w * interval_mean([&](double v) { return eval_(x, v); }, 0.0, w);
}

double FluxField::antiderivative_dx(double x, double w) const {
  if (separable_) return separable_->spatial_dx(x) * w * interval_mean(separable_->state, 0.0, w);
  return w * interval_mean([&](double v) { return div_(x, v); }, 0.0, w);
}

FluxField FluxField::with_bounds(double support_radius, double linf_bound) const {
  FluxField copy = *this;
  require(support_radius > 0.0 && linf_bound >= 0.0, ErrorCode::invalid_parameter, "bad flux bounds");
  copy.support_radius_ = support_radius;
  copy.linf_bound_ = linf_bound;
  return copy;
}

FluxField model_flux(double K, double support_radius) {
  require(K > 0.0, ErrorCode::invalid_parameter, "model flux cap K must be positive");
  SeparableForm form;
  form.spatial = [K](double x) {
    const double s = std::min(std::sqrt(std::abs(x)), K);
    return x > 0.0 ? 2.0 * s : (x < 0.0 ? -2.0 * s : 0.0);
  };
  // d/dx [2 sgn(x) sqrt|x|] = |x|^(-1/2) inside the cap, 0 beyond it.
  form.spatial_dx = [K](double x) {
    const double ax = std::abs(x);
    if (ax == 0.0) return std::numeric_limits<double>::infinity();
    return ax <= K * K ? 1.0 / std::sqrt(ax) : 0.0;
  };
  form.state = [](double xi) { return xi; };
  return FluxField("model", std::move(form), support_radius, 2.0 * K * support_radius, 1.5,
                   {-K * K, 0.0, K * K});
}

FluxField affine_flux(double c0, double cx, double cxi, double support_radius) {
  auto eval = [=](double x, double xi) { return c0 + cx * x + cxi * xi; };
  auto div = [=](double, double) { return cx; };
  // Bounded only when there is no x-dependence; otherwise the bound is per window.
  const double linf = std::abs(c0) + std::abs(cxi) * support_radius;
  std::string name = (cx == 0.0 && cxi == 0.0) ? "constant" : (cx == 0.0 && c0 == 0.0 ? "burgers_like" : "affine");
  FluxField f(std::move(name), eval, div, support_radius, linf, 1.5);
  return f;
}

FluxField tabulated_flux(std::vector<double> xs, std::vector<double> xis, std::vector<double> b_values,
                         std::vector<double> div_values, double p_exponent) {
  const std::size_t nx = xs.size(), nxi = xis.size();
  require(nx >= 2 && nxi >= 2, ErrorCode::invalid_parameter, "flux table needs at least 2x2 samples");
  require(b_values.size() == nx * nxi && div_values.size() == nx * nxi, ErrorCode::invalid_parameter,
          "flux table is not rectangular");
  require(std::is_sorted(xs.begin(), xs.end()) && std::is_sorted(xis.begin(), xis.end()),
          ErrorCode::invalid_parameter, "flux table axes must be increasing");

  struct Table {
    std::vector<double> xs, xis, b, div;
    double lookup(const std::vector<double>& v, double x, double xi) const {
      auto bracket = [](const std::vector<double>& axis, double y, std::size_t& i, double& w) {
        y = std::clamp(y, axis.front(), axis.back());
        i = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), y) - axis.begin());
        i = std::clamp<std::size_t>(i, 1, axis.size() - 1) - 1;
        w = (y - axis[i]) / (axis[i + 1] - axis[i]);
      };
      std::size_t i, j;
      double wx, wxi;
      bracket(xs, x, i, wx);
      bracket(xis, xi, j, wxi);
      const std::size_t nxi = xis.size();
      auto at = [&](std::size_t a, std::size_t c) { return v[a * nxi + c]; };
      return (1 - wx) * ((1 - wxi) * at(i, j) + wxi * at(i, j + 1)) +
             wx * ((1 - wxi) * at(i + 1, j) + wxi * at(i + 1, j + 1));
    }
  };
  auto table = std::make_shared<Table>(Table{std::move(xs), std::move(xis), std::move(b_values), std::move(div_values)});
  double linf = 0.0;
  for (double v : table->b) linf = std::max(linf, std::abs(v));
  const double R = std::max(std::abs(table->xis.front()), std::abs(table->xis.back()));
  return FluxField(
      "custom_table", [table](double x, double xi) { return table->lookup(table->b, x, xi); },
      [table](double x, double xi) { return table->lookup(table->div, x, xi); }, R, linf, p_exponent);
}

FluxField custom_table_flux(const std::string& path, double p_exponent) {
  std::ifstream in(path);
  require(bool(in), ErrorCode::io_error, "cannot open flux table '" + path + "'");
  std::string line;
  std::getline(in, line);
  require(line.rfind("x,xi,b,div_b", 0) == 0, ErrorCode::invalid_parameter,
          "flux table '" + path + "' must start with header x,xi,b,div_b");
  std::map<std::pair<double, double>, std::pair<double, double>> rows;
  std::vector<double> xs, xis;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double v[4];
    char comma;
    ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3];
    require(!ss.fail(), ErrorCode::invalid_parameter, "malformed flux table row '" + line + "' in " + path);
    rows[{v[0], v[1]}] = {v[2], v[3]};
    xs.push_back(v[0]);
    xis.push_back(v[1]);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(xs);
  uniq(xis);
  std::vector<double> b, div;
  for (double x : xs)
    for (double xi : xis) {
      auto it = rows.find({x, xi});
      require(it != rows.end(), ErrorCode::invalid_parameter, "flux table '" + path + "' is not a full lattice");
      b.push_back(it->second.first);
      div.push_back(it->second.second);
    }
  return tabulated_flux(std::move(xs), std::move(xis), std::move(b), std::move(div), p_exponent);
}

FluxField mollify_flux(const FluxField& b, const MollifierSpec& spec, double window_half_width) {
  const double eps = spec.spatial_scale, delta = spec.state_scale;
  require(eps > 0.0 && delta > 0.0, ErrorCode::invalid_parameter, "mollifier scales must be positive");
  require(eps < window_half_width, ErrorCode::invalid_parameter, "mollifier scale exceeds the working window");
  const std::string name = b.name() + "_mollified";

  if (const auto& sep = b.separable()) {
    auto a = sep->spatial;
    auto c = sep->state;
    auto kinks = b.kinks();
    SeparableForm form;
    form.spatial = [a, kinks, eps](double x) {
      auto f = [&](double z) { return BumpKernel::value(z) * a(x - eps * z); };
      return quad::gauss_split(f, -1.0, 1.0, kernel_breaks(x, eps, kinks));
    };
    form.spatial_dx = [a, kinks, eps](double x) {
      auto f = [&](double z) { return BumpKernel::derivative(z) * a(x - eps * z); };
      return quad::gauss_split(f, -1.0, 1.0, kernel_breaks(x, eps, kinks)) / eps;
    };
    form.state = [c, delta](double xi) {
      return quad::gauss_panels([&](double e) { return BumpKernel::value(e) * c(xi - delta * e); }, -1.0, 1.0, 8);
    };
    return FluxField(name, std::move(form), b.support_radius(), b.linf_bound(), b.p_exponent());
  }

  auto eval = [b, eps, delta](double x, double xi) {
    const auto breaks = kernel_breaks(x, eps, b.kinks());
    auto inner = [&](double z) {
      return BumpKernel::value(z) * quad::gauss_panels(
                                        [&](double e) { return BumpKernel::value(e) * b(x - eps * z, xi - delta * e); },
                                        -1.0, 1.0, 8);
    };
    return quad::gauss_split(inner, -1.0, 1.0, breaks);
  };
  auto div = [b, eps, delta](double x, double xi) {
    const auto breaks = kernel_breaks(x, eps, b.kinks());
    auto inner = [&](double z) {
      return BumpKernel::derivative(z) *
             quad::gauss_panels([&](double e) { return BumpKernel::value(e) * b(x - eps * z, xi - delta * e); },
                                -1.0, 1.0, 8);
    };
    return quad::gauss_split(inner, -1.0, 1.0, breaks) / eps;
  };
  return FluxField(name, eval, div, b.support_radius(), b.linf_bound(), b.p_exponent());
}

namespace {

// Values and slopes on a uniform lattice; cubic Hermite in between.
struct HermiteTable {
  double lo = 0.0, h = 1.0;
  std::vector<double> y, dy;

  double operator()(double x) const {
    const double s = (x - lo) / h;
    auto i = static_cast<std::ptrdiff_t>(std::floor(s));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(y.size()) - 2);
    const double t = s - double(i);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * h * dy[i] + (-2 * t3 + 3 * t2) * y[i + 1] +
           (t3 - t2) * h * dy[i + 1];
  }
  bool covers(double x) const { return x >= lo && x <= lo + h * double(y.size() - 1); }
};

HermiteTable sample_table(const std::function<double(double)>& f, const std::function<double(double)>* df,
                          double lo, double hi, double step) {
  HermiteTable t;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  t.lo = lo;
  t.h = (hi - lo) / double(n - 1);
  t.y.resize(n);
  t.dy.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.y[i] = f(lo + double(i) * t.h);
  for (std::size_t i = 0; i < n; ++i) {
    if (df) {
      t.dy[i] = (*df)(lo + double(i) * t.h);
    } else {
      const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
      t.dy[i] = (t.y[b] - t.y[a]) / (double(b - a) * t.h);
    }
  }
  return t;
}

}  // namespace

FluxField tabulate_separable(const FluxField& b, double x_lo, double x_hi, double dx, double xi_lo, double xi_hi,
                             double dxi) {
  const auto& sep = b.separable();
  require(bool(sep), ErrorCode::invalid_parameter, "tabulate_separable needs a separable flux");
  require(x_hi > x_lo && xi_hi > xi_lo && dx > 0 && dxi > 0, ErrorCode::invalid_parameter, "bad tabulation lattice");
  auto a = std::make_shared<HermiteTable>(sample_table(sep->spatial, &sep->spatial_dx, x_lo, x_hi, dx));
  auto da = std::make_shared<HermiteTable>(sample_table(sep->spatial_dx, nullptr, x_lo, x_hi, dx));
  auto c = std::make_shared<HermiteTable>(sample_table(sep->state, nullptr, xi_lo, xi_hi, dxi));
  SeparableForm form;
  form.spatial = [a, f = sep->spatial](double x) { return a->covers(x) ? (*a)(x) : f(x); };
  form.spatial_dx = [da, f = sep->spatial_dx](double x) { return da->covers(x) ? (*da)(x) : f(x); };
  form.state = [c, f = sep->state](double xi) { return c->covers(xi) ? (*c)(xi) : f(xi); };
  return FluxField(b.name(), std::move(form), b.support_radius(), b.linf_bound(), b.p_exponent(), b.kinks());
}

double reference_solution(int variant, double t, double x, double K, double T_max) {
  require(variant == 1 || variant == 2, ErrorCode::invalid_parameter, "reference variant must be 1 or 2");
  require(t >= 0.0 && t <= T_max, ErrorCode::invalid_parameter, "time outside [0, T_max]");
  require(K > T_max / 2.0 + 1.0, ErrorCode::invalid_parameter, "cap K must exceed T_max/2 + 1");
  const double right = (t / 2.0 + 1.0) * (t / 2.0 + 1.0);
  const double left = variant == 1 ? 0.0 : -(t / 2.0) * (t / 2.0);
  return (x >= left && x <= right) ? 1.0 : 0.0;
}

DivergenceSup divergence_sup(const FluxField& b, double R, const UniformGrid& grid, int n_state_samples) {
  require(R > 0.0 && R <= b.support_radius() * (1.0 + 1e-12), ErrorCode::invalid_parameter,
          "divergence_sup radius exceeds the flux support radius");
  require(n_state_samples >= 2, ErrorCode::invalid_parameter, "need at least two state samples");
  DivergenceSup out;
  out.p = b.p_exponent();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(grid.n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < grid.n; ++i) {
    const double x = grid.center(i);
    const bool near_kink = std::any_of(b.kinks().begin(), b.kinks().end(), [&](double k) {
      return std::abs(x - k) <= 0.5 * grid.h * (1.0 + 1e-9);
    });
    if (near_kink) {
      out.skipped.push_back(i);
      continue;
    }
    double m = 0.0;
    for (int k = 0; k < n_state_samples; ++k) {
      const double xi = -R + 2.0 * R * k / (n_state_samples - 1);
      m = std::max(m, std::abs(b.div_x(x, xi)));
    }
    F[i] = m;
    acc += std::pow(m, out.p) * grid.h;
  }
  out.F = GridFunctiond(grid, std::move(F));
  out.lp_norm = std::pow(acc, 1.0 / out.p);
  return out;
}

}  // namespace wpn
