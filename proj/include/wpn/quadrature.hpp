#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace wpn::quad {

/// 4-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 4> gl4_nodes = {-0.8611363115940526, -0.3399810435848563,
                                                     0.3399810435848563, 0.8611363115940526};
inline constexpr std::array<double, 4> gl4_weights = {0.3478548451374538, 0.6521451548625461,
                                                       0.6521451548625461, 0.3478548451374538};

/// Integrate f over [lo, hi] with 4-point Gauss-Legendre on `panels` equal panels.
template <typename F>
double gauss_panels(F&& f, double lo, double hi, int panels) {
  const double w = (hi - lo) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * w;
    for (std::size_t k = 0; k < 4; ++k) sum += gl4_weights[k] * f(mid + 0.5 * w * gl4_nodes[k]);
  }
  return 0.5 * w * sum;
}

/// Composite rule on [lo, hi] split at the given interior breakpoints, so that a
/// kink of the integrand never sits inside a panel. Roughly `total_panels` panels
/// are distributed over the pieces by length (at least one per piece). Each piece
/// is halved; a half ending at a breakpoint is graded toward it, z = break -+ half tau^2,
/// which turns square-root behaviour there into a smooth integrand.
template <typename F>
double gauss_split(F&& f, double lo, double hi, const std::vector<double>& breaks, int total_panels = 8) {
  std::vector<double> cuts{lo};
  for (double b : breaks)
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  std::sort(cuts.begin() + 1, cuts.end() - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil(total_panels * len / (hi - lo))));
    const double half = 0.5 * len, a = cuts[i], b = cuts[i + 1];
    if (i > 0)
      sum += gauss_panels([&](double tau) { return 2.0 * half * tau * f(a + half * tau * tau); }, 0.0, 1.0, panels);
    else
      sum += gauss_panels(f, a, a + half, panels);
    if (i + 2 < cuts.size())
      sum += gauss_panels([&](double tau) { return 2.0 * half * tau * f(b - half * tau * tau); }, 0.0, 1.0, panels);
    else
      sum += gauss_panels(f, b - half, b, panels);
  }
  return sum;
}

}  // namespace wpn::quad
