#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace spectra::test {

/// Numerical quadrature of the CDF form of CRPS,
///   integral of (F(t) - 1{t >= y})^2 - fair_term * F(t) (1 - F(t)) dt,
/// with F the empirical ensemble CDF. fair_term is 0 for the standard score
/// and 1/(M-1) for the fair one. The 1e5-point uniform grid is merged with
/// the breakpoints so the midpoint rule sees a constant integrand per cell.
inline double crps_quadrature(std::span<const double> members, double y, double fair_term,
                              std::size_t points = 100000) {
  std::vector<double> xs(members.begin(), members.end());
  std::sort(xs.begin(), xs.end());
  const double lo = std::min(xs.front(), y), hi = std::max(xs.back(), y);
  if (hi == lo) return 0.0;
  std::vector<double> uniform(points);
  for (std::size_t i = 0; i < points; ++i) {
    uniform[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  std::vector<double> breaks = xs;
  breaks.insert(std::upper_bound(breaks.begin(), breaks.end(), y), y);
  std::vector<double> grid(uniform.size() + breaks.size());
  std::merge(uniform.begin(), uniform.end(), breaks.begin(), breaks.end(), grid.begin());
  const double m = static_cast<double>(xs.size());
  double total = 0.0;
  std::size_t below = 0;  // members <= current midpoint
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double a = grid[i], b = grid[i + 1];
    if (b <= a) continue;
    const double t = 0.5 * (a + b);
    while (below < xs.size() && xs[below] <= t) ++below;
    const double f = static_cast<double>(below) / m;
    const double step = t >= y ? 1.0 : 0.0;
    total += ((f - step) * (f - step) - fair_term * f * (1.0 - f)) * (b - a);
  }
  return total;
}

}  // namespace spectra::test
