#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace digirap {

/// Adaptive 61-point Gauss-Kronrod integral of f over [a, b], split at the
/// given interior breakpoints so that kinks never fall inside a panel.
template <class F>
auto integrate(F&& f, double a, double b, std::span<const double> breakpoints = {},
               double tolerance = 1e-13) {
  std::vector<double> edges{a};
  for (double x : breakpoints) {
    if (x > a && x < b) edges.push_back(x);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());

  using Result = decltype(f(a));
  Result total{};
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] <= edges[i]) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, edges[i], edges[i + 1], 15, tolerance);
  }
  return total;
}

}  // namespace digirap
