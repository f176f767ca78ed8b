#pragma once

#include <algorithm>
#include <cmath>

#include "jellium/error.hpp"

namespace jellium {

template <class F>
double integrate_panels(F&& f, double a, double b, double rtol, double atol, int max_panels,
                        int order) {
  if (!(b > a)) return 0.0;
  const GaussLegendreRule& rule = gauss_legendre(order);
  auto estimate = [&](int panels) {
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * h;
      double part = 0.0;
      for (int i = 0; i < order; ++i) part += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
      sum += 0.5 * h * part;
    }
    return sum;
  };
  double previous = estimate(1);
  double change = kInf;
  for (int panels = 2; panels <= max_panels; panels *= 2) {
    const double current = estimate(panels);
    change = std::abs(current - previous);
    if (change <= std::max(rtol * std::abs(current), atol)) return current;
    previous = current;
  }
  throw ConvergenceError("integrate_panels: refinement did not converge",
                         change / std::max(std::abs(previous), 1e-300));
}

}  // namespace jellium
