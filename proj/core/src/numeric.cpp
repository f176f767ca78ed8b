#include "jellium/numeric.hpp"

#include <map>
#include <mutex>

#include "jellium/error.hpp"

namespace jellium {
namespace {

GaussLegendreRule build_rule(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // one more derivative evaluation at the converged node
    double p0 = 1.0;
    double p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int n) {
  if (n < 2 || n > 256) throw InvalidArgument("gauss_legendre: n must be in [2, 256]");
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double log_power_integral(double p, double a, double b) {
  if (!(a >= 0.0) || !(b > a)) throw InvalidArgument("log_power_integral: need 0 <= a < b");
  const double q = p + 1.0;
  if (std::isinf(b)) {
    if (!(q < 0.0) || a == 0.0) throw InvalidArgument("log_power_integral: divergent tail");
    return q * std::log(a) - std::log(-q);
  }
  if (a == 0.0) {
    if (!(q > 0.0)) throw InvalidArgument("log_power_integral: divergent at the origin");
    return q * std::log(b) - std::log(q);
  }
  const double len = std::log(b / a);
  const double x = q * len;
  const double base = q * std::log(a);
  if (q == 0.0) return std::log(len);
  if (x > 30.0) return base + x + std::log1p(-std::exp(-x)) - std::log(q);
  if (x < -30.0) return base + std::log1p(-std::exp(x)) - std::log(-q);
  return base + std::log(std::expm1(x) / q);
}

}  // namespace jellium
