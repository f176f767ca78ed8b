#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace jellium {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule; the reference stays valid for the lifetime of the program.
const GaussLegendreRule& gauss_legendre(int n);

/// log of the integral of r^p over [a, b]. `b` may be +inf (requires p < -1),
/// `a` may be 0 (requires p > -1). Stable for p near -1 and for huge |p|.
double log_power_integral(double p, double a, double b);

/// Running log-sum-exp accumulator.
class LogSum {
 public:
  void add(double log_value) noexcept {
    if (log_value == -kInf) return;
    if (log_value <= max_) {
      sum_ += std::exp(log_value - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_value) + 1.0;
      max_ = log_value;
    }
  }
  void merge(const LogSum& other) noexcept {
    if (other.max_ == -kInf) return;
    add(other.max_ + std::log(other.sum_));
  }
  double value() const noexcept {
    return max_ == -kInf ? -kInf : max_ + std::log(sum_);
  }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

/// log(exp(a) + exp(b)).
inline double log_add(double a, double b) noexcept {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// log(exp(a) - exp(b)) for a >= b.
inline double log_sub(double a, double b) noexcept {
  if (b == -kInf) return a;
  if (b >= a) return -kInf;
  return a + std::log(-std::expm1(b - a));
}

}  // namespace jellium

namespace jellium {

/// Composite Gauss-Legendre integral of f over [a, b]; the number of equal
/// panels doubles until two successive estimates agree to
/// max(rtol * |I|, atol). Throws ConvergenceError past `max_panels`.
template <class F>
double integrate_panels(F&& f, double a, double b, double rtol, double atol = 0.0,
                        int max_panels = 4096, int order = 20);

}  // namespace jellium

#include "jellium/detail/integrate_impl.hpp"
