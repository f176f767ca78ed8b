#pragma once

#include <memory>
#include <vector>

#include "jellium/measure.hpp"

namespace jellium {

/// The radial weight w(r) = exp(-2 kappa U(r)) * max(1, r)^outer_exponent of a
/// radial measure, split into intervals on which U is either an exact
/// logarithm (charge-free, U = A log r + B) or smooth and integrated
/// numerically. All integrals are returned as logarithms.
class RadialWeight {
 public:
  RadialWeight(const MeasureSpec& measure, double kappa, double outer_exponent = 0.0);

  double kappa() const noexcept { return kappa_; }
  const MeasureSpec& measure() const noexcept { return measure_; }

  /// log of r^p w(r).
  double log_density(double p, double r) const;

  /// log of the integral of r^p w(r) over [lo, hi] (hi may be inf).
  double log_integral(double p, double lo, double hi) const;

  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool power_law = false;
    double A = 0.0;  // U = A log r + B on power-law intervals
    double B = 0.0;
    double outer = 0.0;  // exponent of the max(1, r) factor on this interval
  };
  const std::vector<Interval>& intervals() const noexcept { return intervals_; }

  /// Numerically integrated log-integral of r^p w(r) over [lo, hi] inside a
  /// single smooth interval, with the panel count that reached the tolerance.
  struct PanelIntegral {
    double log_value = -kInf;
    std::vector<double> edges;
    std::vector<double> log_panel;
  };
  PanelIntegral integrate_smooth(double p, double lo, double hi) const;

 private:
  MeasureSpec measure_;
  PotentialField potential_;
  double kappa_;
  double outer_exponent_;
  std::vector<Interval> intervals_;
};

/// Probability law on (0, inf) with density proportional to r^p w(r), with
/// exact inverse-CDF sampling.
class RadialLaw {
 public:
  RadialLaw(std::shared_ptr<const RadialWeight> weight, double p);

  double exponent() const noexcept { return p_; }
  /// log of the normalizing integral.
  double log_normalizer() const noexcept { return log_total_; }

  /// P(lo <= R <= hi) computed without cancellation.
  double probability(double lo, double hi) const;
  double ccdf(double r) const { return probability(r, kInf); }

  /// Inverse CDF at u in (0, 1).
  double quantile(double u) const;

 private:
  struct Piece {
    std::size_t interval = 0;
    double log_mass = -kInf;
    RadialWeight::PanelIntegral panels;  // empty for power-law intervals
  };
  double solve_in_panel(double lo, double hi, double target_log) const;

  std::shared_ptr<const RadialWeight> weight_;
  double p_;
  double log_total_ = -kInf;
  std::vector<Piece> pieces_;
  std::vector<double> cumulative_;  // normalized, cumulative_[i] = P(R <= end of piece i)
};

}  // namespace jellium
