#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "jellium/measure.hpp"
#include "jellium/sampler.hpp"
#include "jellium/wpoly.hpp"

namespace jellium {

/// {r_min <= |z| < r_max}, optionally restricted to the sector
/// theta_min <= arg z < theta_max (angles taken mod 2 pi from theta_min).
struct RegionSpec {
  double r_min = 0.0;
  double r_max = kInf;
  bool sector = false;
  double theta_min = 0.0;
  double theta_max = 2.0 * kPi;
  bool compact_in_uncharged = false;

  void validate() const;
  bool contains(Complex z) const noexcept;
  /// Angular fraction covered (1 without a sector).
  double angular_fraction() const noexcept;
  bool is_empty() const noexcept { return !(r_max > r_min) || (sector && !(theta_max > theta_min)); }
  bool operator==(const RegionSpec&) const = default;
};

int count_in(const PointSample& sample, const RegionSpec& region);
std::vector<double> counts_in(const std::vector<PointSample>& samples, const RegionSpec& region);

/// Exact finite-N expected count of the radial gas in a region: the sum over
/// k of P(R_k in [r_min, r_max)) times the angular fraction.
double expected_count_radial(const MeasureSpec& measure, const BasisParams& params, const RegionSpec& region);
/// Per-k probabilities P(R_k in [r_min, r_max)).
std::vector<double> radial_count_terms(const MeasureSpec& measure, const BasisParams& params,
                                       const RegionSpec& region);

struct ScalingRow {
  int N = 0;
  double kappa = 0.0;
  double eta = 0.0;
  double eta_over_sqrt = 0.0;
  double eta_over_sqrt_log = 0.0;
};

/// eta_N = expected_count_radial for kappa_N = N + chi, over the N list.
std::vector<ScalingRow> scaling_table(const MeasureSpec& measure, double chi, std::span<const int> Ns,
                                      const RegionSpec& region, unsigned threads = 1);

/// max |A - B| / B; B must be positive.
double sup_rel_diff(std::span<const double> A, std::span<const double> B);

struct ComparisonReport {
  std::vector<Complex> grid;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> rel_diff;
  double sup = 0.0;
  std::map<std::string, double> metadata;
};

ComparisonReport compare_grids(std::vector<Complex> grid, std::vector<double> a, std::vector<double> b,
                               std::map<std::string, double> metadata = {});

/// Pearson correlation; throws when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
double count_correlation(const std::vector<PointSample>& samples, const RegionSpec& A, const RegionSpec& B);

/// Polar bins: radial edges times n_theta equal sectors; row-major by radius.
struct PolarBins {
  std::vector<double> r_edges;
  int n_theta = 1;
  double area(std::size_t ir) const;
};

/// count per bin / (replicas * bin area).
std::vector<double> empirical_intensity(const std::vector<PointSample>& samples, const PolarBins& bins);

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Kernel estimate of a rotation-invariant intensity at 0, with weight
/// (4 - 6 r^2/eps^2) / (pi eps^2) on |z| < eps: unbiased for constant and
/// r^2 terms of the intensity.
Estimate intensity_at_origin(const std::vector<PointSample>& samples, double eps);

/// Mean and standard error of per-replica values.
Estimate mean_estimate(std::span<const double> x);

/// N in [N_min, N_max] with |[ (N + chi) q ] - target| <= tol, brackets taken
/// in the window centred at target.
std::vector<int> subsequence_select(double q, double chi, double target, int N_min, int N_max, double tol);

/// Total variation distance of two histograms (normalized internally).
double tv_distance(std::span<const double> a, std::span<const double> b);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Joint histogram of the sorted moduli mapped by t = r / (1 + r), `bins`
/// cells per axis (bins^N cells). All samples must have the same size.
std::vector<double> sorted_moduli_histogram(const std::vector<PointSample>& samples, int bins = 10);

}  // namespace jellium
