#include "jellium/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jellium/error.hpp"
#include "jellium/parallel.hpp"

namespace jellium {

void RegionSpec::validate() const {
  if (!(r_min >= 0.0) || std::isnan(r_max) || !(r_max >= r_min))
    throw InvalidArgument("RegionSpec: need 0 <= r_min <= r_max");
  if (sector && !(std::isfinite(theta_min) && std::isfinite(theta_max) && theta_max >= theta_min &&
                  theta_max - theta_min <= 2.0 * kPi))
    throw InvalidArgument("RegionSpec: sector angles must be ordered and span at most 2 pi");
}

bool RegionSpec::contains(Complex z) const noexcept {
  const double r = std::abs(z);
  if (!(r >= r_min && r < r_max)) return false;
  if (!sector) return true;
  double t = std::arg(z) - theta_min;
  t -= 2.0 * kPi * std::floor(t / (2.0 * kPi));
  return t < theta_max - theta_min;
}

double RegionSpec::angular_fraction() const noexcept {
  return sector ? (theta_max - theta_min) / (2.0 * kPi) : 1.0;
}

int count_in(const PointSample& sample, const RegionSpec& region) {
  int n = 0;
  for (const auto& z : sample.points) n += region.contains(z) ? 1 : 0;
  return n;
}

std::vector<double> counts_in(const std::vector<PointSample>& samples, const RegionSpec& region) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = count_in(samples[i], region);
  return out;
}

std::vector<double> radial_count_terms(const MeasureSpec& measure, const BasisParams& params,
                                       const RegionSpec& region) {
  params.validate();
  region.validate();
  if (!measure.is_radial()) throw InvalidArgument("expected_count_radial: measure must be radial");
  const RadialWeight weight(measure, params.kappa);
  std::vector<double> out(params.N, 0.0);
  if (region.is_empty()) return out;
  for (int k = 0; k < params.N; ++k) {
    const double p = 2.0 * k + 1.0;
    const double total = weight.log_integral(p, 0.0, kInf);
    out[k] = std::min(1.0, std::exp(weight.log_integral(p, region.r_min, region.r_max) - total));
  }
  return out;
}

double expected_count_radial(const MeasureSpec& measure, const BasisParams& params, const RegionSpec& region) {
  const auto terms = radial_count_terms(measure, params, region);
  // small terms first
  std::vector<double> sorted = terms;
  std::sort(sorted.begin(), sorted.end());
  double s = 0.0;
  for (double t : sorted) s += t;
  return s * region.angular_fraction();
}

std::vector<ScalingRow> scaling_table(const MeasureSpec& measure, double chi, std::span<const int> Ns,
                                      const RegionSpec& region, unsigned threads) {
  std::vector<ScalingRow> rows(Ns.size());
  parallel_for(Ns.size(), threads, [&](std::size_t i) {
    const int N = Ns[i];
    ScalingRow row;
    row.N = N;
    row.kappa = kappa_rule(N, chi);
    row.eta = expected_count_radial(measure, {N, row.kappa}, region);
    row.eta_over_sqrt = row.eta / std::sqrt(static_cast<double>(N));
    row.eta_over_sqrt_log = N > 1 ? row.eta_over_sqrt / std::log(static_cast<double>(N)) : kInf;
    rows[i] = row;
  });
  return rows;
}

double sup_rel_diff(std::span<const double> A, std::span<const double> B) {
  if (A.size() != B.size()) throw InvalidArgument("sup_rel_diff: grids differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (!(B[i] > 0.0)) throw InvalidArgument("sup_rel_diff: reference values must be positive");
    s = std::max(s, std::abs(A[i] - B[i]) / B[i]);
  }
  return s;
}

ComparisonReport compare_grids(std::vector<Complex> grid, std::vector<double> a, std::vector<double> b,
                               std::map<std::string, double> metadata) {
  if (grid.size() != a.size() || a.size() != b.size()) throw InvalidArgument("compare_grids: size mismatch");
  ComparisonReport rep;
  rep.rel_diff.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(b[i] > 0.0)) throw InvalidArgument("compare_grids: reference values must be positive");
    rep.rel_diff[i] = std::abs(a[i] - b[i]) / b[i];
  }
  rep.sup = rep.rel_diff.empty() ? 0.0 : *std::max_element(rep.rel_diff.begin(), rep.rel_diff.end());
  rep.grid = std::move(grid);
  rep.a = std::move(a);
  rep.b = std::move(b);
  rep.metadata = std::move(metadata);
  return rep;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson: need two equal series of length >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw InvalidArgument("count_correlation: zero variance, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

double count_correlation(const std::vector<PointSample>& samples, const RegionSpec& A, const RegionSpec& B) {
  const auto a = counts_in(samples, A);
  const auto b = counts_in(samples, B);
  return pearson(a, b);
}

double PolarBins::area(std::size_t ir) const {
  const double a = r_edges[ir], b = r_edges[ir + 1];
  return kPi * (b * b - a * a) / n_theta;
}

std::vector<double> empirical_intensity(const std::vector<PointSample>& samples, const PolarBins& bins) {
  if (bins.r_edges.size() < 2 || bins.n_theta < 1) throw InvalidArgument("empirical_intensity: empty bins");
  if (!std::is_sorted(bins.r_edges.begin(), bins.r_edges.end()) || bins.r_edges.front() < 0.0)
    throw InvalidArgument("empirical_intensity: radial edges must be nondecreasing and nonnegative");
  const std::size_t nr = bins.r_edges.size() - 1;
  std::vector<double> counts(nr * bins.n_theta, 0.0);
  for (const auto& s : samples)
    for (const auto& z : s.points) {
      const double r = std::abs(z);
      const auto it = std::upper_bound(bins.r_edges.begin(), bins.r_edges.end(), r);
      if (it == bins.r_edges.begin() || it == bins.r_edges.end()) continue;
      const std::size_t ir = static_cast<std::size_t>(it - bins.r_edges.begin()) - 1;
      double t = std::arg(z);
      if (t < 0.0) t += 2.0 * kPi;
      const int it_ = std::min(bins.n_theta - 1, static_cast<int>(t / (2.0 * kPi) * bins.n_theta));
      counts[ir * bins.n_theta + it_] += 1.0;
    }
  if (samples.empty()) return counts;
  for (std::size_t ir = 0; ir < nr; ++ir)
    for (int j = 0; j < bins.n_theta; ++j) {
      const double area = bins.area(ir);
      auto& c = counts[ir * bins.n_theta + j];
      c = area > 0.0 ? c / (samples.size() * area) : 0.0;
    }
  return counts;
}

Estimate mean_estimate(std::span<const double> x) {
  Estimate e;
  if (x.empty()) return e;
  const double n = static_cast<double>(x.size());
  e.value = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - e.value) * (v - e.value);
    e.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

Estimate intensity_at_origin(const std::vector<PointSample>& samples, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("intensity_at_origin: radius must be positive");
  const double a = 4.0 / (kPi * eps * eps);
  const double b = -6.0 / (kPi * eps * eps * eps * eps);
  std::vector<double> per(samples.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (const auto& z : samples[i].points) {
      const double r2 = std::norm(z);
      if (r2 < eps * eps) per[i] += a + b * r2;
    }
  return mean_estimate(per);
}

std::vector<int> subsequence_select(double q, double chi, double target, int N_min, int N_max, double tol) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("subsequence_select: q must lie in (0, 1]");
  if (!(tol >= 0.0)) throw InvalidArgument("subsequence_select: tolerance must be nonnegative");
  if (N_min < 1 || N_max < N_min) throw InvalidArgument("subsequence_select: need 1 <= N_min <= N_max");
  std::vector<int> out;
  for (int N = N_min; N <= N_max; ++N) {
    const double x = kappa_rule(N, chi) * q;
    if (std::abs(class_representative(x, target) - target) <= tol) out.push_back(N);
  }
  return out;
}

double tv_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("tv_distance: histograms differ in size");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(sa > 0.0) || !(sb > 0.0)) throw InvalidArgument("tv_distance: empty histogram");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] / sa - b[i] / sb);
  return 0.5 * d;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::vector<double> sorted_moduli_histogram(const std::vector<PointSample>& samples, int bins) {
  if (samples.empty()) throw InvalidArgument("sorted_moduli_histogram: no samples");
  if (bins < 1) throw InvalidArgument("sorted_moduli_histogram: bins must be >= 1");
  const std::size_t n = samples.front().points.size();
  if (n < 1 || n > 4) throw InvalidArgument("sorted_moduli_histogram: supports 1..4 points per sample");
  std::size_t cells = 1;
  for (std::size_t d = 0; d < n; ++d) cells *= bins;
  std::vector<double> h(cells, 0.0);
  std::vector<double> t(n);
  for (const auto& s : samples) {
    if (s.points.size() != n) throw InvalidArgument("sorted_moduli_histogram: samples differ in size");
    for (std::size_t d = 0; d < n; ++d) {
      const double r = std::abs(s.points[d]);
      t[d] = r / (1.0 + r);
    }
    std::sort(t.begin(), t.end());
    std::size_t idx = 0;
    for (std::size_t d = 0; d < n; ++d)
      idx = idx * bins + std::min<std::size_t>(bins - 1, static_cast<std::size_t>(t[d] * bins));
    h[idx] += 1.0;
  }
  return h;
}

}  // namespace jellium
