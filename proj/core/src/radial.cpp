#include "jellium/radial.hpp"

#include <algorithm>
#include <cmath>

#include "jellium/error.hpp"

namespace jellium {
namespace {

constexpr double kLogRtol = 1e-12;
constexpr int kMinPanels = 4;
constexpr int kMaxPanels = 1 << 14;
constexpr int kOrder = 20;

// x in [a, b] with int_a^x r^q dr = t * int_a^b r^q dr.
double power_quantile(double q, double a, double b, double t) {
  const double s = q + 1.0;
  if (std::isinf(b)) return a * std::pow(1.0 - t, 1.0 / s);  // s < 0
  if (a == 0.0) return b * std::pow(t, 1.0 / s);              // s > 0
  const double L = std::log(b / a);
  if (std::abs(s * L) < 1e-10) return a * std::exp(t * L);
  if (s > 0.0) {
    const double ratio = std::exp(-s * L);  // (a/b)^s
    return b * std::exp(std::log(ratio * (1.0 - t) + t) / s);
  }
  const double ratio = std::exp(s * L);  // (b/a)^s
  return a * std::exp(std::log1p(-t * (1.0 - ratio)) / s);
}

}  // namespace

RadialWeight::RadialWeight(const MeasureSpec& measure, double kappa, double outer_exponent)
    : measure_(measure), potential_(measure), kappa_(kappa), outer_exponent_(outer_exponent) {
  if (!measure.is_radial()) throw InvalidArgument("RadialWeight: measure is not radial");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidArgument("RadialWeight: kappa must be positive");
  std::vector<double> edges{0.0};
  for (double b : measure.breakpoints()) edges.push_back(b);
  if (outer_exponent != 0.0) edges.push_back(1.0);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges.push_back(kInf);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    Interval iv;
    iv.lo = edges[i];
    iv.hi = edges[i + 1];
    iv.outer = iv.lo >= 1.0 ? outer_exponent : 0.0;
    if (std::isinf(iv.hi)) {
      iv.power_law = true;
      iv.A = 1.0;
      iv.B = 0.0;
    } else if (measure.charge_free(iv.lo, iv.hi)) {
      iv.power_law = true;
      iv.A = measure.mass_within(iv.lo);
      const double mid = 0.5 * (iv.lo + iv.hi);
      iv.B = potential_.radial(mid) - iv.A * std::log(mid);
    }
    intervals_.push_back(iv);
  }
}

double RadialWeight::log_density(double p, double r) const {
  if (r <= 0.0) return p > 0.0 ? -kInf : (p == 0.0 ? -2.0 * kappa_ * potential_.radial(0.0) : kInf);
  return p * std::log(r) - 2.0 * kappa_ * potential_.radial(r) +
         outer_exponent_ * std::log(std::max(1.0, r));
}

RadialWeight::PanelIntegral RadialWeight::integrate_smooth(double p, double lo, double hi) const {
  const GaussLegendreRule& rule = gauss_legendre(kOrder);
  auto estimate = [&](int panels, PanelIntegral& out) {
    out.edges.resize(panels + 1);
    out.log_panel.resize(panels);
    const double h = (hi - lo) / panels;
    LogSum total;
    for (int k = 0; k <= panels; ++k) out.edges[k] = k == panels ? hi : lo + k * h;
    for (int k = 0; k < panels; ++k) {
      const double a = out.edges[k], b = out.edges[k + 1];
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      LogSum part;
      for (int i = 0; i < kOrder; ++i) {
        part.add(std::log(rule.weights[i] * half) + log_density(p, mid + half * rule.nodes[i]));
      }
      out.log_panel[k] = part.value();
      total.add(out.log_panel[k]);
    }
    out.log_value = total.value();
  };
  PanelIntegral prev, cur;
  estimate(kMinPanels, prev);
  double change = kInf;
  for (int panels = 2 * kMinPanels; panels <= kMaxPanels; panels *= 2) {
    estimate(panels, cur);
    change = std::abs(cur.log_value - prev.log_value);
    if (change <= kLogRtol || (cur.log_value == -kInf && prev.log_value == -kInf)) return cur;
    std::swap(prev, cur);
  }
  throw ConvergenceError("RadialWeight: radial quadrature did not converge", change);
}

double RadialWeight::log_integral(double p, double lo, double hi) const {
  if (!(hi > lo)) return -kInf;
  LogSum sum;
  for (const auto& iv : intervals_) {
    const double a = std::max(lo, iv.lo), b = std::min(hi, iv.hi);
    if (!(b > a)) continue;
    if (iv.power_law) {
      const double q = p - 2.0 * kappa_ * iv.A + iv.outer;
      if (std::isinf(b) && !(q < -1.0))
        throw InvalidArgument("RadialWeight: divergent tail (need kappa large enough for the exponent)");
      sum.add(log_power_integral(q, a, b) - 2.0 * kappa_ * iv.B);
    } else {
      sum.add(integrate_smooth(p, a, b).log_value);
    }
  }
  return sum.value();
}

RadialLaw::RadialLaw(std::shared_ptr<const RadialWeight> weight, double p) : weight_(std::move(weight)), p_(p) {
  const auto& ivs = weight_->intervals();
  LogSum total;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    Piece piece;
    piece.interval = i;
    if (ivs[i].power_law) {
      piece.log_mass = weight_->log_integral(p, ivs[i].lo, ivs[i].hi);
    } else {
      piece.panels = weight_->integrate_smooth(p, ivs[i].lo, ivs[i].hi);
      piece.log_mass = piece.panels.log_value;
    }
    total.add(piece.log_mass);
    pieces_.push_back(std::move(piece));
  }
  log_total_ = total.value();
  if (!std::isfinite(log_total_)) throw ConvergenceError("RadialLaw: normalizer is not finite", 0.0);
  double acc = 0.0;
  for (const auto& piece : pieces_) {
    acc += std::exp(piece.log_mass - log_total_);
    cumulative_.push_back(acc);
  }
}

double RadialLaw::probability(double lo, double hi) const {
  lo = std::max(lo, 0.0);
  if (!(hi > lo)) return 0.0;
  return std::min(1.0, std::exp(weight_->log_integral(p_, lo, hi) - log_total_));
}

double RadialLaw::solve_in_panel(double lo, double hi, double target_log) const {
  const GaussLegendreRule& rule = gauss_legendre(kOrder);
  const double shift = std::max(weight_->log_density(p_, lo), weight_->log_density(p_, hi));
  const double target = std::exp(target_log - shift);
  auto partial = [&](double x) {
    const double mid = 0.5 * (lo + x), half = 0.5 * (x - lo);
    double s = 0.0;
    for (int i = 0; i < kOrder; ++i)
      s += rule.weights[i] * half * std::exp(weight_->log_density(p_, mid + half * rule.nodes[i]) - shift);
    return s;
  };
  double a = lo, b = hi;
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = partial(x) - target;
    if (std::abs(g) <= 1e-14 * target) return x;
    if (g > 0.0) b = x; else a = x;
    const double dens = std::exp(weight_->log_density(p_, x) - shift);
    double next = dens > 0.0 ? x - g / dens : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

double RadialLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("RadialLaw::quantile: u must lie in (0, 1)");
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t i = std::min<std::size_t>(it - cumulative_.begin(), pieces_.size() - 1);
  while (pieces_[i].log_mass == -kInf && i > 0) --i;
  const double before = i == 0 ? 0.0 : cumulative_[i - 1];
  const double width = cumulative_[i] - before;
  const double t = std::clamp(width > 0.0 ? (u - before) / width : 0.5, 0.0, 1.0);
  const auto& iv = weight_->intervals()[pieces_[i].interval];
  if (iv.power_law) {
    const double q = p_ - 2.0 * weight_->kappa() * iv.A + iv.outer;
    return std::clamp(power_quantile(q, iv.lo, iv.hi, t), iv.lo, iv.hi);
  }
  const auto& pan = pieces_[i].panels;
  const double target_log = std::log(std::max(t, 1e-300)) + pieces_[i].log_mass;
  // locate the panel by cumulative panel mass
  double acc = -kInf;
  for (std::size_t k = 0; k < pan.log_panel.size(); ++k) {
    const double next = log_add(acc, pan.log_panel[k]);
    if (next >= target_log || k + 1 == pan.log_panel.size()) {
      const double inside = acc == -kInf ? target_log : log_sub(target_log, acc);
      if (inside == -kInf) return pan.edges[k];
      return solve_in_panel(pan.edges[k], pan.edges[k + 1], std::min(inside, pan.log_panel[k]));
    }
    acc = next;
  }
  return pan.edges.back();
}

}  // namespace jellium
