#include "jellium/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jellium/error.hpp"

namespace jellium {
namespace detail {

// Unit-mass shape data; every evaluation below is for the normalized shape.
struct ProfileData {
  enum class Kind { Circle, Disk, Annulus, Tabulated, Polar };
  Kind kind = Kind::Circle;
  double mass = 1.0;
  double support_lo = 0.0;
  double support_hi = 0.0;

  // Circle: radius = support_hi. Disk: radius = support_hi. Annulus: [lo, hi].

  // Tabulated: nodes s, unit cdf F, cell densities f, suffix sums of
  // f_c * (H(s_{c+1}) - H(s_c)) with H(s) = s log s - s.
  std::vector<double> s;
  std::vector<double> F;
  std::vector<double> f;
  std::vector<double> suffix;

  // Polar: nodes s, Fourier coefficients coeff[i * (modes + 1) + m] of the
  // unit-mass density at s_i (Nyquist mode pre-halved), cumulative unit
  // radial mass at the nodes.
  int modes = 0;
  std::vector<Complex> coeff;
  std::vector<double> cum_mass;
};

}  // namespace detail

namespace {

using detail::ProfileData;
using Kind = ProfileData::Kind;

constexpr double kMassTol = 1e-12;
constexpr double kQuadRtol = 1e-10;

double xlogx_minus_x(double s) { return s > 0.0 ? s * std::log(s) - s : 0.0; }
double s2logs_minus_half(double s) { return s > 0.0 ? s * s * std::log(s) - 0.5 * s * s : 0.0; }

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument("MeasureSpec: " + msg);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

std::shared_ptr<const ProfileData> prepare(const Component& comp) {
  auto d = std::make_shared<ProfileData>();
  d->mass = comp.mass;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformCircle>) {
          require(finite_positive(p.radius), "circle radius must be positive");
          d->kind = Kind::Circle;
          d->support_lo = d->support_hi = p.radius;
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          require(finite_positive(p.radius), "disk radius must be positive");
          d->kind = Kind::Disk;
          d->support_lo = 0.0;
          d->support_hi = p.radius;
        } else if constexpr (std::is_same_v<T, UniformAnnulus>) {
          require(std::isfinite(p.inner) && p.inner >= 0.0 && finite_positive(p.outer) &&
                      p.inner < p.outer,
                  "annulus bounds must satisfy 0 <= inner < outer");
          d->kind = Kind::Annulus;
          d->support_lo = p.inner;
          d->support_hi = p.outer;
        } else if constexpr (std::is_same_v<T, RadialCdf>) {
          const auto& s = p.radii;
          const auto& F = p.cdf;
          require(s.size() >= 2 && s.size() == F.size(), "tabulated cdf needs >= 2 matching nodes");
          for (std::size_t i = 0; i < s.size(); ++i) {
            require(std::isfinite(s[i]) && s[i] >= 0.0 && std::isfinite(F[i]),
                    "tabulated cdf nodes must be finite and nonnegative");
            if (i > 0) {
              require(s[i] > s[i - 1], "tabulated radii must be strictly increasing");
              require(F[i] >= F[i - 1], "tabulated cdf must be nondecreasing");
            }
          }
          require(std::abs(F.front()) <= kMassTol, "tabulated cdf must start at 0");
          require(std::abs(F.back() - comp.mass) <= kMassTol,
                  "tabulated cdf must end at the component mass");
          d->kind = Kind::Tabulated;
          d->s = s;
          d->F.resize(F.size());
          for (std::size_t i = 0; i < F.size(); ++i) d->F[i] = F[i] / F.back();
          d->F.front() = 0.0;
          d->F.back() = 1.0;
          const std::size_t cells = s.size() - 1;
          d->f.resize(cells);
          d->suffix.assign(s.size(), 0.0);
          for (std::size_t c = 0; c < cells; ++c) d->f[c] = (d->F[c + 1] - d->F[c]) / (s[c + 1] - s[c]);
          for (std::size_t c = cells; c-- > 0;) {
            d->suffix[c] = d->suffix[c + 1] + d->f[c] * (xlogx_minus_x(s[c + 1]) - xlogx_minus_x(s[c]));
          }
          auto first = std::find_if(d->F.begin(), d->F.end(), [](double v) { return v > 0.0; });
          d->support_lo = s[std::max<std::ptrdiff_t>(0, first - d->F.begin() - 1)];
          auto full = std::find_if(d->F.begin(), d->F.end(), [](double v) { return v >= 1.0; });
          d->support_hi = s[full - d->F.begin()];
        } else if constexpr (std::is_same_v<T, PolarDensity>) {
          const auto& s = p.radii;
          require(s.size() >= 2, "polar density needs >= 2 radii");
          require(p.n_theta >= 1, "polar density needs n_theta >= 1");
          require(p.values.size() == s.size() * static_cast<std::size_t>(p.n_theta),
                  "polar density values must have radii.size() * n_theta entries");
          for (std::size_t i = 0; i < s.size(); ++i) {
            require(std::isfinite(s[i]) && s[i] >= 0.0, "polar radii must be finite and >= 0");
            if (i > 0) require(s[i] > s[i - 1], "polar radii must be strictly increasing");
          }
          for (double v : p.values) require(std::isfinite(v) && v >= 0.0, "polar density must be >= 0");
          d->kind = Kind::Polar;
          d->s = s;
          const int n = p.n_theta;
          d->modes = n / 2;
          const int stride = d->modes + 1;
          d->coeff.assign(s.size() * stride, Complex{});
          for (std::size_t i = 0; i < s.size(); ++i) {
            for (int m = 0; m <= d->modes; ++m) {
              Complex c{};
              for (int j = 0; j < n; ++j) {
                const double th = 2.0 * kPi * j / n;
                c += p.values[i * n + j] * std::polar(1.0, -m * th);
              }
              c /= static_cast<double>(n);
              if (n % 2 == 0 && m == d->modes && m > 0) c *= 0.5;
              d->coeff[i * stride + m] = c;
            }
          }
          // radial mass 2 pi int c_0(s) s ds, c_0 linear per cell
          d->cum_mass.assign(s.size(), 0.0);
          for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            const double a = s[i], b = s[i + 1];
            const double ca = d->coeff[i * stride].real(), cb = d->coeff[(i + 1) * stride].real();
            const double slope = (cb - ca) / (b - a);
            const double alpha = ca - slope * a;
            const double cell = 2.0 * kPi *
                                (alpha * (b * b - a * a) / 2.0 + slope * (b * b * b - a * a * a) / 3.0);
            d->cum_mass[i + 1] = d->cum_mass[i] + cell;
          }
          const double total = d->cum_mass.back();
          require(total > 0.0, "polar density must have positive integral");
          for (auto& c : d->coeff) c /= total;
          for (auto& m : d->cum_mass) m /= total;
          d->support_lo = s.front();
          d->support_hi = s.back();
        }
      },
      comp.profile);
  return d;
}

// Unit-mass radial CDF, closed disk.
double unit_cdf(const ProfileData& d, double r, bool open) {
  switch (d.kind) {
    case Kind::Circle:
      return open ? (r > d.support_hi ? 1.0 : 0.0) : (r >= d.support_hi ? 1.0 : 0.0);
    case Kind::Disk: {
      const double t = r / d.support_hi;
      return std::min(1.0, t * t);
    }
    case Kind::Annulus: {
      const double a = d.support_lo, b = d.support_hi;
      return std::clamp((r * r - a * a) / (b * b - a * a), 0.0, 1.0);
    }
    case Kind::Tabulated: {
      if (r <= d.s.front()) return 0.0;
      if (r >= d.s.back()) return 1.0;
      const auto it = std::upper_bound(d.s.begin(), d.s.end(), r);
      const std::size_t c = (it - d.s.begin()) - 1;
      return d.F[c] + d.f[c] * (r - d.s[c]);
    }
    case Kind::Polar: {
      if (r <= d.s.front()) return 0.0;
      if (r >= d.s.back()) return 1.0;
      const auto it = std::upper_bound(d.s.begin(), d.s.end(), r);
      const std::size_t i = (it - d.s.begin()) - 1;
      const int stride = d.modes + 1;
      const double a = d.s[i], b = d.s[i + 1];
      const double ca = d.coeff[i * stride].real(), cb = d.coeff[(i + 1) * stride].real();
      const double slope = (cb - ca) / (b - a);
      const double alpha = ca - slope * a;
      return d.cum_mass[i] +
             2.0 * kPi * (alpha * (r * r - a * a) / 2.0 + slope * (r * r * r - a * a * a) / 3.0);
    }
  }
  return 0.0;
}

// Closed-form unit-mass radial potential.
double unit_potential_closed(const ProfileData& d, double r) {
  switch (d.kind) {
    case Kind::Circle:
      return std::log(std::max(r, d.support_hi));
    case Kind::Disk: {
      const double R = d.support_hi;
      if (r >= R) return std::log(r);
      return std::log(R) - 0.5 + r * r / (2.0 * R * R);
    }
    case Kind::Annulus: {
      const double a = d.support_lo, b = d.support_hi;
      if (r >= b) return std::log(r);
      const double D = b * b - a * a;
      if (r <= a) return (s2logs_minus_half(b) - s2logs_minus_half(a)) / D;
      const double F = (r * r - a * a) / D;
      return F * std::log(r) + (s2logs_minus_half(b) - s2logs_minus_half(r)) / D;
    }
    case Kind::Tabulated: {
      if (r >= d.s.back()) return std::log(r);
      if (r <= d.s.front()) return d.suffix.front();
      const auto it = std::upper_bound(d.s.begin(), d.s.end(), r);
      const std::size_t c = (it - d.s.begin()) - 1;
      const double F = d.F[c] + d.f[c] * (r - d.s[c]);
      return F * std::log(r) + d.f[c] * (xlogx_minus_x(d.s[c + 1]) - xlogx_minus_x(r)) + d.suffix[c + 1];
    }
    case Kind::Polar:
      break;
  }
  throw InvalidArgument("closed-form potential requested for a non-radial profile");
}

// Splits [lo, hi] at the nodes of `cuts` and at r, integrating each analytic
// piece with panel doubling.
template <class Fn>
double integrate_pieces(const std::vector<double>& cuts, double lo, double hi, double r, Fn&& fn,
                        double scale) {
  std::vector<double> edges{lo, hi};
  for (double c : cuts)
    if (c > lo && c < hi) edges.push_back(c);
  if (r > lo && r < hi) edges.push_back(r);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    total += integrate_panels(fn, edges[i], edges[i + 1], kQuadRtol, kQuadRtol * scale * 1e-2);
  }
  return total;
}

// Unit-mass radial potential by radial quadrature of log max(r, s) dF(s).
double unit_potential_quadrature_radial(const ProfileData& d, Complex z) {
  const double r = std::abs(z);
  const double lr = std::log(std::max(r, 1e-300));
  switch (d.kind) {
    case Kind::Circle: {
      // Angular trapezoid of log|z - R e^{i theta}|, doubling the node count.
      const double R = d.support_hi;
      auto avg = [&](int n) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += std::log(std::abs(z - std::polar(R, 2.0 * kPi * (j + 0.5) / n)));
        return s / n;
      };
      double prev = avg(64);
      for (int n = 128; n <= (1 << 20); n *= 2) {
        const double cur = avg(n);
        if (std::abs(cur - prev) <= kQuadRtol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
      }
      throw ConvergenceError("circle potential quadrature did not converge", std::abs(prev));
    }
    case Kind::Disk:
    case Kind::Annulus: {
      const double a = d.support_lo, b = d.support_hi;
      const double norm = 2.0 / (b * b - a * a);
      auto fn = [&](double s) { return norm * s * std::log(std::max(r, s)); };
      // mass beyond the support contributes log r per unit of remaining mass (none here)
      return integrate_pieces({}, a, b, r, fn, 1.0 + std::abs(lr));
    }
    case Kind::Tabulated: {
      auto fn = [&](double s) {
        if (s >= d.s.back() || s <= d.s.front()) return 0.0;
        const auto it = std::upper_bound(d.s.begin(), d.s.end(), s);
        const std::size_t c = (it - d.s.begin()) - 1;
        return d.f[c] * std::log(std::max(r, s));
      };
      return integrate_pieces(d.s, d.s.front(), d.s.back(), r, fn, 1.0 + std::abs(lr));
    }
    case Kind::Polar:
      break;
  }
  throw InvalidArgument("radial quadrature requested for a polar profile");
}

// Fourier coefficients of the unit-mass polar potential on the circle |z| = r:
// U(r e^{i phi}) = out[0].real() + sum_m Re(out[m] e^{i m phi}).
std::vector<Complex> polar_fourier(const ProfileData& d, double r) {
  const int stride = d.modes + 1;
  const std::size_t nodes = d.s.size();
  std::vector<Complex> out(stride, Complex{});
  auto coeff_at = [&](std::size_t cell, double s, int m) {
    const double a = d.s[cell], b = d.s[cell + 1];
    const double t = (s - a) / (b - a);
    return (1.0 - t) * d.coeff[cell * stride + m] + t * d.coeff[(cell + 1) * stride + m];
  };
  const GaussLegendreRule& rule = gauss_legendre(20);
  double scale = 1.0 + std::abs(std::log(std::max(r, 1e-300)));
  for (std::size_t cell = 0; cell + 1 < nodes; ++cell) {
    std::vector<double> edges{d.s[cell], d.s[cell + 1]};
    if (r > edges[0] && r < edges[1]) edges.insert(edges.begin() + 1, r);
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const double lo = edges[e], hi = edges[e + 1];
      auto estimate = [&](int panels) {
        std::vector<Complex> acc(stride, Complex{});
        const double h = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p) {
          const double mid = lo + (p + 0.5) * h;
          for (int i = 0; i < 20; ++i) {
            const double s = mid + 0.5 * h * rule.nodes[i];
            const double w = 0.5 * h * rule.weights[i] * s * 2.0 * kPi;
            const double big = std::max(r, s);
            const double rho = big > 0.0 ? std::min(r, s) / big : 0.0;
            acc[0] += w * coeff_at(cell, s, 0).real() * std::log(big);
            double rho_m = 1.0;
            for (int m = 1; m < stride; ++m) {
              rho_m *= rho;
              if (rho_m == 0.0) break;
              acc[m] -= w * rho_m / m * coeff_at(cell, s, m);
            }
          }
        }
        return acc;
      };
      auto prev = estimate(1);
      bool done = false;
      double change = 0.0;
      for (int panels = 2; panels <= 1024; panels *= 2) {
        auto cur = estimate(panels);
        change = 0.0;
        double mag = 0.0;
        for (int m = 0; m < stride; ++m) {
          change = std::max(change, std::abs(cur[m] - prev[m]));
          mag = std::max(mag, std::abs(cur[m]));
        }
        prev = std::move(cur);
        if (change <= kQuadRtol * std::max(mag, 1e-2 * scale)) {
          done = true;
          break;
        }
      }
      if (!done) throw ConvergenceError("polar potential quadrature did not converge", change);
      for (int m = 0; m < stride; ++m) out[m] += prev[m];
    }
  }
  // mass outside [s_0, s_n] is zero; nothing else to add
  return out;
}

double polar_potential(const ProfileData& d, Complex z) {
  const auto f = polar_fourier(d, std::abs(z));
  const double phi = std::arg(z);
  double u = f[0].real();
  for (std::size_t m = 1; m < f.size(); ++m) u += (f[m] * std::polar(1.0, m * phi)).real();
  return u;
}

void check_finite(Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw InvalidArgument("log_potential: non-finite argument");
}

}  // namespace

MeasureSpec::MeasureSpec(std::vector<Component> components) : components_(std::move(components)) {
  require(!components_.empty(), "at least one component is required");
  double total = 0.0;
  inner_radius_ = kInf;
  outer_radius_ = 0.0;
  for (const auto& c : components_) {
    require(std::isfinite(c.mass) && c.mass > 0.0 && c.mass <= 1.0 + kMassTol,
            "component masses must lie in (0, 1]");
    total += c.mass;
    auto d = prepare(c);
    if (d->kind == Kind::Polar) radial_ = false;
    inner_radius_ = std::min(inner_radius_, d->support_lo);
    outer_radius_ = std::max(outer_radius_, d->support_hi);
    switch (d->kind) {
      case Kind::Circle:
      case Kind::Disk:
        breakpoints_.push_back(d->support_hi);
        break;
      case Kind::Annulus:
        if (d->support_lo > 0.0) breakpoints_.push_back(d->support_lo);
        breakpoints_.push_back(d->support_hi);
        break;
      case Kind::Tabulated:
      case Kind::Polar:
        for (double s : d->s)
          if (s > 0.0) breakpoints_.push_back(s);
        break;
    }
    data_.push_back(std::move(d));
  }
  require(std::abs(total - 1.0) <= kMassTol, "component masses must sum to 1");
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

MeasureSpec MeasureSpec::uniform_circle(double radius) {
  return MeasureSpec({Component{1.0, UniformCircle{radius}}});
}

MeasureSpec MeasureSpec::uniform_disk(double radius) {
  return MeasureSpec({Component{1.0, UniformDisk{radius}}});
}

double MeasureSpec::mass_within(double r) const {
  double m = 0.0;
  for (const auto& d : data_) m += d->mass * unit_cdf(*d, r, false);
  return m;
}

double MeasureSpec::mass_within_open(double r) const {
  double m = 0.0;
  for (const auto& d : data_) m += d->mass * unit_cdf(*d, r, true);
  return m;
}

bool MeasureSpec::charge_free(double a, double b) const {
  for (const auto& d : data_) {
    if (unit_cdf(*d, b, true) - unit_cdf(*d, a, false) > 0.0) return false;
  }
  return true;
}

double log_potential(const MeasureSpec& measure, Complex z) {
  check_finite(z);
  const double r = std::abs(z);
  double u = 0.0;
  for (std::size_t i = 0; i < measure.components().size(); ++i) {
    const auto& d = measure.data(i);
    u += d.mass * (d.kind == Kind::Polar ? polar_potential(d, z) : unit_potential_closed(d, r));
  }
  return u;
}

double log_potential_quadrature(const MeasureSpec& measure, Complex z) {
  check_finite(z);
  double u = 0.0;
  for (std::size_t i = 0; i < measure.components().size(); ++i) {
    const auto& d = measure.data(i);
    u += d.mass * (d.kind == Kind::Polar ? polar_potential(d, z) : unit_potential_quadrature_radial(d, z));
  }
  return u;
}

PotentialField::PotentialField(MeasureSpec measure)
    : measure_(std::move(measure)),
      mode_(measure_.is_radial() ? Mode::ClosedFormRadial : Mode::Quadrature) {}

double PotentialField::operator()(Complex z) const { return log_potential(measure_, z); }

double PotentialField::radial(double r) const {
  if (!measure_.is_radial()) throw InvalidArgument("PotentialField::radial: measure is not radial");
  double u = 0.0;
  for (std::size_t i = 0; i < measure_.components().size(); ++i) {
    const auto& d = measure_.data(i);
    u += d.mass * unit_potential_closed(d, r);
  }
  return u;
}

void PotentialField::on_circle(double r, std::span<const double> phis, std::span<double> out) const {
  if (out.size() != phis.size()) throw InvalidArgument("PotentialField::on_circle: size mismatch");
  double base = 0.0;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < measure_.components().size(); ++i) {
    const auto& d = measure_.data(i);
    if (d.kind != Kind::Polar) {
      base += d.mass * unit_potential_closed(d, r);
      continue;
    }
    const auto f = polar_fourier(d, r);
    for (std::size_t j = 0; j < phis.size(); ++j) {
      double u = f[0].real();
      for (std::size_t m = 1; m < f.size(); ++m) u += (f[m] * std::polar(1.0, m * phis[j])).real();
      out[j] += d.mass * u;
    }
  }
  for (auto& v : out) v += base;
}

std::vector<double> HoleData::representative_charges(double kappa, std::span<const double> limits) const {
  if (limits.size() != masses.size())
    throw InvalidArgument("representative_charges: one limit per hole is required");
  std::vector<double> out(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) out[i] = class_representative(kappa * masses[i], limits[i]);
  return out;
}

std::vector<double> HoleData::reduced_charges(double kappa) const {
  std::vector<double> out(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) {
    const double x = kappa * masses[i];
    out[i] = x - std::floor(x);
  }
  return out;
}

HoleData hole_masses(const MeasureSpec& measure, const AnnularRegion& region) {
  if (!(region.inner >= 0.0) || !(region.outer > region.inner))
    throw InvalidArgument("hole_masses: region needs 0 <= inner < outer");
  if (!measure.charge_free(region.inner, region.outer))
    throw InvalidArgument("hole_masses: region overlaps the support of the measure");
  HoleData holes;
  if (region.inner > 0.0) {
    holes.anchors.push_back(Complex{0.0, 0.0});
    holes.masses.push_back(std::min(1.0, measure.mass_within(region.inner)));
  }
  return holes;
}

double class_representative(double x, double limit) {
  return x - std::floor(x - limit + 0.5);
}

}  // namespace jellium
