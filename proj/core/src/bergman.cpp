#include "jellium/bergman.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "jellium/error.hpp"

namespace jellium {
namespace {

void require_finite(Complex z, const char* who) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw InvalidArgument(std::string(who) + ": non-finite argument");
}

// Smooth step, 1 at t <= 0 and 0 at t >= 1, all derivatives vanish at both ends.
double smooth_step(double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double g1 = std::exp(-1.0 / (1.0 - t));
  const double g0 = std::exp(-1.0 / t);
  return g1 / (g1 + g0);
}

struct Node {
  Complex z;
  double weight;
};

}  // namespace

Complex disk_kernel(Complex z, Complex w) {
  require_finite(z, "disk_kernel");
  require_finite(w, "disk_kernel");
  if (!(std::abs(z) < 1.0 && std::abs(w) < 1.0)) throw InvalidArgument("disk_kernel: arguments must satisfy |z| < 1");
  const Complex d = 1.0 - z * std::conj(w);
  return 1.0 / (kPi * d * d);
}

Complex exterior_disk_kernel(Complex z, Complex w) {
  require_finite(z, "exterior_disk_kernel");
  require_finite(w, "exterior_disk_kernel");
  if (!(std::abs(z) > 1.0 && std::abs(w) > 1.0))
    throw InvalidArgument("exterior_disk_kernel: arguments must satisfy |z| > 1");
  const Complex d = z * std::conj(w) - 1.0;
  return 1.0 / (kPi * d * d);
}

Complex szego_disk(Complex z, Complex w) {
  require_finite(z, "szego_disk");
  require_finite(w, "szego_disk");
  if (!(std::abs(z) < 1.0 && std::abs(w) < 1.0)) throw InvalidArgument("szego_disk: arguments must satisfy |z| < 1");
  return 1.0 / (2.0 * kPi * (1.0 - z * std::conj(w)));
}

double annulus_weighted_diag(double a, double b, double Q, Complex z, const AnnulusSeriesOptions& opt) {
  require_finite(z, "annulus_weighted_diag");
  if (!(a >= 0.0) || !(b > a) || (a == 0.0 && std::isinf(b)) || !std::isfinite(Q))
    throw InvalidArgument("annulus_weighted_diag: need 0 <= a < b <= inf, not both a = 0 and b = inf");
  const double r = std::abs(z);
  if (!(r > a && r < b)) throw InvalidArgument("annulus_weighted_diag: |z| must lie in (a, b)");
  if (opt.reduce_charge) Q -= std::floor(Q);
  const double lr = std::log(r);
  const double log2pi = std::log(2.0 * kPi);

  // 0: finite term, 1: integral diverges at infinity, 2: diverges at 0
  auto term = [&](long n, double& out) {
    const double p = 2.0 * n + 2.0 - 2.0 * Q;
    if (std::isinf(b) && p >= 0.0) return 1;
    if (a == 0.0 && p <= 0.0) return 2;
    out = std::exp((2.0 * n - 2.0 * Q) * lr - log2pi - log_power_integral(p - 1.0, a, b));
    return 0;
  };
  // Successive ratios decrease (log-convexity of the moments), so the
  // geometric bound on the remainder is rigorous once the ratio is below 1.
  double sum = 0.0;
  for (int dir : {+1, -1}) {
    double prev = 0.0;
    long count = 0;
    for (long n = dir > 0 ? 0 : -1;; n += dir) {
      if (++count > opt.max_terms)
        throw ConvergenceError("annulus_weighted_diag: series did not converge; |z| too close to the boundary",
                               prev / std::max(sum, 1e-300));
      double t = 0.0;
      const int s = term(n, t);
      if ((dir > 0 && s == 1) || (dir < 0 && s == 2)) break;
      if (s != 0) continue;
      sum += t;
      if (prev > 0.0) {
        const double q = t / prev;
        if (q < 1.0 && t * q / (1.0 - q) <= opt.tol * sum) break;
      }
      prev = t;
    }
  }
  return sum;
}

double annulus_weighted_offdiag_modulus(double a, double b, double Q, Complex z, Complex w,
                                        const AnnulusSeriesOptions& opt) {
  require_finite(z, "annulus_weighted_offdiag_modulus");
  require_finite(w, "annulus_weighted_offdiag_modulus");
  if (!(a >= 0.0) || !(b > a) || (a == 0.0 && std::isinf(b)) || !std::isfinite(Q))
    throw InvalidArgument("annulus_weighted_offdiag_modulus: need 0 <= a < b <= inf, not both a = 0 and b = inf");
  const double rz = std::abs(z), rw = std::abs(w);
  if (!(rz > a && rz < b && rw > a && rw < b))
    throw InvalidArgument("annulus_weighted_offdiag_modulus: points must lie in the annulus");
  if (opt.reduce_charge) Q -= std::floor(Q);
  const Complex x = z * std::conj(w);
  const double lx = std::log(rz * rw);
  const Complex unit = x / std::abs(x);
  const double log2pi = std::log(2.0 * kPi);
  Complex sum{};
  double mag = 0.0;  // sum of |terms|, the scale for the stopping rule
  for (int dir : {+1, -1}) {
    double prev = 0.0;
    Complex phase = dir > 0 ? Complex(1.0, 0.0) : std::conj(unit);
    const Complex step = dir > 0 ? unit : std::conj(unit);
    long count = 0;
    for (long n = dir > 0 ? 0 : -1;; n += dir, phase *= step) {
      if (++count > opt.max_terms)
        throw ConvergenceError("annulus_weighted_offdiag_modulus: series did not converge", prev);
      const double p = 2.0 * n + 2.0 - 2.0 * Q;
      if (std::isinf(b) && p >= 0.0) {
        if (dir > 0) break;
        continue;
      }
      if (a == 0.0 && p <= 0.0) {
        if (dir < 0) break;
        continue;
      }
      const double t = std::exp(n * lx - Q * lx - log2pi - log_power_integral(p - 1.0, a, b));
      sum += t * phase;
      mag += t;
      if (prev > 0.0) {
        const double q = t / prev;
        if (q < 1.0 && t * q / (1.0 - q) <= opt.tol * 1e-6 * mag) break;
      }
      prev = t;
    }
  }
  return std::abs(sum);
}

bool RationalDomain::contains(Complex z) const noexcept {
  if (outer && !(std::abs(z - outer->center) < outer->radius)) return false;
  for (const auto& h : holes)
    if (!(std::abs(z - h.center) > h.radius)) return false;
  return true;
}

RationalBergman::RationalBergman(RationalDomain domain, std::vector<double> Q, const RationalOptions& opt)
    : domain_(std::move(domain)), Q_(std::move(Q)) {
  auto& D = domain_;
  const std::size_t l = D.holes.size();
  if (opt.family_size < 1) throw InvalidArgument("RationalBergman: family_size must be >= 1");
  if (Q_.size() != l) throw InvalidArgument("RationalBergman: need one charge per hole");
  if (!D.outer && l == 0) throw InvalidArgument("RationalBergman: the plane has no square integrable holomorphic functions");
  if (D.outer && !(D.outer->radius > 0.0)) throw InvalidArgument("RationalBergman: outer radius must be positive");
  if (D.anchors.empty())
    for (const auto& h : D.holes) D.anchors.push_back(h.center);
  if (D.anchors.size() != l) throw InvalidArgument("RationalBergman: need one anchor per hole");
  for (std::size_t i = 0; i < l; ++i) {
    const auto& h = D.holes[i];
    if (!(h.radius > 0.0)) throw InvalidArgument("RationalBergman: hole radii must be positive");
    if (!(std::abs(D.anchors[i] - h.center) < h.radius))
      throw InvalidArgument("RationalBergman: anchor must lie strictly inside its hole");
    for (std::size_t j = 0; j < i; ++j)
      if (!(std::abs(h.center - D.holes[j].center) > h.radius + D.holes[j].radius))
        throw InvalidArgument("RationalBergman: holes must be disjoint");
    if (D.outer && !(std::abs(h.center - D.outer->center) + h.radius < D.outer->radius))
      throw InvalidArgument("RationalBergman: holes must lie inside the outer circle");
  }
  for (auto& q : Q_) {
    if (!std::isfinite(q)) throw InvalidArgument("RationalBergman: charges must be finite");
    q -= std::floor(q);
  }
  double sumQ = 0.0;
  for (double q : Q_) sumQ += q;

  // scaled family
  if (D.outer) {
    center_ = D.outer->center;
    scale_ = D.outer->radius;
  } else {
    Complex c{};
    for (const auto& h : D.holes) c += h.center;
    center_ = c / static_cast<double>(l);
    scale_ = 0.0;
    for (const auto& h : D.holes) scale_ = std::max(scale_, std::abs(h.center - center_) + h.radius);
  }
  int min_order_inf = 1 << 30;  // smallest decay order at infinity in the family
  for (int k = 0; static_cast<int>(family_.size()) < opt.family_size; ++k) {
    if (k > 100000) throw InvalidArgument("RationalBergman: cannot build the requested family");
    if (D.outer || k < sumQ - 1.0) {
      family_.push_back({-1, k, -1});
      min_order_inf = std::min(min_order_inf, -k);
    }
    for (std::size_t i = 0; i < l && static_cast<int>(family_.size()) < opt.family_size; ++i) {
      const int p = k + 1;
      if (D.outer || p + sumQ > 1.0) {
        family_.push_back({static_cast<int>(i), p, -1});
        min_order_inf = std::min(min_order_inf, p);
      } else if (p == 1 && i > 0) {
        family_.push_back({static_cast<int>(i), 1, 0});
        min_order_inf = std::min(min_order_inf, 2);
      }
    }
  }
  const int F = static_cast<int>(family_.size());

  // ---- quadrature nodes
  std::vector<Node> nodes;
  const bool concentric =
      l <= 1 && (!D.outer || l == 0 || std::abs(D.holes[0].center - D.outer->center) <= 1e-14 * D.outer->radius);
  const bool polar = opt.quadrature == RationalOptions::Quadrature::Polar ||
                     (opt.quadrature == RationalOptions::Quadrature::Auto && concentric);
  // concentric rings only see frequencies below 2F; collars also resolve
  // the other circles' poles
  const int M = opt.angular_nodes > 0 ? opt.angular_nodes : polar ? std::max(64, 2 * F + 16) : std::max(128, 2 * F + 64);
  const GaussLegendreRule& rule = gauss_legendre(opt.order);
  auto radial_panels = [&](double lo, double hi, int panels, auto&& emit) {
    const double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = lo + (p + 0.5) * h;
      for (int i = 0; i < opt.order; ++i) emit(mid + 0.5 * h * rule.nodes[i], 0.5 * h * rule.weights[i]);
    }
  };
  auto ring = [&](Complex c, double rho, double w) {
    for (int j = 0; j < M; ++j)
      nodes.push_back({c + std::polar(rho, 2.0 * kPi * (j + 0.5) / M), w * rho * 2.0 * kPi / M});
  };
  // t = R / rho on (0, 1], graded toward 0; the decay order fixes the depth
  auto infinity_patch = [&](Complex c, double R) {
    const double decay = 2.0 * (min_order_inf + sumQ - 1.0);  // exponent of t in |f|^2 w times t^-3 Jacobian, plus 1
    const int depth = std::clamp(static_cast<int>(std::ceil(18.0 * std::log2(10.0) / std::max(decay, 1e-3))), 8, 200);
    for (int j = 0; j <= depth; ++j) {
      const double hi = std::ldexp(1.0, -j);
      const double lo = j == depth ? 0.0 : std::ldexp(1.0, -(j + 1));
      radial_panels(lo, hi, 1, [&](double t, double w) { ring(c, R / t, w * R / (t * t)); });
    }
  };

  if (polar) {
    if (!concentric) throw InvalidArgument("RationalBergman: polar quadrature needs a concentric domain");
    const Complex c = D.outer ? D.outer->center : D.holes[0].center;
    const double lo = l ? D.holes[0].radius : 0.0;
    if (D.outer) {
      radial_panels(lo, D.outer->radius, opt.radial_panels, [&](double rho, double w) { ring(c, rho, w); });
    } else {
      infinity_patch(c, lo);
    }
  } else {
    // partition of unity: a collar along each circle, smooth bulk remainder
    std::vector<double> width(l);
    double outer_width = kInf;
    for (std::size_t i = 0; i < l; ++i) {
      double gap = kInf;
      for (std::size_t j = 0; j < l; ++j)
        if (j != i)
          gap = std::min(gap, std::abs(D.holes[i].center - D.holes[j].center) - D.holes[i].radius - D.holes[j].radius);
      if (D.outer) {
        const double g = D.outer->radius - std::abs(D.holes[i].center - D.outer->center) - D.holes[i].radius;
        gap = std::min(gap, g);
        outer_width = std::min(outer_width, 0.45 * g);
      }
      width[i] = std::min(0.45 * gap, D.holes[i].radius);
    }
    if (D.outer && l == 0) outer_width = 0.5 * D.outer->radius;
    double infinity_inner = 0.0, infinity_width = 0.0;
    if (!D.outer) {
      for (std::size_t i = 0; i < l; ++i)
        infinity_inner = std::max(infinity_inner, std::abs(D.holes[i].center - center_) + D.holes[i].radius + width[i]);
      infinity_inner *= 1.05;
      infinity_width = 0.5 * infinity_inner;
    }
    double wmin = D.outer ? outer_width : infinity_width;
    for (double w : width) wmin = std::min(wmin, w);

    for (std::size_t i = 0; i < l; ++i) {
      const double r0 = D.holes[i].radius, w = width[i];
      radial_panels(r0, r0 + w, opt.radial_panels, [&](double rho, double gw) {
        ring(D.holes[i].center, rho, gw * smooth_step((rho - r0) / w));
      });
    }
    if (D.outer) {
      const double R0 = D.outer->radius, w = outer_width;
      radial_panels(R0 - w, R0, opt.radial_panels, [&](double rho, double gw) {
        ring(D.outer->center, rho, gw * smooth_step((R0 - rho) / w));
      });
    } else {
      const double R1 = infinity_inner, w = infinity_width;
      radial_panels(R1, R1 + w, opt.radial_panels, [&](double rho, double gw) {
        ring(center_, rho, gw * smooth_step((R1 + w - rho) / w));
      });
      infinity_patch(center_, R1 + w);
    }
    auto bulk_weight = [&](Complex z) {
      double chi = 0.0;
      for (std::size_t i = 0; i < l; ++i) {
        const double rho = std::abs(z - D.holes[i].center);
        if (rho <= D.holes[i].radius) return 0.0;
        chi += smooth_step((rho - D.holes[i].radius) / width[i]);
      }
      if (D.outer) {
        const double rho = std::abs(z - D.outer->center);
        if (rho >= D.outer->radius) return 0.0;
        chi += smooth_step((D.outer->radius - rho) / outer_width);
      } else {
        const double rho = std::abs(z - center_);
        if (rho >= infinity_inner + infinity_width) return 0.0;
        chi += smooth_step((infinity_inner + infinity_width - rho) / infinity_width);
      }
      return std::max(0.0, 1.0 - chi);
    };
    const double h = opt.bulk_step > 0.0 ? opt.bulk_step : wmin / 20.0;
    const Complex c = D.outer ? D.outer->center : center_;
    const double extent = D.outer ? D.outer->radius : infinity_inner + infinity_width;
    const long n = static_cast<long>(std::ceil(extent / h));
    for (long ix = -n; ix < n; ++ix)
      for (long iy = -n; iy < n; ++iy) {
        const Complex z = c + Complex((ix + 0.5) * h, (iy + 0.5) * h);
        const double beta = bulk_weight(z);
        if (beta > 0.0) nodes.push_back({z, beta * h * h});
      }
  }
  node_count_ = nodes.size();

  Eigen::MatrixXcd A(nodes.size(), F);
  for (std::size_t row = 0; row < nodes.size(); ++row) {
    const double s = std::exp(0.5 * (std::log(nodes[row].weight) + log_weight(nodes[row].z)));
    for (int j = 0; j < F; ++j) A(row, j) = s * member(family_[j], nodes[row].z);
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
  const Eigen::MatrixXcd R = qr.matrixQR().topLeftCorner(F, F).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd C = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(F, F));
  const Eigen::MatrixXcd Qm = A * C;
  const Eigen::MatrixXd E = ((Qm.adjoint() * Qm) - Eigen::MatrixXcd::Identity(F, F)).cwiseAbs();
  gram_residual_ = E.allFinite() ? E.maxCoeff() : kInf;
  if (!(gram_residual_ <= opt.gram_tol)) {
    int ok = 0;
    while (ok < F && E.topLeftCorner(ok + 1, ok + 1).allFinite() && E.topLeftCorner(ok + 1, ok + 1).maxCoeff() <= opt.gram_tol)
      ++ok;
    throw ConditioningError("RationalBergman: Gram residual " + std::to_string(gram_residual_) +
                                " exceeds tolerance; achieved family size " + std::to_string(ok) + " of " +
                                std::to_string(F),
                            gram_residual_);
  }
  coeff_.assign(C.data(), C.data() + static_cast<std::size_t>(F) * F);
}

Complex RationalBergman::member(const Member& m, Complex z) const {
  if (m.hole < 0) return std::pow((z - center_) / scale_, m.power);
  auto pole = [&](int i) {
    const double rho = domain_.holes[i].radius - std::abs(domain_.anchors[i] - domain_.holes[i].center);
    return rho / (z - domain_.anchors[i]);
  };
  if (m.partner >= 0) return pole(m.hole) - pole(m.partner);
  return std::pow(pole(m.hole), m.power);
}

double RationalBergman::log_weight(Complex z) const {
  double s = 0.0;
  for (std::size_t i = 0; i < Q_.size(); ++i)
    if (Q_[i] != 0.0) s -= 2.0 * Q_[i] * std::log(std::abs(z - domain_.anchors[i]));
  return s;
}

std::vector<double> RationalBergman::diag_partials(Complex z) const {
  require_finite(z, "rational_bergman");
  if (!domain_.contains(z)) throw InvalidArgument("rational_bergman: z must lie in the domain");
  const int F = family_size();
  std::vector<Complex> f(F);
  for (int i = 0; i < F; ++i) f[i] = member(family_[i], z);
  const double w = std::exp(log_weight(z));
  std::vector<double> out(F);
  double acc = 0.0;
  for (int j = 0; j < F; ++j) {
    Complex q{};
    const Complex* col = coeff_.data() + static_cast<std::size_t>(j) * F;
    for (int i = 0; i <= j; ++i) q += f[i] * col[i];
    acc += std::norm(q) * w;
    out[j] = acc;
  }
  return out;
}

double RationalBergman::diag(Complex z) const { return diag_partials(z).back(); }

double rational_bergman(const RationalDomain& domain, const std::vector<double>& Q, Complex z,
                        const RationalOptions& opt) {
  return RationalBergman(domain, Q, opt).diag(z);
}

double gaf_zero_intensity(const std::function<double(Complex)>& diag, Complex z, double h) {
  require_finite(z, "gaf_zero_intensity");
  if (!(h > 0.0)) throw InvalidArgument("gaf_zero_intensity: step must be positive");
  auto logd = [&](Complex p) {
    const double v = diag(p);
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("gaf_zero_intensity: diagonal must be positive");
    return std::log(v);
  };
  const double f0 = logd(z);
  auto laplacian = [&](double s) {
    return (logd(z + s) + logd(z - s) + logd(z + Complex(0, s)) + logd(z - Complex(0, s)) - 4.0 * f0) / (s * s);
  };
  const double L1 = laplacian(h), L2 = laplacian(0.5 * h);
  return (L2 + (L2 - L1) / 3.0) / (4.0 * kPi);
}

BergmanOracle::BergmanOracle(Domain domain, std::vector<double> Q, double tol, const RationalOptions& rational)
    : domain_(std::move(domain)), Q_(std::move(Q)), tol_(tol) {
  if (!(tol > 0.0)) throw InvalidArgument("BergmanOracle: tolerance must be positive");
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Disk>) {
          if (!(d.radius > 0.0)) throw InvalidArgument("BergmanOracle: radius must be positive");
          if (!Q_.empty()) throw InvalidArgument("BergmanOracle: a disk has no holes");
        } else if constexpr (std::is_same_v<T, ExteriorDisk>) {
          if (!(d.radius > 0.0)) throw InvalidArgument("BergmanOracle: radius must be positive");
          if (Q_.size() > 1) throw InvalidArgument("BergmanOracle: the exterior disk has one hole");
        } else if constexpr (std::is_same_v<T, Annulus>) {
          if (!(d.inner > 0.0 && d.outer > d.inner)) throw InvalidArgument("BergmanOracle: need 0 < a < b");
          if (Q_.size() > 1) throw InvalidArgument("BergmanOracle: the annulus has one hole");
        } else {
          rational_ = std::make_shared<const RationalBergman>(d, Q_, rational);
        }
      },
      domain_);
  for (auto& q : Q_) q -= std::floor(q);
}

bool BergmanOracle::contains(Complex z) const {
  const double r = std::abs(z);
  return std::visit(
      [&](const auto& d) -> bool {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Disk>) return r < d.radius;
        else if constexpr (std::is_same_v<T, ExteriorDisk>) return r > d.radius;
        else if constexpr (std::is_same_v<T, Annulus>) return r > d.inner && r < d.outer;
        else return d.contains(z);
      },
      domain_);
}

double BergmanOracle::diag(Complex z) const {
  const double q = Q_.empty() ? 0.0 : Q_[0];
  AnnulusSeriesOptions opt;
  opt.tol = tol_;
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return disk_kernel(z / d.radius, z / d.radius).real() / (d.radius * d.radius);
        } else if constexpr (std::is_same_v<T, ExteriorDisk>) {
          if (q == 0.0) return exterior_disk_kernel(z / d.radius, z / d.radius).real() / (d.radius * d.radius);
          return annulus_weighted_diag(d.radius, kInf, q, z, opt);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return annulus_weighted_diag(d.inner, d.outer, q, z, opt);
        } else {
          return rational_->diag(z);
        }
      },
      domain_);
}

Complex BergmanOracle::kernel(Complex z, Complex w) const {
  if (const auto* d = std::get_if<Disk>(&domain_))
    return disk_kernel(z / d->radius, w / d->radius) / (d->radius * d->radius);
  if (const auto* d = std::get_if<ExteriorDisk>(&domain_)) {
    if (!Q_.empty() && Q_[0] != 0.0) throw InvalidArgument("BergmanOracle: weighted off-diagonal values are not available");
    return exterior_disk_kernel(z / d->radius, w / d->radius) / (d->radius * d->radius);
  }
  throw InvalidArgument("BergmanOracle: off-diagonal values are available for disks and exterior disks only");
}

}  // namespace jellium
