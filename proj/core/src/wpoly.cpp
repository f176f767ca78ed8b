#include "jellium/wpoly.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "jellium/error.hpp"
#include "jellium/parallel.hpp"

namespace jellium {
namespace {

constexpr double kGramTol = 1e-8;

// exp(i * n * theta) from the unit phase, n possibly negative.
Complex unit_power(Complex unit, int n) {
  Complex out{1.0, 0.0};
  const Complex base = n >= 0 ? unit : std::conj(unit);
  for (int i = 0; i < std::abs(n); ++i) out *= base;
  return out;
}

struct RadialNode {
  double r;
  double weight;  // includes the Jacobian r dr
};

std::vector<RadialNode> radial_nodes(const MeasureSpec& measure, const BasisParams& params,
                                     const GeneralQuadrature& quad) {
  const double R = measure.outer_radius();
  const GaussLegendreRule& rule = gauss_legendre(quad.order);
  std::vector<double> edges{0.0, R};
  for (double b : measure.breakpoints())
    if (b > 0.0 && b < R) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<RadialNode> out;
  const double panel_width = R / (quad.panel_density * std::sqrt(params.kappa));
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double a = edges[e], b = edges[e + 1];
    const int panels = std::max(2, static_cast<int>(std::ceil((b - a) / panel_width)));
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * h;
      for (int i = 0; i < quad.order; ++i) {
        const double r = mid + 0.5 * h * rule.nodes[i];
        out.push_back({r, 0.5 * h * rule.weights[i] * r});
      }
    }
  }
  // tail r = R / t, t in (0, 1], graded panels toward t = 0
  for (int j = 0; j <= quad.tail_panels; ++j) {
    const double hi = std::ldexp(1.0, -j);
    const double lo = j == quad.tail_panels ? 0.0 : std::ldexp(1.0, -(j + 1));
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int i = 0; i < quad.order; ++i) {
      const double t = mid + half * rule.nodes[i];
      const double r = R / t;
      out.push_back({r, half * rule.weights[i] * R * R / (t * t * t)});
    }
  }
  return out;
}

}  // namespace

void BasisParams::validate() const {
  if (N < 1) throw InvalidArgument("BasisParams: N must be >= 1");
  if (!std::isfinite(kappa) || !(kappa > N)) throw InvalidArgument("BasisParams: kappa must exceed N");
  if (kappa > N + 1.0) throw InvalidArgument("BasisParams: kappa must not exceed N + 1");
  if (!std::isfinite(scale) || scale < 0.0) throw InvalidArgument("BasisParams: scale must be >= 0");
  if (gauge_power < 0) throw InvalidArgument("BasisParams: gauge_power must be >= 0");
}

double kappa_rule(int N, double chi) {
  if (!(chi > 0.0 && chi <= 1.0)) throw InvalidArgument("kappa_rule: chi must lie in (0, 1]");
  return N + chi;
}

std::vector<double> radial_log_norms(const MeasureSpec& measure, const BasisParams& params) {
  params.validate();
  if (!measure.is_radial()) throw InvalidArgument("radial_log_norms: measure is not radial");
  const RadialWeight weight(measure, params.kappa);
  const int m = params.gauge_power;
  std::vector<double> out(params.N);
  for (int k = 0; k < params.N; ++k) {
    // |z^(k-m)|^2 |z|^(2m) r dr
    const double p = (2.0 * (k - m) + 1.0) + 2.0 * m;
    if (!(p - 2.0 * params.kappa < -1.0)) throw InvalidArgument("radial_log_norms: divergent tail");
    out[k] = std::log(2.0 * kPi) + weight.log_integral(p, 0.0, kInf);
  }
  return out;
}

std::vector<double> radial_norms(const MeasureSpec& measure, const BasisParams& params) {
  auto out = radial_log_norms(measure, params);
  for (auto& v : out) v = std::exp(v);
  return out;
}

WeightedBasis WeightedBasis::build(const MeasureSpec& measure, const BasisParams& params, BasisPath path,
                                   const GeneralQuadrature& quad_in) {
  params.validate();
  WeightedBasis basis;
  basis.measure_ = std::make_shared<const MeasureSpec>(measure);
  basis.params_ = params;
  basis.scale_ = params.scale > 0.0 ? params.scale : measure.outer_radius();
  const bool radial = path == BasisPath::Radial || (path == BasisPath::Auto && measure.is_radial());
  if (radial) {
    if (!measure.is_radial()) throw InvalidArgument("WeightedBasis: radial path needs a radial measure");
    basis.radial_path_ = true;
    basis.log_norms_ = radial_log_norms(measure, params);
    basis.gram_residual_ = 0.0;
    return basis;
  }

  basis.radial_path_ = false;
  GeneralQuadrature quad = quad_in;
  const int N = params.N;
  const int m = params.gauge_power;
  if (quad.angular_nodes <= 0) quad.angular_nodes = 2 * N + 64;
  const int M = quad.angular_nodes;
  const PotentialField potential(measure);
  const auto rnodes = radial_nodes(measure, params, quad);
  const std::size_t rows = rnodes.size() * M;
  const double s = basis.scale_;

  std::vector<double> phis(M), u(M);
  for (int j = 0; j < M; ++j) phis[j] = 2.0 * kPi * j / M;

  // log-magnitudes first, then one global shift keeps every entry finite
  Eigen::MatrixXd logmag(rows, N);
  basis.nodes_.resize(rows);
  basis.node_weights_.resize(rows);
  double shift = -kInf;
  for (std::size_t a = 0; a < rnodes.size(); ++a) {
    const double r = rnodes[a].r;
    potential.on_circle(r, phis, u);
    const double lr = std::log(r / s);
    for (int j = 0; j < M; ++j) {
      const std::size_t row = a * M + j;
      const double w = rnodes[a].weight * 2.0 * kPi / M;
      basis.nodes_[row] = std::polar(r, phis[j]);
      basis.node_weights_[row] = w;
      const double base = 0.5 * std::log(w) - params.kappa * u[j];
      for (int i = 0; i < N; ++i) {
        const double v = base + (i - m) * lr + m * lr;
        logmag(row, i) = v;
        shift = std::max(shift, v);
      }
    }
  }
  Eigen::MatrixXcd A(rows, N);
  for (std::size_t row = 0; row < rows; ++row) {
    const Complex unit = std::polar(1.0, phis[row % M]);
    Complex phase = unit_power(unit, -m);
    for (int i = 0; i < N; ++i) {
      A(row, i) = std::exp(logmag(row, i) - shift) * phase;
      phase *= unit;
    }
  }
  logmag.resize(0, 0);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
  if (qr.rank() < N) {
    throw ConditioningError("WeightedBasis: weighted monomial samples are rank deficient; "
                            "use a smaller N or more quadrature nodes",
                            kInf);
  }
  const Eigen::MatrixXcd R = qr.matrixR().topLeftCorner(N, N).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(N, N));
  const Eigen::MatrixXcd C = qr.colsPermutation() * Rinv;
  const Eigen::MatrixXcd Q = A * C;
  const Eigen::MatrixXcd G = Q.adjoint() * Q;
  basis.gram_residual_ = (G - Eigen::MatrixXcd::Identity(N, N)).cwiseAbs().maxCoeff();
  if (!(basis.gram_residual_ <= kGramTol)) {
    throw ConditioningError("WeightedBasis: Gram residual " + std::to_string(basis.gram_residual_) +
                                " exceeds 1e-8; use a smaller N or more quadrature nodes",
                            basis.gram_residual_);
  }
  basis.coeff_.assign(C.data(), C.data() + static_cast<std::size_t>(N) * N);
  basis.log_shift_ = shift;
  return basis;
}

KernelEvaluator::KernelEvaluator(WeightedBasis basis)
    : basis_(std::move(basis)), potential_(basis_.measure()) {}

double KernelEvaluator::features(Complex z, std::span<Complex> out) const {
  const int N = basis_.params().N;
  const int m = basis_.params().gauge_power;
  const double kappa = basis_.params().kappa;
  if (out.size() != static_cast<std::size_t>(N)) throw InvalidArgument("features: buffer size must be N");
  const double r = std::abs(z);
  const double u = basis_.is_radial_path() ? potential_.radial(r) : potential_(z);
  const Complex unit = r > 0.0 ? z / r : Complex{1.0, 0.0};
  thread_local std::vector<double> logmag;
  logmag.resize(N);

  if (basis_.is_radial_path()) {
    const double lr = std::log(r);
    const auto& ln = basis_.log_norms();
    double c = -kInf;
    for (int k = 0; k < N; ++k) {
      double v;
      if (r == 0.0) v = k == 0 ? 0.0 : -kInf;
      else v = (k - m) * lr + m * lr;
      v += -kappa * u - 0.5 * ln[k];
      logmag[k] = v;
      c = std::max(c, v);
    }
    Complex phase = unit_power(unit, -m);
    for (int k = 0; k < N; ++k) {
      out[k] = std::exp(logmag[k] - c) * phase;
      phase *= unit;
    }
    return c;
  }

  const double lr = std::log(r / basis_.scale());
  double c = -kInf;
  for (int i = 0; i < N; ++i) {
    double v;
    if (r == 0.0) v = i == 0 ? 0.0 : -kInf;
    else v = (i - m) * lr + m * lr;
    v += -kappa * u - basis_.log_shift();
    logmag[i] = v;
    c = std::max(c, v);
  }
  thread_local std::vector<Complex> psi;
  psi.resize(N);
  Complex phase = unit_power(unit, -m);
  for (int i = 0; i < N; ++i) {
    psi[i] = std::exp(logmag[i] - c) * phase;
    phase *= unit;
  }
  const auto& C = basis_.coefficients();
  for (int j = 0; j < N; ++j) {
    Complex acc{};
    const Complex* col = C.data() + static_cast<std::size_t>(j) * N;
    for (int i = 0; i < N; ++i) acc += psi[i] * col[i];
    out[j] = acc;
  }
  return c;
}

Complex KernelEvaluator::kernel(Complex z, Complex w) const {
  const int N = this->N();
  std::vector<Complex> vz(N), vw(N);
  const double cz = features(z, vz);
  const double cw = features(w, vw);
  Complex sum{};
  for (int k = 0; k < N; ++k) sum += vz[k] * std::conj(vw[k]);
  return sum * std::exp(cz + cw);
}

double KernelEvaluator::log_diag(Complex z) const {
  std::vector<Complex> v(N());
  const double c = features(z, v);
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return 2.0 * c + std::log(s);
}

double KernelEvaluator::diag(Complex z) const { return std::exp(log_diag(z)); }

std::vector<double> KernelEvaluator::diag_grid(std::span<const Complex> grid, unsigned threads) const {
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) { out[i] = diag(grid[i]); });
  return out;
}

std::vector<double> kernel_diag_grid(const KernelEvaluator& kernel, std::span<const Complex> grid,
                                     unsigned threads) {
  return kernel.diag_grid(grid, threads);
}

Complex kernel_eval(const KernelEvaluator& kernel, Complex z, Complex w) { return kernel.kernel(z, w); }

}  // namespace jellium
