#include "jellium/sampler.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "jellium/error.hpp"

namespace jellium {
namespace {

constexpr long kMaxProposals = 50'000'000;

double log_max1(double r) { return r > 1.0 ? std::log(r) : 0.0; }

// <u, v> with conjugation on the left
Complex dot(const Complex* u, const Complex* v, int n) {
  Complex s{};
  for (int k = 0; k < n; ++k) s += std::conj(u[k]) * v[k];
  return s;
}

double norm2(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return s;
}

// Parlett-Reinsch balancing with radix 2, so the scaling is exact.
void balance(Eigen::MatrixXcd& A) {
  const int n = static_cast<int>(A.rows());
  auto l1 = [](Complex z) { return std::abs(z.real()) + std::abs(z.imag()); };
  bool done = false;
  for (int sweep = 0; !done && sweep < 100; ++sweep) {
    done = true;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) {
          c += l1(A(j, i));
          r += l1(A(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / 2.0;
      while (c < g) {
        f *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c > g) {
        f /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
}

}  // namespace

const char* model_name(Model m) noexcept {
  switch (m) {
    case Model::Gas: return "gas";
    case Model::Zeros: return "zeros";
    case Model::Bruteforce: return "bruteforce";
  }
  return "gas";
}

double joint_density_log(const PotentialField& potential, double kappa, std::span<const Complex> points) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d = std::abs(points[i] - points[j]);
      if (d == 0.0) return -kInf;
      s += 2.0 * std::log(d);
    }
    s -= 2.0 * kappa * potential(points[i]);
  }
  return s;
}

double joint_density_log(const MeasureSpec& measure, double kappa, std::span<const Complex> points) {
  return joint_density_log(PotentialField(measure), kappa, points);
}

// ---- brute force

BruteforceSampler::BruteforceSampler(const MeasureSpec& measure, double kappa, int N)
    : potential_(measure), kappa_(kappa), N_(N) {
  if (N < 1 || N > 3) throw InvalidArgument("bruteforce_sample: N must lie in 1..3");
  if (!measure.is_radial()) throw InvalidArgument("bruteforce_sample: measure must be radial");
  BasisParams{N, kappa}.validate();
  auto weight = std::make_shared<const RadialWeight>(measure, kappa, 2.0 * (N - 1));
  law_ = std::make_unique<RadialLaw>(weight, 1.0);
  log_bound_ = 0.5 * N * (N - 1) * std::log(4.0);
}

PointSample BruteforceSampler::sample(RngStream& rng) const {
  PointSample out;
  out.model = Model::Bruteforce;
  out.N = N_;
  out.seed = rng.seed();
  out.replica = rng.replica();
  std::vector<Complex> z(N_);
  for (long attempt = 0; attempt < kMaxProposals; ++attempt) {
    for (auto& p : z) {
      const double r = law_->quantile(rng.uniform_open());
      p = std::polar(r, 2.0 * kPi * rng.uniform());
    }
    double log_ratio = -log_bound_;
    for (int i = 0; i < N_; ++i) {
      log_ratio -= 2.0 * (N_ - 1) * log_max1(std::abs(z[i]));
      for (int j = 0; j < i; ++j) log_ratio += 2.0 * std::log(std::abs(z[i] - z[j]));
    }
    if (log_ratio > 1e-12)
      throw SamplerError("bruteforce_sample: envelope violated, log ratio " + std::to_string(log_ratio));
    if (std::log(rng.uniform_open()) < log_ratio) {
      out.points = z;
      return out;
    }
  }
  throw SamplerError("bruteforce_sample: no acceptance within the proposal budget");
}

PointSample bruteforce_sample(const MeasureSpec& measure, double kappa, int N, RngStream& rng) {
  return BruteforceSampler(measure, kappa, N).sample(rng);
}

// ---- sequential conditional sampler

HkpvSampler::HkpvSampler(std::shared_ptr<const KernelEvaluator> kernel)
    : kernel_(std::move(kernel)), radial_(kernel_->basis().is_radial_path()) {
  const auto& basis = kernel_->basis();
  const int N = kernel_->N();
  if (radial_) {
    auto weight = std::make_shared<const RadialWeight>(basis.measure(), basis.params().kappa);
    for (int k = 0; k < N; ++k) laws_.push_back(std::make_unique<RadialLaw>(weight, 2.0 * k + 1.0));
    return;
  }
  // tabulated envelope for the general path
  const double R = basis.measure().outer_radius();
  const double rmax = 2.0 * R;
  const int cells = 512;
  const int M = 4 * N + 64;
  auto gmax = [&](double r) {
    double g = 0.0;
    for (int j = 0; j < M; ++j) g = std::max(g, kernel_->diag(std::polar(r, 2.0 * kPi * j / M)));
    return g;
  };
  std::vector<double> g(2 * cells + 1);
  for (int i = 0; i <= 2 * cells; ++i) g[i] = gmax(rmax * i / (2.0 * cells));
  edges_.resize(cells + 1);
  level_.resize(cells);
  for (int i = 0; i <= cells; ++i) edges_[i] = rmax * i / cells;
  double acc = 0.0;
  for (int i = 0; i < cells; ++i) {
    level_[i] = 1.5 * std::max({g[2 * i], g[2 * i + 1], g[2 * i + 2]});
    acc += level_[i] * kPi * (edges_[i + 1] * edges_[i + 1] - edges_[i] * edges_[i]);
    cumulative_.push_back(acc);
  }
  tail_power_ = 2.0 * (N - 1) - 2.0 * basis.params().kappa;
  for (double f : {1.0, 2.0, 4.0, 16.0})
    tail_A_ = std::max(tail_A_, 1.5 * gmax(f * rmax) / std::pow(f * rmax, tail_power_));
  acc += 2.0 * kPi * tail_A_ * std::pow(rmax, tail_power_ + 2.0) / -(tail_power_ + 2.0);
  cumulative_.push_back(acc);
  total_ = acc;
  for (auto& c : cumulative_) c /= total_;
}

double HkpvSampler::proposal_density(Complex z) const {
  if (radial_) return kernel_->diag(z) / kernel_->N();
  const double r = std::abs(z);
  if (r >= edges_.back()) return tail_A_ * std::pow(r, tail_power_) / total_;
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(r / edges_[1]), level_.size() - 1);
  return level_[i] / total_;
}

Complex HkpvSampler::propose(RngStream& rng) const {
  if (radial_) {
    const int k = static_cast<int>(rng.below(laws_.size()));
    const double r = laws_[k]->quantile(rng.uniform_open());
    return std::polar(r, 2.0 * kPi * rng.uniform());
  }
  const double u = rng.uniform();
  const std::size_t i = std::lower_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin();
  double r;
  if (i >= level_.size()) {
    r = edges_.back() * std::pow(rng.uniform_open(), 1.0 / (tail_power_ + 2.0));
  } else {
    const double a = edges_[i], b = edges_[i + 1];
    r = std::sqrt(a * a + rng.uniform() * (b * b - a * a));
  }
  return std::polar(r, 2.0 * kPi * rng.uniform());
}

PointSample HkpvSampler::sample(RngStream& rng) const {
  const int N = kernel_->N();
  PointSample out;
  out.model = Model::Gas;
  out.N = N;
  out.seed = rng.seed();
  out.replica = rng.replica();
  out.points.reserve(N);
  std::vector<Complex> E(static_cast<std::size_t>(N) * N);  // orthonormal rows
  std::vector<Complex> v(N), proj(N);
  long proposals = 0;
  for (int j = 0; j < N; ++j) {
    for (;;) {
      if (++proposals > kMaxProposals) throw SamplerError("hkpv_sample: no acceptance within the proposal budget");
      const Complex z = propose(rng);
      const double c = kernel_->features(z, v);
      const double vv = norm2(v);
      if (!(vv > 0.0) || !std::isfinite(vv)) continue;
      // accept with probability K_j(z,z) / envelope(z); K_j = e^{2c}(vv - sum |proj|^2)
      double threshold;  // accept iff sum |proj|^2 < threshold
      const double u = rng.uniform();
      if (radial_) {
        threshold = (1.0 - u) * vv;
      } else {
        const double env = proposal_density(z) * total_;
        const double K = std::exp(2.0 * c) * vv;
        if (K > env * (1.0 + 1e-12))
          throw SamplerError("hkpv_sample: envelope violated at |z| = " + std::to_string(std::abs(z)) +
                             " (K = " + std::to_string(K) + ", envelope = " + std::to_string(env) + ")");
        threshold = vv - u * env * std::exp(-2.0 * c);
        if (threshold <= 0.0) continue;
      }
      double acc = 0.0;
      bool reject = false;
      for (int i = 0; i < j; ++i) {
        proj[i] = dot(&E[static_cast<std::size_t>(i) * N], v.data(), N);
        acc += std::norm(proj[i]);
        if (acc >= threshold) {
          reject = true;
          break;
        }
      }
      if (reject) continue;
      if (vv - acc < -1e-9 * vv) throw SamplerError("hkpv_sample: negative conditional density");
      // two Gram-Schmidt passes
      Complex* e = &E[static_cast<std::size_t>(j) * N];
      for (int k = 0; k < N; ++k) e[k] = v[k];
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < j; ++i) {
          const Complex* ei = &E[static_cast<std::size_t>(i) * N];
          const Complex p = pass == 0 ? proj[i] : dot(ei, e, N);
          for (int k = 0; k < N; ++k) e[k] -= p * ei[k];
        }
      }
      double nn = 0.0;
      for (int k = 0; k < N; ++k) nn += std::norm(e[k]);
      if (!(nn > 1e-300)) continue;
      const double inv = 1.0 / std::sqrt(nn);
      for (int k = 0; k < N; ++k) e[k] *= inv;
      out.points.push_back(z);
      break;
    }
  }
  return out;
}

PointSample hkpv_sample(const KernelEvaluator& kernel, RngStream& rng) {
  return HkpvSampler(std::make_shared<const KernelEvaluator>(kernel)).sample(rng);
}

// ---- Kostlan moduli

KostlanSampler::KostlanSampler(const MeasureSpec& measure, const BasisParams& params) {
  params.validate();
  if (!measure.is_radial()) throw InvalidArgument("kostlan_moduli: measure must be radial");
  auto weight = std::make_shared<const RadialWeight>(measure, params.kappa);
  for (int k = 0; k < params.N; ++k) laws_.push_back(std::make_unique<RadialLaw>(weight, 2.0 * k + 1.0));
}

std::vector<double> KostlanSampler::moduli(RngStream& rng) const {
  std::vector<double> out(laws_.size());
  for (std::size_t k = 0; k < laws_.size(); ++k) out[k] = laws_[k]->quantile(rng.uniform_open());
  return out;
}

std::vector<double> kostlan_moduli(const MeasureSpec& measure, const BasisParams& params, RngStream& rng) {
  return KostlanSampler(measure, params).moduli(rng);
}

// ---- random polynomial zeros

void GafModel::validate() const {
  if (N < 1) throw InvalidArgument("GafModel: degree must be >= 1");
  if (!(residual_tol > 0.0)) throw InvalidArgument("GafModel: residual tolerance must be positive");
}

double GafModel::gram_residual() const {
  validate();
  const int M = 2 * N + 2;
  double worst = 0.0;
  for (int a = 0; a <= N; ++a)
    for (int b = 0; b <= N; ++b) {
      Complex s{};
      for (int j = 0; j < M; ++j) s += std::polar(1.0, 2.0 * kPi * (a - b) * j / M);
      s /= static_cast<double>(M);
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

std::vector<Complex> polynomial_roots(std::span<const Complex> c, std::vector<double>* residuals) {
  if (c.size() < 2) throw InvalidArgument("polynomial_roots: degree must be >= 1");
  const int n = static_cast<int>(c.size()) - 1;
  if (std::abs(c[n]) == 0.0) throw InvalidArgument("polynomial_roots: leading coefficient is zero");
  std::vector<Complex> roots;
  if (n == 1) {
    roots.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) A(0, j) = -c[n - 1 - j] / c[n];
    for (int i = 1; i < n; ++i) A(i, i - 1) = 1.0;
    balance(A);
    // the companion matrix is already upper Hessenberg and diagonal balancing keeps it so
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(n);
    schur.computeFromHessenberg(A, Eigen::MatrixXcd(), false);
    if (schur.info() != Eigen::Success) throw ConvergenceError("polynomial_roots: eigenvalue iteration failed", kInf);
    const auto& T = schur.matrixT();
    roots.resize(n);
    for (int i = 0; i < n; ++i) roots[i] = T(i, i);
  }
  auto horner = [&](Complex x, Complex& p, Complex& dp, double& scale) {
    p = c[n];
    dp = 0.0;
    scale = std::abs(c[n]);
    const double ax = std::abs(x);
    for (int k = n - 1; k >= 0; --k) {
      dp = dp * x + p;
      p = p * x + c[k];
      scale = scale * ax + std::abs(c[k]);
    }
  };
  if (residuals) residuals->assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Complex p, dp;
    double scale;
    horner(roots[i], p, dp, scale);
    if (std::abs(dp) > 0.0) {
      const Complex next = roots[i] - p / dp;
      Complex p2, dp2;
      double scale2;
      horner(next, p2, dp2, scale2);
      if (std::abs(p2) < std::abs(p)) {
        roots[i] = next;
        p = p2;
        scale = scale2;
      }
    }
    if (residuals) (*residuals)[i] = scale > 0.0 ? std::abs(p) / scale : 0.0;
  }
  return roots;
}

PointSample gaf_zeros_sample(const GafModel& model, RngStream& rng) {
  model.validate();
  PointSample out;
  out.model = Model::Zeros;
  out.N = model.N;
  out.seed = rng.seed();
  out.replica = rng.replica();
  std::vector<Complex> c(model.N + 1);
  do {
    for (auto& x : c) x = rng.complex_normal();
  } while (!(std::abs(c.back()) >= 1e-300));
  out.points = polynomial_roots(c, &out.residuals);
  return out;
}

double kernel_matrix_min_eigenvalue(const KernelEvaluator& kernel, std::span<const Complex> points) {
  const int n = static_cast<int>(points.size());
  const int N = kernel.N();
  if (n == 0) return 1.0;
  Eigen::MatrixXcd P(n, N);
  std::vector<Complex> v(N);
  for (int i = 0; i < n; ++i) {
    kernel.features(points[i], v);
    const double s = std::sqrt(norm2(v));
    for (int k = 0; k < N; ++k) P(i, k) = v[k] / s;
  }
  const Eigen::MatrixXcd G = P * P.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace jellium
