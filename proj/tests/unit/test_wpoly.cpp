#include <gtest/gtest.h>

#include "jellium/bergman.hpp"
#include "jellium/error.hpp"
#include "jellium/wpoly.hpp"
#include "oracles.hpp"

using namespace jellium;

namespace {

KernelEvaluator circle_kernel(int N, double kappa, BasisPath path = BasisPath::Auto, int gauge = 0) {
  BasisParams p{N, kappa};
  p.gauge_power = gauge;
  return KernelEvaluator(WeightedBasis::build(MeasureSpec::uniform_circle(), p, path));
}

MeasureSpec two_circles() {
  const double q = 1.0 / std::sqrt(2.0);
  return MeasureSpec({{q, UniformCircle{1.0}}, {1.0 - q, UniformCircle{2.0}}});
}

}  // namespace

TEST(RadialNorms, CircleClosedForm) {
  const auto n = radial_norms(MeasureSpec::uniform_circle(), {4, 5.0});
  ASSERT_EQ(n.size(), 4u);
  EXPECT_NEAR(n[0], 5.0 * oracle::pi / 4.0, 1e-13);
  EXPECT_NEAR(n[1], 5.0 * oracle::pi / 6.0, 1e-13);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(n[k], oracle::circle_norm(k, 5.0), 1e-13 * n[k]);
}

TEST(RadialNorms, MatchOneDimensionalQuadrature) {
  // smooth profile: uniform disk, U = (r^2 - 1)/2 inside
  const int N = 6;
  const double kappa = 6.5;
  const auto ln = radial_log_norms(MeasureSpec::uniform_disk(), {N, kappa});
  for (int k = 0; k < N; ++k) {
    const double in = oracle::integrate([&](double r) { return std::pow(r, 2 * k + 1) * std::exp(kappa * (1 - r * r)); }, 0, 1);
    const double out = 1.0 / (2.0 * kappa - 2.0 * k - 2.0);
    EXPECT_NEAR(std::exp(ln[k]), 2.0 * oracle::pi * (in + out), 1e-10 * std::exp(ln[k]));
  }
}

TEST(RadialNorms, Dilation) {
  // circle of radius c: U_c(z) = U_1(z/c) + log c, so norms scale by c^(2k+2-2 kappa)
  const double c = 1.7, kappa = 9.3;
  const auto a = radial_log_norms(MeasureSpec::uniform_circle(1.0), {9, kappa});
  const auto b = radial_log_norms(MeasureSpec::uniform_circle(c), {9, kappa});
  for (int k = 0; k < 9; ++k) EXPECT_NEAR(b[k] - a[k], (2.0 * k + 2.0 - 2.0 * kappa) * std::log(c), 1e-12);
}

TEST(BasisParams, KappaWindow) {
  EXPECT_THROW(WeightedBasis::build(MeasureSpec::uniform_circle(), {4, 4.0}), InvalidArgument);
  EXPECT_THROW(WeightedBasis::build(MeasureSpec::uniform_circle(), {4, 5.5}), InvalidArgument);
  EXPECT_THROW(WeightedBasis::build(MeasureSpec::uniform_circle(), {0, 0.5}), InvalidArgument);
  EXPECT_NO_THROW(WeightedBasis::build(MeasureSpec::uniform_circle(), {4, 4.0 + 1e-9}));
  EXPECT_DOUBLE_EQ(kappa_rule(10), 11.0);
  EXPECT_DOUBLE_EQ(kappa_rule(10, 0.25), 10.25);
  EXPECT_THROW(kappa_rule(10, 0.0), InvalidArgument);
}

TEST(Kernel, TwoTermSum) {
  const auto K = circle_kernel(2, 3.0);
  EXPECT_NEAR(K.diag(std::sqrt(2.0)), 1.0 / (4.0 * oracle::pi), 1e-15);
  EXPECT_NEAR(K.diag(Complex(1.0, 1.0)), 1.0 / (4.0 * oracle::pi), 1e-15);
}

TEST(Kernel, OriginIsFirstTerm) {
  for (int N : {1, 2, 7, 64, 512, 4096})
    EXPECT_NEAR(circle_kernel(N, N + 1.0).diag(0.0), 1.0 / (oracle::pi * (1.0 + 1.0 / N)), 1e-12) << N;
}

TEST(Kernel, MatchesDirectSum) {
  const int N = 40;
  const auto K = circle_kernel(N, N + 0.6);
  for (double r : {0.0, 0.3, 0.99, 1.01, 1.5, 4.0})
    EXPECT_NEAR(K.diag(std::polar(r, 1.0)), oracle::circle_diag(N, N + 0.6, r), 1e-12 * oracle::circle_diag(N, N + 0.6, r));
}

TEST(Kernel, OneDimensionalSpace) {
  const auto m = MeasureSpec::uniform_disk();
  const auto K = KernelEvaluator(WeightedBasis::build(m, {1, 1.5}));
  const double n0 = radial_norms(m, {1, 1.5})[0];
  for (double r : {0.0, 0.5, 2.0})
    EXPECT_NEAR(K.diag(r), std::exp(-2.0 * 1.5 * log_potential(m, r)) / n0, 1e-14);
}

TEST(Kernel, HermitianAndNonnegative) {
  for (auto path : {BasisPath::Radial, BasisPath::General}) {
    const auto K = circle_kernel(12, 12.7, path);
    const Complex z(0.4, 1.1), w(-1.3, 0.2);
    EXPECT_EQ(K.kernel(z, w), std::conj(K.kernel(w, z)));
    EXPECT_EQ(K.kernel(z, z).imag(), 0.0);
    EXPECT_GE(K.kernel(z, z).real(), 0.0);
    EXPECT_NEAR(K.kernel(z, z).real(), K.diag(z), 1e-14 * K.diag(z));
    EXPECT_NEAR(K.log_diag(z), std::log(K.diag(z)), 1e-13);
  }
}

TEST(Kernel, GeneralPathReproducesRadial) {
  for (int N : {1, 8, 32}) {
    const auto R = circle_kernel(N, N + 1.0, BasisPath::Radial);
    const auto G = circle_kernel(N, N + 1.0, BasisPath::General);
    EXPECT_FALSE(G.basis().is_radial_path());
    EXPECT_LE(G.basis().gram_residual(), 1e-8);
    for (double r : {0.0, 0.5, 0.95, 1.05, 1.5, 3.0}) {
      const Complex z = std::polar(r, 0.7);
      EXPECT_NEAR(G.diag(z), R.diag(z), 1e-8 * R.diag(z)) << N << " " << r;
    }
    const Complex z(0.3, -0.8), w(1.2, 0.5);
    EXPECT_NEAR(std::abs(G.kernel(z, w)), std::abs(R.kernel(z, w)), 1e-8 * std::abs(R.kernel(z, z)));
  }
}

TEST(Kernel, GeneralPathTwoCircles) {
  const auto m = two_circles();
  const BasisParams p{24, 25.0};
  const KernelEvaluator R(WeightedBasis::build(m, p, BasisPath::Radial));
  const KernelEvaluator G(WeightedBasis::build(m, p, BasisPath::General));
  for (double r : {0.2, 1.0, 1.4, 2.0, 2.6}) EXPECT_NEAR(G.diag(r), R.diag(r), 1e-8 * R.diag(r)) << r;
}

TEST(Kernel, TraceAndReproducingOnNodes) {
  const int N = 10;
  const auto K = circle_kernel(N, N + 1.0, BasisPath::General);
  const auto& nodes = K.basis().nodes();
  const auto& w = K.basis().node_weights();
  ASSERT_EQ(nodes.size(), w.size());
  double trace = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) trace += w[i] * K.diag(nodes[i]);
  EXPECT_NEAR(trace, N, 1e-6 * N);
  for (const Complex z : {Complex(0.2, 0.1), Complex(1.6, -0.4)}) {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += w[i] * std::norm(K.kernel(z, nodes[i]));
    EXPECT_NEAR(s, K.diag(z), 1e-6 * K.diag(z));
  }
}

TEST(Kernel, GaugeInvariance) {
  // shifting the basis to z^(k-1) with weight |z|^2: same space when 0 is in a hole
  for (auto path : {BasisPath::Radial, BasisPath::General}) {
    const auto A = circle_kernel(16, 17.0, path, 0);
    const auto B = circle_kernel(16, 17.0, path, 1);
    for (double r : {1.1, 1.5, 2.5}) {
      const Complex z = std::polar(r, 0.4);
      EXPECT_NEAR(B.diag(z) / A.diag(z), 1.0, path == BasisPath::Radial ? 1e-10 : 1e-8) << r;
    }
  }
}

TEST(Kernel, DiagGridIndependentOfThreads) {
  const auto K = circle_kernel(100, 101.0);
  std::vector<Complex> g;
  for (int i = 0; i < 101; ++i) g.push_back(std::polar(0.03 * i, 0.1 * i));
  const auto a = K.diag_grid(g, 1), b = K.diag_grid(g, 4), c = kernel_diag_grid(K, g, 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a[17], K.diag(g[17]));
  EXPECT_EQ(kernel_eval(K, g[5], g[9]), K.kernel(g[5], g[9]));
}

TEST(Kernel, ExteriorPointApproachesBergman) {
  const auto K = circle_kernel(512, 513.0);
  const double B = 1.0 / (oracle::pi * std::pow(1.5 * 1.5 - 1.0, 2));
  EXPECT_NEAR(B, 0.203718, 1e-6);
  EXPECT_LT(std::abs(K.diag(1.5) - B) / B, 0.05);
}

TEST(Kernel, MonotoneBelowLimit) {
  for (int N : {8, 64, 512}) {
    const auto K = circle_kernel(N, N + 1.0);
    for (int i = 0; i < 50; ++i) {
      const double ro = 1.05 + 0.05 * i, ri = 0.019 * i;
      EXPECT_LE(K.diag(ro), exterior_disk_kernel(ro, ro).real() * (1 + 1e-6));
      EXPECT_LE(K.diag(ri), disk_kernel(ri, ri).real() * (1 + 1e-6));
    }
  }
}
