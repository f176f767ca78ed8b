#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "jellium/error.hpp"
#include "jellium/sampler.hpp"
#include "jellium/stats.hpp"
#include "oracles.hpp"

using namespace jellium;

namespace {

std::shared_ptr<const KernelEvaluator> circle_kernel(int N, BasisPath path = BasisPath::Auto) {
  return std::make_shared<const KernelEvaluator>(
      WeightedBasis::build(MeasureSpec::uniform_circle(), {N, N + 1.0}, path));
}

double three_sigma(double p, std::size_t M) { return 3.0 * std::sqrt(p * (1.0 - p) / M); }

}  // namespace

TEST(Rng, CounterStreams) {
  RngStream a(1, 2, 3), b(1, 2, 3), c(1, 2, 4), d(2, 2, 3);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
  }
  EXPECT_EQ(a.counter(), 100u);
  EXPECT_NE(a.child(1).next_u64(), a.child(2).next_u64());
}

TEST(Rng, Distributions) {
  RngStream r(42, fnv1a("rng-test"), 0);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sc = 0.0;
  std::vector<int> hist(7, 0);
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double x = r.normal();
    sn += x * x;
    sc += std::norm(r.complex_normal());
    ++hist[r.below(7)];
  }
  EXPECT_NEAR(su / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sn / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(sc / n, 1.0, 4.0 * std::sqrt(1.0 / n));
  for (int h : hist) EXPECT_NEAR(h, n / 7.0, 4.0 * std::sqrt(n / 7.0));
}

TEST(JointDensity, Examples) {
  const auto m = MeasureSpec::uniform_circle();
  const Complex p[] = {0.0, 2.0};
  EXPECT_NEAR(joint_density_log(m, 3.0, p), -4.0 * std::log(2.0), 1e-14);
  const Complex q[] = {Complex(0.5, 0.5), Complex(1.5, 0.0), Complex(0.5, 0.5)};
  EXPECT_EQ(joint_density_log(m, 4.0, q), -kInf);
  const Complex x[] = {Complex(0.1, 0.2), Complex(-1.3, 0.4), Complex(2.0, -1.0)};
  const Complex y[] = {x[2], x[0], x[1]};
  EXPECT_NEAR(joint_density_log(m, 4.0, x), joint_density_log(m, 4.0, y), 1e-13);
}

TEST(Bruteforce, SingleParticleTail) {
  const BruteforceSampler s(MeasureSpec::uniform_circle(), 2.0, 1);
  const std::size_t M = 100000;
  const auto samples = run_replicas(M, 0, [&](std::uint64_t r) {
    RngStream rng(5, fnv1a("bf1"), r);
    return s.sample(rng);
  });
  double out = 0.0;
  for (const auto& p : samples) {
    ASSERT_EQ(p.points.size(), 1u);
    out += std::abs(p.points[0]) > 1.0;
  }
  EXPECT_NEAR(out / M, 0.5, three_sigma(0.5, M));
}

TEST(Bruteforce, RejectsLargeN) {
  EXPECT_THROW(BruteforceSampler(MeasureSpec::uniform_circle(), 5.0, 4), InvalidArgument);
}

TEST(Bruteforce, CardinalityAndFiniteDensity) {
  const auto m = MeasureSpec::uniform_circle();
  for (int N : {2, 3}) {
    const BruteforceSampler s(m, N + 1.0, N);
    for (std::uint64_t r = 0; r < 200; ++r) {
      RngStream rng(9, fnv1a("bfN"), r);
      const auto p = s.sample(rng);
      ASSERT_EQ(static_cast<int>(p.points.size()), N);
      EXPECT_EQ(p.model, Model::Bruteforce);
      EXPECT_TRUE(std::isfinite(joint_density_log(m, N + 1.0, p.points)));
    }
  }
}

TEST(Hkpv, CardinalityDeterminantAndDensity) {
  const auto m = MeasureSpec::uniform_circle();
  for (auto path : {BasisPath::Radial, BasisPath::General}) {
    const auto K = circle_kernel(24, path);
    const HkpvSampler s(K);
    for (std::uint64_t r = 0; r < 20; ++r) {
      RngStream rng(3, fnv1a("hk"), r);
      const auto p = s.sample(rng);
      ASSERT_EQ(p.points.size(), 24u);
      EXPECT_EQ(p.replica, r);
      EXPECT_TRUE(std::isfinite(joint_density_log(m, 25.0, p.points)));
      EXPECT_GT(kernel_matrix_min_eigenvalue(*K, p.points), -1e-8);
    }
  }
}

TEST(Hkpv, MeanOutsideCount) {
  const int N = 64;
  const HkpvSampler s(circle_kernel(N));
  const std::size_t M = 2000;
  const auto samples = run_replicas(M, 0, [&](std::uint64_t r) {
    RngStream rng(17, fnv1a("hk-count"), r);
    return s.sample(rng);
  });
  const auto c = counts_in(samples, RegionSpec{1.0, kInf});
  const auto e = mean_estimate(c);
  EXPECT_NEAR(e.value, N / 2.0, 3.0 * e.stderr_);
}

TEST(Hkpv, GeneralPathMatchesRadialInLaw) {
  const int N = 6;
  const HkpvSampler a(circle_kernel(N, BasisPath::Radial)), b(circle_kernel(N, BasisPath::General));
  const std::size_t M = 20000;
  auto draw = [&](const HkpvSampler& s, const char* tag) {
    return run_replicas(M, 0, [&](std::uint64_t r) {
      RngStream rng(23, fnv1a(tag), r);
      return s.sample(rng);
    });
  };
  const auto sa = draw(a, "radial"), sb = draw(b, "general");
  const RegionSpec out{1.0, kInf};
  const auto ea = mean_estimate(counts_in(sa, out)), eb = mean_estimate(counts_in(sb, out));
  EXPECT_NEAR(ea.value, eb.value, 3.0 * std::hypot(ea.stderr_, eb.stderr_));
  EXPECT_NEAR(eb.value, N / 2.0, 3.0 * eb.stderr_);
}

TEST(Kostlan, TailProbabilities) {
  const auto m = MeasureSpec::uniform_circle();
  const KostlanSampler s4(m, {4, 5.0});
  EXPECT_NEAR(s4.law(0).ccdf(1.0), 0.2, 1e-13);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(s4.law(k).ccdf(1.0), (k + 1.0) / 5.0, 1e-13);
  const std::size_t M = 100000;
  double hits = 0.0, over = 0.0;
  const KostlanSampler s2(m, {2, 3.0});
  for (std::size_t r = 0; r < M; ++r) {
    RngStream rng(31, fnv1a("kostlan"), r);
    hits += s4.moduli(rng)[0] > 1.0;
    for (double x : s2.moduli(rng)) over += x > std::sqrt(2.0);
  }
  EXPECT_NEAR(hits / M, 0.2, three_sigma(0.2, M));
  // E #{R_k > sqrt 2} = sum_k 2^(k-N) (k+1)/(N+1) = 5/12; variance bounded by the mean
  EXPECT_NEAR(over / M, 5.0 / 12.0, 3.0 * std::sqrt(5.0 / 12.0 / M));
  RngStream rng(1, 1, 1);
  EXPECT_EQ(kostlan_moduli(m, {4, 5.0}, rng).size(), 4u);
}

TEST(Kostlan, SortedModuliMatchHkpv) {
  const int N = 16;
  const auto m = MeasureSpec::uniform_circle();
  const HkpvSampler hk(circle_kernel(N));
  const KostlanSampler ks(m, {N, N + 1.0});
  const std::size_t M = 10000;
  const auto sh = run_replicas(M, 0, [&](std::uint64_t r) {
    RngStream rng(41, fnv1a("hk-sorted"), r);
    return hk.sample(rng);
  });
  std::vector<std::vector<double>> a(N), b(N);
  for (const auto& s : sh) {
    std::vector<double> r;
    for (const auto& z : s.points) r.push_back(std::abs(z));
    std::sort(r.begin(), r.end());
    for (int j = 0; j < N; ++j) a[j].push_back(r[j]);
  }
  for (std::size_t rep = 0; rep < M; ++rep) {
    RngStream rng(41, fnv1a("ks-sorted"), rep);
    auto r = ks.moduli(rng);
    std::sort(r.begin(), r.end());
    for (int j = 0; j < N; ++j) b[j].push_back(r[j]);
  }
  double worst = 0.0;
  for (int j = 0; j < N; ++j) worst = std::max(worst, ks_distance(a[j], b[j]));
  EXPECT_LE(worst, 0.02);
}

TEST(Zeros, KnownPolynomial) {
  const Complex c[] = {-1.0, 0.0, 1.0};
  std::vector<double> res;
  auto r = polynomial_roots(c, &res);
  ASSERT_EQ(r.size(), 2u);
  std::sort(r.begin(), r.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  EXPECT_NEAR(std::abs(r[0] - Complex(-1.0, 0.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(r[1] - Complex(1.0, 0.0)), 0.0, 1e-12);
  for (double x : res) EXPECT_LT(x, 1e-14);
  // a wide-range product (z - 10^k)
  std::vector<Complex> p{1.0};
  for (int k = -3; k <= 3; ++k) {
    std::vector<Complex> q(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i + 1] += p[i];
      q[i] -= p[i] * std::pow(10.0, k);
    }
    p = q;
  }
  auto rr = polynomial_roots(p);
  std::sort(rr.begin(), rr.end(), [](Complex a, Complex b) { return std::abs(a) < std::abs(b); });
  for (int k = -3; k <= 3; ++k) EXPECT_NEAR(rr[k + 3].real() / std::pow(10.0, k), 1.0, 1e-9);
}

TEST(Zeros, GafSamples) {
  const GafModel model{64};
  EXPECT_LE(model.gram_residual(), 1e-12);
  for (std::uint64_t r = 0; r < 200; ++r) {
    RngStream rng(7, fnv1a("gaf"), r);
    const auto s = gaf_zeros_sample(model, rng);
    ASSERT_EQ(s.points.size(), 64u);
    EXPECT_EQ(s.model, Model::Zeros);
    for (double x : s.residuals) EXPECT_LT(x, model.residual_tol);
  }
  EXPECT_THROW(GafModel{0}.validate(), InvalidArgument);
}

TEST(Replicas, IndependentOfWorkerCount) {
  const HkpvSampler s(circle_kernel(20));
  auto draw = [&](std::uint64_t r) {
    RngStream rng(99, fnv1a("det"), r);
    return s.sample(rng);
  };
  const auto a = run_replicas(64, 1, draw), b = run_replicas(64, 4, draw);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].points, b[i].points);
}

TEST(Replicas, MergedIndependentStreams) {
  // two independently seeded gases restricted to disjoint regions: counts add
  // and the cross-covariance vanishes
  const int N = 32;
  const HkpvSampler s(circle_kernel(N));
  const std::size_t M = 2000;
  auto draw = [&](std::uint64_t seed) {
    return run_replicas(M, 0, [&](std::uint64_t r) {
      RngStream rng(seed, fnv1a("merge"), r);
      return s.sample(rng);
    });
  };
  const auto s1 = draw(1), s2 = draw(2);
  const RegionSpec A{0.0, 0.6}, B{1.4, 2.0};
  const auto a = counts_in(s1, A), b = counts_in(s2, B);
  std::vector<double> merged(M);
  for (std::size_t i = 0; i < M; ++i) merged[i] = a[i] + b[i];
  const double expect = expected_count_radial(MeasureSpec::uniform_circle(), {N, N + 1.0}, A) +
                        expected_count_radial(MeasureSpec::uniform_circle(), {N, N + 1.0}, B);
  const auto e = mean_estimate(merged);
  EXPECT_NEAR(e.value, expect, 3.0 * e.stderr_);
  EXPECT_LE(std::abs(pearson(a, b)), 3.0 / std::sqrt(static_cast<double>(M)));
}
