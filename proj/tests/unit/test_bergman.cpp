#include <gtest/gtest.h>

#include "jellium/bergman.hpp"
#include "jellium/error.hpp"
#include "oracles.hpp"

using namespace jellium;

namespace {

// Series forms of the closed-form kernels.
Complex disk_series(Complex z, Complex w) {
  Complex s = 0.0, t = 1.0;
  for (int k = 0; k < 4000; ++k, t *= z * std::conj(w)) s += (k + 1.0) * t;
  return s / oracle::pi;
}

Complex exterior_series(Complex z, Complex w) {
  const Complex x = 1.0 / (z * std::conj(w));
  Complex s = 0.0, t = x * x;
  for (int k = 2; k < 4000; ++k, t *= x) s += (k - 1.0) * t;
  return s / oracle::pi;
}

const double kSqrt2 = std::sqrt(2.0);

}  // namespace

TEST(DiskKernel, Values) {
  EXPECT_NEAR(disk_kernel(0.0, 0.0).real(), 1.0 / oracle::pi, 1e-15);
  EXPECT_NEAR(disk_kernel(0.5, 0.5).real(), 16.0 / (9.0 * oracle::pi), 1e-15);
  EXPECT_NEAR(std::abs(disk_kernel(0.5, 0.5) - disk_series(0.5, 0.5)), 0.0, 1e-13);
  const Complex z(0.3, 0.4), w(-0.2, 0.6);
  EXPECT_NEAR(std::abs(disk_kernel(z, w) - disk_series(z, w)), 0.0, 1e-13);
  EXPECT_EQ(disk_kernel(z, w), std::conj(disk_kernel(w, z)));
  EXPECT_THROW(disk_kernel(1.0, 0.0), InvalidArgument);
}

TEST(ExteriorDiskKernel, Values) {
  EXPECT_NEAR(exterior_disk_kernel(kSqrt2, kSqrt2).real(), 1.0 / oracle::pi, 1e-14);
  EXPECT_NEAR(exterior_series(kSqrt2, kSqrt2).real(), 1.0 / oracle::pi, 1e-13);
  EXPECT_NEAR(exterior_disk_kernel(2.0, 2.0).real(), 1.0 / (9.0 * oracle::pi), 1e-15);
  EXPECT_NEAR(exterior_series(2.0, 2.0).real(), 1.0 / (9.0 * oracle::pi), 1e-14);
  const Complex z(1.3, 0.4), w(-1.2, 1.6);
  EXPECT_NEAR(std::abs(exterior_disk_kernel(z, w) - exterior_series(z, w)), 0.0, 1e-13);
  EXPECT_EQ(exterior_disk_kernel(z, w), std::conj(exterior_disk_kernel(w, z)));
  EXPECT_THROW(exterior_disk_kernel(0.9, 2.0), InvalidArgument);
}

TEST(ExteriorDiskKernel, BoundaryPowerLaw) {
  for (double r2 : {1.1, 1.01}) {
    const double K = exterior_disk_kernel(std::sqrt(r2), std::sqrt(r2)).real();
    const double law = 1.0 / (oracle::pi * (r2 - 1.0) * (r2 - 1.0));
    EXPECT_NEAR(K / law, 1.0, 0.01);
  }
}

TEST(SzegoKernel, Values) {
  EXPECT_NEAR(szego_disk(0.0, 0.0).real(), 1.0 / (2.0 * oracle::pi), 1e-15);
  EXPECT_NEAR(szego_disk(0.5, 0.5).real(), 2.0 / (3.0 * oracle::pi), 1e-15);
  const Complex z(0.3, 0.4), w(-0.2, 0.6);
  EXPECT_EQ(szego_disk(z, w), std::conj(szego_disk(w, z)));
  EXPECT_THROW(szego_disk(Complex(0.0, 1.0), 0.0), InvalidArgument);
}

TEST(AnnulusSeries, MatchesPlainSum) {
  // the n = 0 term of the unweighted annulus (1, 2) is 1/(3 pi)
  EXPECT_NEAR(1.0 / (2.0 * oracle::pi * 1.5), 1.0 / (3.0 * oracle::pi), 1e-16);
  for (double Q : {0.0, 0.3, 0.75})
    for (double r : {1.1, kSqrt2, 1.9})
      EXPECT_NEAR(annulus_weighted_diag(1.0, 2.0, Q, r), oracle::annulus_diag(1.0, 2.0, Q, r),
                  1e-9 * oracle::annulus_diag(1.0, 2.0, Q, r))
          << Q << " " << r;
}

TEST(AnnulusSeries, IndexShift) {
  AnnulusSeriesOptions raw;
  raw.reduce_charge = false;
  for (double Q : {0.0, 0.3, 0.9})
    for (double r : {1.2, kSqrt2, 1.8}) {
      const double a = annulus_weighted_diag(1.0, 2.0, Q, r, raw);
      const double b = annulus_weighted_diag(1.0, 2.0, Q + 1.0, r, raw);
      const double c = annulus_weighted_diag(1.0, 2.0, Q - 3.0, r, raw);
      EXPECT_NEAR(b / a, 1.0, 1e-10);
      EXPECT_NEAR(c / a, 1.0, 1e-10);
    }
}

TEST(AnnulusSeries, RotationInvariantAndPositive) {
  for (double t : {0.0, 1.0, 2.5}) {
    EXPECT_DOUBLE_EQ(annulus_weighted_diag(1, 2, 0.3, std::polar(1.3, t)), annulus_weighted_diag(1, 2, 0.3, 1.3));
    EXPECT_GT(annulus_weighted_diag(1, 2, 0.3, std::polar(1.01, t)), 0.0);
  }
}

TEST(AnnulusSeries, LargeOuterRadiusApproachesExterior) {
  const double ext = exterior_disk_kernel(1.5, 1.5).real();
  AnnulusSeriesOptions fine;
  fine.tol = 1e-15;
  // a finite outer radius keeps the n = -1 term, 1/(2 pi log b |z|^2), which only decays like 1/log b;
  // the other terms move by O(b^-2)
  const double b = 1e4;
  EXPECT_NEAR(annulus_weighted_diag(1.0, b, 0.0, 1.5, fine) / (ext + 1.0 / (2.0 * oracle::pi * std::log(b) * 2.25)), 1.0,
              1e-7);
  EXPECT_NEAR(annulus_weighted_diag(1.0, kInf, 0.0, 1.5, fine) / ext, 1.0, 1e-12);
  EXPECT_NEAR(annulus_weighted_diag(0.0, 1.0, 0.0, 0.5, fine) / disk_kernel(0.5, 0.5).real(), 1.0, 1e-12);
}

TEST(AnnulusSeries, RejectsOutsidePoints) {
  EXPECT_THROW(annulus_weighted_diag(1.0, 2.0, 0.0, 0.5), InvalidArgument);
  EXPECT_THROW(annulus_weighted_diag(1.0, 2.0, 0.0, 2.0), InvalidArgument);
  EXPECT_THROW(annulus_weighted_diag(0.0, kInf, 0.0, 2.0), InvalidArgument);
  EXPECT_THROW(annulus_weighted_diag(1.0, 2.0, 0.0, 1.0 + 1e-13), ConvergenceError);
}

TEST(AnnulusSeries, OffDiagonalModulus) {
  // reference values from a 30-digit evaluation of the series
  EXPECT_NEAR(annulus_weighted_offdiag_modulus(1, 2, 0.0, 1.4, -1.4), 4.351150712e-06, 2e-15);
  EXPECT_NEAR(annulus_weighted_offdiag_modulus(1, 2, 0.3, 1.4, -1.4), 2.880771963e-06, 2e-15);
  EXPECT_NEAR(annulus_weighted_offdiag_modulus(1, 2, 0.3, 1.3, -1.7), 6.776911052e-07, 2e-16);
  // on the diagonal it reduces to the diagonal series
  EXPECT_NEAR(annulus_weighted_offdiag_modulus(1, 2, 0.3, 1.3, 1.3), annulus_weighted_diag(1, 2, 0.3, 1.3), 1e-9);
  // gauge invariant under Q -> Q + 1
  EXPECT_NEAR(annulus_weighted_offdiag_modulus(1, 2, 1.3, 1.4, -1.4), 2.880771963e-06, 2e-15);
}

TEST(AnnulusSeries, ChargeProbe) {
  // Q = 0 and Q = 0.3 diagonals on {1 < |z| < 2}: the difference is of order
  // exp(-2 pi^2 / log 2), far below 1%; the antipodal modulus separates them.
  double worst = 0.0;
  for (int i = 0; i < 40; ++i) {
    const double r = 1.25 + 0.5 * i / 39.0;
    const double a = annulus_weighted_diag(1, 2, 0.0, r), b = annulus_weighted_diag(1, 2, 0.3, r);
    worst = std::max(worst, std::abs(a - b) / b);
    EXPECT_NEAR(oracle::annulus_diag(1, 2, 0.0, r) / oracle::annulus_diag(1, 2, 0.3, r), 1.0, 1e-9);
  }
  EXPECT_LT(worst, 1e-9);
  const double m0 = annulus_weighted_offdiag_modulus(1, 2, 0.0, 1.4, -1.4);
  const double m3 = annulus_weighted_offdiag_modulus(1, 2, 0.3, 1.4, -1.4);
  EXPECT_GT(std::abs(m0 - m3) / m3, 0.01);
  // continuity in Q
  for (double Q : {0.0, 0.3, 0.7})
    EXPECT_LT(std::abs(annulus_weighted_diag(1, 2, Q + 0.01, kSqrt2) / annulus_weighted_diag(1, 2, Q, kSqrt2) - 1), 0.05);
  EXPECT_LT(std::abs(annulus_weighted_offdiag_modulus(1, 2, 0.31, 1.4, -1.4) / m3 - 1.0), 0.05);
}

TEST(RationalBergman, DiskWithoutHoles) {
  RationalDomain D{Circle{0.0, 1.0}, {}, {}};
  RationalBergman B(D, {});
  EXPECT_LE(B.gram_residual(), 1e-6);
  for (double r : {0.0, 0.4, 0.8})
    EXPECT_NEAR(B.diag(std::polar(r, 0.3)), disk_kernel(r, r).real(), 1e-6 * disk_kernel(r, r).real()) << r;
}

TEST(RationalBergman, ExteriorDisk) {
  RationalDomain D{std::nullopt, {Circle{0.0, 1.0}}, {0.0}};
  RationalBergman B(D, {0.0});
  for (double r : {1.25, 1.6, 3.0}) {
    const double ref = exterior_disk_kernel(r, r).real();
    EXPECT_NEAR(B.diag(std::polar(r, 1.1)), ref, 1e-6 * ref) << r;
  }
}

TEST(RationalBergman, WeightedAnnulus) {
  RationalDomain D{Circle{0.0, 2.0}, {Circle{0.0, 1.0}}, {0.0}};
  const double ref = annulus_weighted_diag(1, 2, 0.3, kSqrt2);
  RationalBergman polar(D, {0.3});
  EXPECT_NEAR(polar.diag(kSqrt2), ref, 1e-5 * ref);
  RationalOptions pou;
  pou.quadrature = RationalOptions::Quadrature::PartitionOfUnity;
  RationalBergman general(D, {0.3}, pou);
  EXPECT_NEAR(general.diag(Complex(0.0, kSqrt2)), ref, 1e-5 * ref);
  // only the class of Q matters
  RationalBergman shifted(D, {1.3});
  EXPECT_NEAR(shifted.diag(kSqrt2), ref, 1e-5 * ref);
}

TEST(RationalBergman, EccentricAnnulusAgainstConformalMap) {
  const oracle::EccentricAnnulus E(0.3, 0.3);
  EXPECT_NEAR(E.s, 1.0 / 3.0, 1e-12);
  RationalDomain D{Circle{0.0, 1.0}, {Circle{0.3, 0.3}}, {}};
  RationalBergman B(D, {0.0});
  for (const Complex z : {Complex(0.75, 0.0), Complex(-0.5, 0.2), Complex(0.3, 0.5), Complex(0.0, -0.7)}) {
    const double ref = E.diag(z);
    EXPECT_NEAR(B.diag(z), ref, 1e-5 * ref) << z;
  }
}

TEST(RationalBergman, NondecreasingInFamilySize) {
  RationalDomain D{Circle{0.0, 2.0}, {Circle{0.0, 1.0}}, {0.0}};
  RationalBergman B(D, {0.3});
  for (const Complex z : {Complex(1.2, 0.0), Complex(0.0, 1.7)}) {
    const auto p = B.diag_partials(z);
    ASSERT_EQ(static_cast<int>(p.size()), B.family_size());
    for (std::size_t i = 1; i < p.size(); ++i) EXPECT_GE(p[i], p[i - 1]);
    EXPECT_DOUBLE_EQ(p.back(), B.diag(z));
  }
}

TEST(RationalBergman, RejectsBadInput) {
  RationalDomain D{Circle{0.0, 2.0}, {Circle{0.0, 1.0}}, {0.0}};
  EXPECT_THROW(RationalBergman(D, {}), InvalidArgument);
  EXPECT_THROW(RationalBergman(RationalDomain{Circle{0.0, 2.0}, {Circle{0.0, 1.0}}, {1.5}}, {0.0}), InvalidArgument);
  RationalBergman B(D, {0.0});
  EXPECT_THROW(B.diag(0.5), InvalidArgument);
  EXPECT_THROW(rational_bergman(D, {0.0}, 2.5), InvalidArgument);
}

TEST(GafZeroIntensity, SzegoGivesBergman) {
  auto S = [](Complex z) { return szego_disk(z, z).real(); };
  EXPECT_NEAR(gaf_zero_intensity(S, 0.0), 1.0 / oracle::pi, 1e-6);
  EXPECT_NEAR(gaf_zero_intensity(S, 0.5), 16.0 / (9.0 * oracle::pi), 1e-5);
  for (int i = 0; i <= 8; ++i) {
    const Complex z = std::polar(0.1 * i, 0.7 * i);
    EXPECT_NEAR(gaf_zero_intensity(S, z), disk_kernel(z, z).real(), 1e-5) << z;
  }
  EXPECT_NEAR(gaf_zero_intensity([](Complex) { return 3.0; }, 0.2), 0.0, 1e-9);
  EXPECT_THROW(gaf_zero_intensity([](Complex) { return -1.0; }, 0.2), InvalidArgument);
}

TEST(BergmanOracle, Families) {
  BergmanOracle disk(BergmanOracle::Disk{2.0});
  EXPECT_NEAR(disk.diag(1.0), disk_kernel(0.5, 0.5).real() / 4.0, 1e-15);
  EXPECT_TRUE(disk.contains(1.9));
  EXPECT_FALSE(disk.contains(2.0));
  BergmanOracle ext(BergmanOracle::ExteriorDisk{1.0});
  EXPECT_NEAR(ext.diag(2.0), 1.0 / (9.0 * oracle::pi), 1e-15);
  EXPECT_NEAR(std::abs(ext.kernel(2.0, Complex(0, 3)) - exterior_disk_kernel(2.0, Complex(0, 3))), 0.0, 1e-16);
  BergmanOracle ann(BergmanOracle::Annulus{1.0, 2.0}, {0.3});
  EXPECT_NEAR(ann.diag(kSqrt2), annulus_weighted_diag(1, 2, 0.3, kSqrt2), 1e-15);
  EXPECT_THROW(ann.kernel(1.5, 1.5), InvalidArgument);
  BergmanOracle rat(RationalDomain{Circle{0.0, 1.0}, {}, {}});
  EXPECT_NEAR(rat.diag(0.5), disk_kernel(0.5, 0.5).real(), 1e-6);
}
