#include <gtest/gtest.h>

#include <random>

#include "jellium/error.hpp"
#include "jellium/measure.hpp"
#include "oracles.hpp"

using namespace jellium;

namespace {

MeasureSpec two_circles(double q) {
  return MeasureSpec({{q, UniformCircle{1.0}}, {1.0 - q, UniformCircle{2.0}}});
}

std::vector<MeasureSpec> radial_family() {
  return {
      MeasureSpec::uniform_circle(1.0),
      MeasureSpec::uniform_disk(1.5),
      two_circles(1.0 / std::sqrt(2.0)),
      MeasureSpec({{1.0, UniformAnnulus{0.5, 1.2}}}),
      MeasureSpec({{0.25, UniformDisk{0.4}}, {0.5, UniformCircle{1.0}}, {0.25, UniformAnnulus{1.5, 2.0}}}),
      MeasureSpec({{1.0, RadialCdf{{0.5, 0.75, 1.0}, {0.0, 0.3, 1.0}}}}),
  };
}

}  // namespace

TEST(LogPotential, CircleAtOrigin) { EXPECT_NEAR(log_potential(MeasureSpec::uniform_circle(), 0.0), 0.0, 1e-15); }

TEST(LogPotential, CircleOutsideMatchesTrapezoid) {
  const auto m = MeasureSpec::uniform_circle();
  EXPECT_NEAR(log_potential(m, 2.0), oracle::circle_potential(1.0, 2.0), 1e-13);
  EXPECT_NEAR(log_potential(m, 2.0), std::log(2.0), 1e-15);
  // inside the circle the potential is flat
  EXPECT_NEAR(log_potential(m, Complex(0.3, 0.4)), oracle::circle_potential(1.0, {0.3, 0.4}), 1e-12);
}

TEST(LogPotential, DiskAgainstPolarQuadrature) {
  const auto m = MeasureSpec::uniform_disk();
  // int log|z - w| dm(w) / pi over the unit disk, by a tensor rule in (r, theta)
  auto oracle_u = [](oracle::cd z) {
    auto f = [&](double r) {
      const double a = std::max(std::abs(z), r);
      return 2.0 * r * std::log(a);  // angular mean of log|z - r e^it|
    };
    // split at the kink r = |z|
    const double k = std::min(1.0, std::abs(z));
    return (k > 0.0 ? oracle::integrate(f, 0.0, k, 64) : 0.0) + oracle::integrate(f, k, 1.0, 64);
  };
  EXPECT_NEAR(log_potential(m, 0.0), -0.5, 1e-14);
  EXPECT_NEAR(oracle_u(0.0), -0.5, 1e-8);
  EXPECT_NEAR(log_potential(m, 1.0), 0.0, 1e-14);
  EXPECT_NEAR(log_potential(m, Complex(0.6, 0.0)), oracle_u(0.6), 1e-8);
  // the angular-mean identity itself, checked on one radius
  EXPECT_NEAR(oracle::circle_potential(0.5, 0.6), std::log(0.6), 1e-12);
}

TEST(LogPotential, ExactLogOutsideSupport) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& m : radial_family()) {
    const double R = m.outer_radius();
    for (int i = 0; i < 200; ++i) {
      const double r = R * (1.0 + 10.0 * u(gen));
      const Complex z = std::polar(i == 0 ? R : r, 2.0 * oracle::pi * u(gen));
      EXPECT_NEAR(log_potential(m, z), std::log(std::abs(z)), 1e-14);
    }
  }
}

TEST(LogPotential, ClosedFormMatchesQuadrature) {
  for (const auto& m : radial_family())
    for (double r : {0.0, 0.2, 0.6, 0.9, 1.1, 1.7, 2.5})
      EXPECT_NEAR(log_potential(m, std::polar(r, 0.3)), log_potential_quadrature(m, std::polar(r, 0.3)), 1e-8)
          << "r = " << r;
}

TEST(LogPotential, RadialProfileNondecreasing) {
  for (const auto& m : radial_family()) {
    PotentialField U(m);
    double prev = -INFINITY;
    for (int i = 0; i <= 400; ++i) {
      const double u = U.radial(3.0 * i / 400.0);
      EXPECT_GE(u, prev - 1e-14);
      prev = u;
    }
  }
}

TEST(LogPotential, PolarDensityAgainstDirectQuadrature) {
  // w(r, t) = 1 + 0.5 cos t on 0.5 <= r <= 1
  const int nt = 16;
  std::vector<double> radii{0.5, 0.75, 1.0}, vals;
  for (double r : radii) {
    (void)r;
    for (int j = 0; j < nt; ++j) vals.push_back(1.0 + 0.5 * std::cos(2.0 * oracle::pi * j / nt));
  }
  const MeasureSpec m({{1.0, PolarDensity{radii, nt, vals}}});
  EXPECT_FALSE(m.is_radial());
  const double mass = oracle::pi * (1.0 - 0.25);  // the cosine integrates to zero
  auto direct = [&](Complex z) {
    return oracle::integrate(
               [&](double r) {
                 const int n = 512;
                 double s = 0.0;
                 for (int j = 0; j < n; ++j) {
                   const double t = 2.0 * oracle::pi * (j + 0.5) / n;
                   s += (1.0 + 0.5 * std::cos(t)) * std::log(std::abs(z - std::polar(r, t)));
                 }
                 return r * s * 2.0 * oracle::pi / n;
               },
               0.5, 1.0, 16) /
           mass;
  };
  for (const Complex z : {Complex(0.0, 0.0), Complex(0.2, 0.1), Complex(1.5, -0.5), Complex(-2.0, 0.3)})
    EXPECT_NEAR(log_potential(m, z), direct(z), 1e-6) << z;
}

TEST(MeasureSpec, RejectsInvalidInput) {
  EXPECT_THROW(MeasureSpec({{0.5, UniformCircle{1.0}}}), InvalidArgument);
  EXPECT_THROW(MeasureSpec({{1.0, UniformCircle{-1.0}}}), InvalidArgument);
  EXPECT_THROW(MeasureSpec({{1.0, UniformAnnulus{2.0, 1.0}}}), InvalidArgument);
  EXPECT_THROW(MeasureSpec({{1.0, RadialCdf{{0.5, 1.0}, {0.0, 0.7}}}}), InvalidArgument);
  EXPECT_THROW(MeasureSpec({{1.0, RadialCdf{{0.5, 1.0, 1.5}, {0.0, 0.7, 0.6}}}}), InvalidArgument);
  EXPECT_THROW(MeasureSpec({{1.0, RadialCdf{{0.5, 1.0}, {0.1, 1.0}}}}), InvalidArgument);
  EXPECT_THROW(MeasureSpec({{0.0, UniformCircle{1.0}}, {1.0, UniformCircle{2.0}}}), InvalidArgument);
  EXPECT_THROW(log_potential(MeasureSpec::uniform_circle(), Complex(NAN, 0.0)), InvalidArgument);
  EXPECT_NO_THROW(MeasureSpec({{0.5, UniformCircle{1.0}}, {0.5 + 5e-13, UniformCircle{2.0}}}));
}

TEST(HoleMasses, TwoCircles) {
  const double q = 0.3;
  const auto h = hole_masses(two_circles(q), {1.0, 2.0});
  ASSERT_EQ(h.masses.size(), 1u);
  EXPECT_NEAR(h.masses[0], q, 1e-15);
  EXPECT_EQ(h.anchors[0], Complex(0.0, 0.0));
}

TEST(HoleMasses, ExteriorAndInterior) {
  const auto m = MeasureSpec::uniform_circle();
  const auto ext = hole_masses(m, {1.0, kInf});
  ASSERT_EQ(ext.masses.size(), 1u);
  EXPECT_DOUBLE_EQ(ext.masses[0], 1.0);
  EXPECT_TRUE(hole_masses(m, {0.0, 1.0}).masses.empty());
  EXPECT_THROW(hole_masses(MeasureSpec::uniform_disk(), {0.5, 2.0}), InvalidArgument);
}

TEST(HoleMasses, RepresentativeCharges) {
  const auto h = hole_masses(two_circles(0.5), {1.0, 2.0});
  const double lim[] = {0.9};
  const auto q = h.representative_charges(5.0, lim);  // 2.5 -> window [0.4, 1.4)
  EXPECT_NEAR(q[0], 0.5, 1e-15);
  EXPECT_NEAR(h.reduced_charges(5.0)[0], 0.5, 1e-15);
}

TEST(ClassRepresentative, Examples) {
  EXPECT_NEAR(class_representative(5.1, 0.1), 0.1, 1e-12);
  EXPECT_NEAR(class_representative(3.95, 0.0), -0.05, 1e-12);
  EXPECT_NEAR(class_representative(0.6, 0.9), 0.6, 1e-15);
  EXPECT_NEAR(class_representative(0.5, 1.0), 0.5, 1e-15);  // left edge is inside the window
  EXPECT_NEAR(class_representative(1.5, 1.0), 0.5, 1e-15);  // right edge is not
}

TEST(ClassRepresentative, WindowAndIntegrality) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ux(-50.0, 50.0), ul(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(gen), lim = ul(gen);
    const double y = class_representative(x, lim);
    EXPECT_GE(y, lim - 0.5);
    EXPECT_LT(y, lim + 0.5);
    const double d = class_representative(x + 1.0, lim) - y;
    EXPECT_NEAR(d, std::round(d), 1e-12);
    EXPECT_NEAR(x - y, std::round(x - y), 1e-12);
  }
}
