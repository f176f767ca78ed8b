#pragma once

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "jellium/numeric.hpp"

namespace jellium {

// Profiles describe the shape of one component; the component mass scales it.

struct UniformCircle {
  double radius = 1.0;
};

struct UniformDisk {
  double radius = 1.0;
};

struct UniformAnnulus {
  double inner = 0.5;
  double outer = 1.0;
};

/// Radial CDF tabulated on nondecreasing radii, linear between nodes; the
/// values are absolute masses, so `cdf.front() == 0` and `cdf.back()` equals
/// the component mass.
struct RadialCdf {
  std::vector<double> radii;
  std::vector<double> cdf;
};

/// Area density w(r, theta) sampled on `radii` x `n_theta` equispaced angles,
/// row-major by radius. Interpolated linearly in r and trigonometrically in
/// theta; the samples fix the shape only and are rescaled to the component
/// mass.
struct PolarDensity {
  std::vector<double> radii;
  int n_theta = 0;
  std::vector<double> values;
};

using Profile = std::variant<UniformCircle, UniformDisk, UniformAnnulus, RadialCdf, PolarDensity>;

struct Component {
  double mass = 1.0;
  Profile profile;
};

namespace detail {
struct ProfileData;
}

/// Validated admissible background measure: a finite mixture of profiles with
/// total mass one. Immutable; copies share the preprocessed profile data.
class MeasureSpec {
 public:
  explicit MeasureSpec(std::vector<Component> components);

  static MeasureSpec uniform_circle(double radius = 1.0);
  static MeasureSpec uniform_disk(double radius = 1.0);

  const std::vector<Component>& components() const noexcept { return components_; }
  bool is_radial() const noexcept { return radial_; }

  /// Smallest and largest modulus in the support.
  double inner_radius() const noexcept { return inner_radius_; }
  double outer_radius() const noexcept { return outer_radius_; }

  /// Sorted radii where the radial potential can fail to be analytic
  /// (support edges, circle radii, tabulation nodes). Excludes 0.
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

  /// mu({|z| <= r}) and mu({|z| < r}).
  double mass_within(double r) const;
  double mass_within_open(double r) const;

  /// True when mu has no mass in the open radial interval (a, b).
  bool charge_free(double a, double b) const;

  /// Internal per-component data, same order as components().
  const detail::ProfileData& data(std::size_t i) const { return *data_[i]; }

 private:
  std::vector<Component> components_;
  std::vector<std::shared_ptr<const detail::ProfileData>> data_;
  bool radial_ = true;
  double inner_radius_ = 0.0;
  double outer_radius_ = 0.0;
  std::vector<double> breakpoints_;
};

/// U^mu(z) = integral of log|z - w| dmu(w). Radial components use exact
/// closed forms; polar densities use a Fourier-radial quadrature.
double log_potential(const MeasureSpec& measure, Complex z);

/// Same quantity by numerical quadrature for every component (adaptive
/// Gauss-Legendre panels in r, trapezoid in theta). Used to cross-check the
/// closed forms.
double log_potential_quadrature(const MeasureSpec& measure, Complex z);

/// Evaluator for U^mu with cached per-radius Fourier data for polar densities.
class PotentialField {
 public:
  enum class Mode { ClosedFormRadial, Quadrature };

  explicit PotentialField(MeasureSpec measure);

  const MeasureSpec& measure() const noexcept { return measure_; }
  Mode mode() const noexcept { return mode_; }

  double operator()(Complex z) const;

  /// Radial profile U(r); requires a radial measure.
  double radial(double r) const;

  /// U at r * exp(i * phi_j) for all j; shares the radial work across angles.
  void on_circle(double r, std::span<const double> phis, std::span<double> out) const;

 private:
  MeasureSpec measure_;
  Mode mode_;
};

/// Open annular region {inner < |z| < outer}; inner = 0 is a disk, outer = inf
/// an exterior.
struct AnnularRegion {
  double inner = 0.0;
  double outer = kInf;
  bool contains(Complex z) const noexcept {
    const double r = std::abs(z);
    return r > inner && r < outer;
  }
};

/// Holes of an uncharged region: one anchor and the mu-mass of each bounded
/// complementary component.
struct HoleData {
  std::vector<Complex> anchors;
  std::vector<double> masses;

  /// [kappa * q_i] lifted to the window [limit_i - 1/2, limit_i + 1/2).
  std::vector<double> representative_charges(double kappa, std::span<const double> limits) const;
  /// Same with every limit equal to the reduced class of kappa * q_i.
  std::vector<double> reduced_charges(double kappa) const;
};

HoleData hole_masses(const MeasureSpec& measure, const AnnularRegion& region);

/// Unique y with x - y integer and y in [limit - 1/2, limit + 1/2).
double class_representative(double x, double limit);

}  // namespace jellium
