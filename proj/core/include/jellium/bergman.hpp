#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "jellium/numeric.hpp"

namespace jellium {

/// Bergman kernel of the unit disk, 1 / (pi (1 - z conj w)^2).
Complex disk_kernel(Complex z, Complex w);

/// Bergman kernel of {|z| > 1}, 1 / (pi (z conj w - 1)^2).
Complex exterior_disk_kernel(Complex z, Complex w);

/// Szego kernel of the unit disk w.r.t. arc length, 1 / (2 pi (1 - z conj w)).
Complex szego_disk(Complex z, Complex w);

struct AnnulusSeriesOptions {
  double tol = 1e-10;
  bool reduce_charge = true;      // replace Q by Q - floor(Q) first
  long max_terms = 2'000'000;     // per direction
};

/// Diagonal of the Bergman kernel of {a < |z| < b} for the weight |z|^(-2Q):
/// sum over n of |z|^(2n - 2Q) / (2 pi int_a^b r^(2n + 1 - 2Q) dr). a = 0 and
/// b = inf are allowed (not both).
double annulus_weighted_diag(double a, double b, double Q, Complex z, const AnnulusSeriesOptions& opt = {});

/// |B(z, w)| sqrt(w_Q(z) w_Q(w)) for the same annulus family: the
/// gauge-invariant off-diagonal modulus. Separates charges that the diagonal
/// cannot resolve (the diagonal depends on Q only through exponentially small
/// terms).
double annulus_weighted_offdiag_modulus(double a, double b, double Q, Complex z, Complex w,
                                        const AnnulusSeriesOptions& opt = {});

struct Circle {
  Complex center{};
  double radius = 1.0;
};

/// A disk (or the plane, without `outer`) with disjoint closed circular holes
/// removed. One anchor per hole; defaults to the hole centres.
struct RationalDomain {
  std::optional<Circle> outer;
  std::vector<Circle> holes;
  std::vector<Complex> anchors;

  bool contains(Complex z) const noexcept;
};

struct RationalOptions {
  int family_size = 64;
  double gram_tol = 1e-6;
  enum class Quadrature { Auto, Polar, PartitionOfUnity } quadrature = Quadrature::Auto;
  int angular_nodes = 0;   // 0 selects from the family size
  int order = 16;          // Gauss-Legendre points per radial panel
  int radial_panels = 6;   // per collar / annulus
  double bulk_step = 0.0;  // 0 selects min collar width / 20
};

/// Weighted Bergman kernel of a RationalDomain for the weight
/// prod |z - z_i|^(-2 Q_i), built by Gram-Schmidt (unpivoted Householder QR)
/// of polynomials ((z - c)/R)^k interleaved with (r_i / (z - z_i))^k in a
/// discretized L^2 inner product. Only square integrable members are used on
/// unbounded domains.
class RationalBergman {
 public:
  RationalBergman(RationalDomain domain, std::vector<double> Q, const RationalOptions& opt = {});

  const RationalDomain& domain() const noexcept { return domain_; }
  int family_size() const noexcept { return static_cast<int>(family_.size()); }
  double gram_residual() const noexcept { return gram_residual_; }
  std::size_t node_count() const noexcept { return node_count_; }

  double diag(Complex z) const;
  /// Diagonal truncated to the first n family members, n = 1..family_size.
  std::vector<double> diag_partials(Complex z) const;

  /// Reduced charges actually used.
  const std::vector<double>& charges() const noexcept { return Q_; }

 private:
  struct Member {
    int hole = -1;  // -1: polynomial
    int power = 0;
    int partner = -1;  // simple-pole difference with this hole
  };
  Complex member(const Member& m, Complex z) const;
  double log_weight(Complex z) const;

  RationalDomain domain_;
  std::vector<double> Q_;
  std::vector<Member> family_;
  Complex center_{};
  double scale_ = 1.0;
  std::vector<Complex> coeff_;  // upper triangular, column-major
  double gram_residual_ = 0.0;
  std::size_t node_count_ = 0;
};

double rational_bergman(const RationalDomain& domain, const std::vector<double>& Q, Complex z,
                        const RationalOptions& opt = {});

/// (1/pi) d dbar log diag at z: five-point Laplacian / 4 with one Richardson
/// step from h and h/2. The first intensity of the zeros of a Gaussian
/// analytic function with covariance diagonal `diag`.
double gaf_zero_intensity(const std::function<double(Complex)>& diag, Complex z, double h = 5e-3);

/// Limit-kernel oracle over one of the supported domain families.
class BergmanOracle {
 public:
  struct Disk {
    double radius = 1.0;
  };
  struct ExteriorDisk {
    double radius = 1.0;
  };
  struct Annulus {
    double inner = 1.0;
    double outer = 2.0;
  };
  using Domain = std::variant<Disk, ExteriorDisk, Annulus, RationalDomain>;

  BergmanOracle(Domain domain, std::vector<double> Q = {}, double tol = 1e-10,
                const RationalOptions& rational = {});

  const Domain& domain() const noexcept { return domain_; }
  const std::vector<double>& charges() const noexcept { return Q_; }
  bool contains(Complex z) const;

  double diag(Complex z) const;
  /// Full kernel; available for the disk and exterior disk only.
  Complex kernel(Complex z, Complex w) const;

 private:
  Domain domain_;
  std::vector<double> Q_;
  double tol_;
  std::shared_ptr<const RationalBergman> rational_;
};

}  // namespace jellium
