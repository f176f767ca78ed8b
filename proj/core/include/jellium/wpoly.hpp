#pragma once

#include <memory>
#include <span>
#include <vector>

#include "jellium/measure.hpp"
#include "jellium/radial.hpp"

namespace jellium {

/// Dimension N, total background charge kappa in (N, N+1], and monomial
/// scale. `gauge_power = m` replaces the basis z^k by z^(k-m) and multiplies
/// the weight by |z|^(2m); kernel diagonals are unchanged when the origin is
/// inside a hole.
struct BasisParams {
  int N = 1;
  double kappa = 2.0;
  double scale = 0.0;  // 0 selects the outer support radius
  int gauge_power = 0;

  void validate() const;
};

/// kappa_N = N + chi with chi in (0, 1].
double kappa_rule(int N, double chi = 1.0);

/// log ||z^k||^2 in L^2(C, exp(-2 kappa U) dm), k = 0..N-1. Circle mixtures
/// are exact power-law integrals; smooth parts use adaptive Gauss-Legendre.
std::vector<double> radial_log_norms(const MeasureSpec& measure, const BasisParams& params);

/// Same as radial_log_norms, exponentiated (may overflow to inf for large N).
std::vector<double> radial_norms(const MeasureSpec& measure, const BasisParams& params);

enum class BasisPath { Auto, Radial, General };

/// Discretization of C used by the general path: Gauss-Legendre panels in r
/// on [0, outer radius], a graded rule in t = R / r for the tail, and an
/// equispaced angular rule.
struct GeneralQuadrature {
  int angular_nodes = 0;      // 0 selects 2N + 64
  double panel_density = 4.0;  // panels per (support radius / sqrt(kappa))
  int order = 20;
  int tail_panels = 16;
};

/// Orthonormal basis of the N-dimensional weighted polynomial space.
class WeightedBasis {
 public:
  static WeightedBasis build(const MeasureSpec& measure, const BasisParams& params,
                             BasisPath path = BasisPath::Auto, const GeneralQuadrature& quad = {});

  const MeasureSpec& measure() const noexcept { return *measure_; }
  const BasisParams& params() const noexcept { return params_; }
  bool is_radial_path() const noexcept { return radial_path_; }
  double scale() const noexcept { return scale_; }

  /// Radial path: log squared norms of the monomials.
  const std::vector<double>& log_norms() const noexcept { return log_norms_; }
  /// General path: orthonormal polynomials p_j = sum_i C(i, j) a_i with
  /// a_i(z) = (z/s)^(i-m) |z/s|^m exp(-kappa U(z) - log_shift); column-major.
  const std::vector<Complex>& coefficients() const noexcept { return coeff_; }
  double log_shift() const noexcept { return log_shift_; }

  /// max |G - I| of the discrete Gram matrix of the produced basis.
  double gram_residual() const noexcept { return gram_residual_; }

  /// Quadrature nodes and weights of the general path (empty on the radial
  /// path); kept for trace and reproducing-property diagnostics.
  const std::vector<Complex>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& node_weights() const noexcept { return node_weights_; }

 private:
  WeightedBasis() = default;

  std::shared_ptr<const MeasureSpec> measure_;
  BasisParams params_;
  bool radial_path_ = true;
  double scale_ = 1.0;
  std::vector<double> log_norms_;
  std::vector<Complex> coeff_;
  double log_shift_ = 0.0;
  double gram_residual_ = 0.0;
  std::vector<Complex> nodes_;
  std::vector<double> node_weights_;
};

/// Finite-N correlation kernel K_N(z, w) = sum_k phi_k(z) conj(phi_k(w)),
/// phi_k = p_k exp(-kappa U). Immutable and safe to share across threads.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(WeightedBasis basis);

  const WeightedBasis& basis() const noexcept { return basis_; }
  const PotentialField& potential() const noexcept { return potential_; }
  int N() const noexcept { return basis_.params().N; }

  /// Writes phi_k(z) * exp(-c) into out (size N) and returns c.
  double features(Complex z, std::span<Complex> out) const;

  Complex kernel(Complex z, Complex w) const;
  double diag(Complex z) const;
  double log_diag(Complex z) const;

  std::vector<double> diag_grid(std::span<const Complex> grid, unsigned threads = 1) const;

 private:
  WeightedBasis basis_;
  PotentialField potential_;
};

/// Convenience: elementwise kernel diagonal on a grid.
std::vector<double> kernel_diag_grid(const KernelEvaluator& kernel, std::span<const Complex> grid,
                                     unsigned threads = 1);

Complex kernel_eval(const KernelEvaluator& kernel, Complex z, Complex w);

}  // namespace jellium
