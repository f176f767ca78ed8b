#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "jellium/measure.hpp"
#include "jellium/parallel.hpp"
#include "jellium/radial.hpp"
#include "jellium/rng.hpp"
#include "jellium/wpoly.hpp"

namespace jellium {

enum class Model { Gas, Zeros, Bruteforce };

const char* model_name(Model m) noexcept;

/// One realization of a point process.
struct PointSample {
  std::vector<Complex> points;
  Model model = Model::Gas;
  int N = 0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  /// Zeros model: relative residual |P(root)| / sum |c_k| |root|^k per root.
  std::vector<double> residuals;
};

/// Unnormalized log-density of the gas:
/// 2 sum_{i<j} log|z_i - z_j| - 2 kappa sum_j U(z_j); -inf on coincidences.
double joint_density_log(const PotentialField& potential, double kappa, std::span<const Complex> points);
double joint_density_log(const MeasureSpec& measure, double kappa, std::span<const Complex> points);

/// Exact rejection sampler for N <= 3 and radial measures. Proposal: i.i.d.
/// points with density proportional to max(1, |z|)^(2(N-1)) exp(-2 kappa U);
/// the acceptance ratio is bounded by 4^(N(N-1)/2).
class BruteforceSampler {
 public:
  BruteforceSampler(const MeasureSpec& measure, double kappa, int N);

  int N() const noexcept { return N_; }
  PointSample sample(RngStream& rng) const;

 private:
  PotentialField potential_;
  double kappa_;
  int N_;
  std::unique_ptr<RadialLaw> law_;
  double log_bound_;
};

PointSample bruteforce_sample(const MeasureSpec& measure, double kappa, int N, RngStream& rng);

/// Sequential conditional sampler for the rank-N projection kernel. On the
/// radial path the proposal is the exact mixture of Kostlan radial laws
/// (density K(z,z)/N); on the general path it is a tabulated radial envelope
/// 1.5 x the angular maximum of K(z,z) with a power-law tail.
class HkpvSampler {
 public:
  explicit HkpvSampler(std::shared_ptr<const KernelEvaluator> kernel);

  const KernelEvaluator& kernel() const noexcept { return *kernel_; }
  PointSample sample(RngStream& rng) const;

  /// Proposal density and a draw from it (exposed for diagnostics).
  double proposal_density(Complex z) const;
  Complex propose(RngStream& rng) const;

 private:
  std::shared_ptr<const KernelEvaluator> kernel_;
  bool radial_;
  std::vector<std::unique_ptr<RadialLaw>> laws_;  // radial path, one per k
  // general path envelope: piecewise constant on [edges_i, edges_{i+1}],
  // then A r^tail_power beyond the last edge
  std::vector<double> edges_, level_, cumulative_;
  double tail_A_ = 0.0, tail_power_ = 0.0, total_ = 0.0;
};

PointSample hkpv_sample(const KernelEvaluator& kernel, RngStream& rng);

/// Independent radial draws R_k with density proportional to
/// r^(2k+1) exp(-2 kappa U(r)), k = 0..N-1. Equal in law to the multiset of
/// moduli of the radial gas.
class KostlanSampler {
 public:
  KostlanSampler(const MeasureSpec& measure, const BasisParams& params);

  int N() const noexcept { return static_cast<int>(laws_.size()); }
  const RadialLaw& law(int k) const { return *laws_.at(k); }
  std::vector<double> moduli(RngStream& rng) const;

 private:
  std::vector<std::unique_ptr<RadialLaw>> laws_;
};

std::vector<double> kostlan_moduli(const MeasureSpec& measure, const BasisParams& params, RngStream& rng);

/// Random polynomial sum_{k=0}^N xi_k z^k with i.i.d. standard complex
/// Gaussian xi_k: monomials are orthonormal for the uniform probability on the
/// unit circle.
struct GafModel {
  int N = 64;
  double residual_tol = 1e-8;

  void validate() const;
  /// max |G - I| of the monomial Gram matrix under the (2N+2)-point circle rule.
  double gram_residual() const;
};

/// Roots of sum c_k z^k (c.back() != 0) from the balanced companion matrix and
/// one guarded Newton step; relative residuals written when requested.
std::vector<Complex> polynomial_roots(std::span<const Complex> coeffs, std::vector<double>* residuals = nullptr);

PointSample gaf_zeros_sample(const GafModel& model, RngStream& rng);

/// Smallest eigenvalue of the kernel matrix at `points` after normalizing its
/// diagonal to one.
double kernel_matrix_min_eigenvalue(const KernelEvaluator& kernel, std::span<const Complex> points);

/// Runs draw(replica) for replica = 0..M-1 in parallel, ordered by replica.
template <class Draw>
std::vector<PointSample> run_replicas(std::size_t M, unsigned threads, Draw&& draw) {
  std::vector<PointSample> out(M);
  parallel_for(M, threads, [&](std::size_t r) { out[r] = draw(static_cast<std::uint64_t>(r)); });
  return out;
}

}  // namespace jellium
