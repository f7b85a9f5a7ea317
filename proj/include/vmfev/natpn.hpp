// SPDX-License-Identifier: Apache-2.0
//
// Natural-parameter posterior updates for the vMF mean:
//
//   mu'  = (kappa0 mu0 + m mu_c) / (kappa0 + m)   (re-normalized)
//   kappa' = kappa0 + m,    m = N_H p(z)
//
// The returned concentration follows the additive pseudo-count rule. The
// exact conjugate alternative (kappa' = |theta|) is vmfev::conjugate_posterior.
#pragma once

#include "vmfev/sphere.hpp"
#include "vmfev/vmf.hpp"

namespace vmfev {

inline constexpr double kDefaultMaxEvidence = 1e6;
inline constexpr double kInformativePriorKappa = 1.0;

/// Pseudo-count attached to an observed likelihood mean.
struct Evidence {
  Evidence() = default;
  explicit Evidence(double m);

  double m = 0.0;
  // Set when the raw value N_H p(z) exceeded the cap.
  bool clamped = false;
};

/// Scale factor N_H mapping feature density to evidence.
class CertaintyBudget {
 public:
  explicit CertaintyBudget(double n_h);
  double value() const { return n_h_; }

 private:
  double n_h_;
};

// Prior whose mean opposes the surface normal, with kappa0 = 1.
VmfParams informative_prior(const UnitVector3& surface_normal);

// m = min(N_H exp(log_density), m_max). -inf maps to m = 0; NaN and +inf
// throw DomainError.
Evidence evidence_from_log_density(double log_density, const CertaintyBudget& budget,
                                   double m_max = kDefaultMaxEvidence);

// Un-normalized interpolated mean (kappa0 mu0 + m mu_c) / (kappa0 + m).
Eigen::Vector3d interpolated_mean(const VmfParams& prior, const UnitVector3& observed_mu,
                                  const Evidence& ev);

// Throws DegenerateError if the interpolated mean has norm < 1e-12.
VmfParams posterior_update(const VmfParams& prior, const UnitVector3& observed_mu,
                           const Evidence& ev);

//---------------------------------------------------------------------------//
/*!
 * Raw natural-parameter sums, kappa0 mu0 + sum(m_i mu_i) and kappa0 + sum(m_i).
 *
 * Merging two accumulators is field-wise addition, which makes parallel
 * reduction order-independent up to floating-point addition.
 */
struct PosteriorAccumulator {
  static PosteriorAccumulator from_prior(const VmfParams& prior);

  void accumulate(const UnitVector3& observed_mu, const Evidence& ev);
  void merge(const PosteriorAccumulator& other);

  // Normalized mean with total_count as concentration.
  VmfParams finalize() const;

  Eigen::Vector3d weighted_sum = Eigen::Vector3d::Zero();
  double total_count = 0.0;
};

PosteriorAccumulator accumulate(PosteriorAccumulator acc, const UnitVector3& observed_mu,
                                const Evidence& ev);

}  // namespace vmfev
