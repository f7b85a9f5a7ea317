// SPDX-License-Identifier: Apache-2.0
//
// The von Mises-Fisher distribution on S^2:
//   vMF(x; mu, kappa) = Z(kappa) exp(kappa mu^T x),  Z(k) = k / (4 pi sinh k).
#pragma once

#include <span>
#include <vector>

#include "vmfev/sphere.hpp"

namespace vmfev {

/// Mean direction and concentration. kappa = 0 is the uniform distribution.
struct VmfParams {
  VmfParams() = default;
  // Throws DomainError for negative or non-finite kappa.
  VmfParams(const UnitVector3& mu, double kappa);

  UnitVector3 mu;
  double kappa = 0.0;
};

double log_pdf(const VmfParams& p, const UnitVector3& x);

// Exact inverse-CDF sampler for p = 3.
std::vector<UnitVector3> sample(const VmfParams& p, std::size_t n, RandomStream& rng);
UnitVector3 sample_one(const VmfParams& p, RandomStream& rng);

// Differential entropy; log(4 pi) at kappa = 0.
double entropy(const VmfParams& p);

// Exact conjugate posterior over the mean for a vMF likelihood with fixed
// concentration `lik_kappa`: theta = kappa0 mu0 + lik_kappa sum(x_i),
// posterior vMF(theta / |theta|, |theta|). Throws DegenerateError when
// |theta| < 1e-12.
VmfParams conjugate_posterior(const VmfParams& prior, double lik_kappa,
                              std::span<const UnitVector3> data);

// Posterior mode of the mean direction, theta / |theta|.
UnitVector3 map_estimate(const VmfParams& prior, double lik_kappa,
                         std::span<const UnitVector3> data);

}  // namespace vmfev
