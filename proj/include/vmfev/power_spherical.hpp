// SPDX-License-Identifier: Apache-2.0
//
// Power Spherical distribution on S^2, density proportional to
// (1 + mu^T x)^kappa. Used only as a fast sampling surrogate for vMF
// posteriors sharing the same (mu, kappa).
#pragma once

#include <vector>

#include "vmfev/sphere.hpp"
#include "vmfev/vmf.hpp"

namespace vmfev {

struct PsParams {
  PsParams() = default;
  PsParams(const UnitVector3& mu, double kappa);

  UnitVector3 mu;
  double kappa = 0.0;
};

// log normalizer for p = 3: (kappa + 2) log 2 + log pi - log(kappa + 1).
double ps_log_norm(double kappa);

// -inf at x = -mu when kappa > 0.
double ps_log_pdf(const PsParams& p, const UnitVector3& x);

std::vector<UnitVector3> ps_sample(const PsParams& p, std::size_t n, RandomStream& rng);
UnitVector3 ps_sample_one(const PsParams& p, RandomStream& rng);

inline PsParams surrogate_from_vmf(const VmfParams& v) { return PsParams(v.mu, v.kappa); }

}  // namespace vmfev
