// SPDX-License-Identifier: Apache-2.0
#include "vmfev/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vmfev/error.hpp"

namespace vmfev {

VmfParams::VmfParams(const UnitVector3& mu_, double kappa_) : mu(mu_), kappa(kappa_) {
  if (!(kappa_ >= 0.0) || !std::isfinite(kappa_)) {
    throw DomainError("VmfParams: kappa must be finite and >= 0, got " +
                      std::to_string(kappa_));
  }
}

double log_pdf(const VmfParams& p, const UnitVector3& x) {
  if (p.kappa == 0.0) return -kLog4Pi;
  return log_norm_const(p.kappa) + p.kappa * p.mu.dot(x);
}

UnitVector3 sample_one(const VmfParams& p, RandomStream& rng) {
  if (p.kappa == 0.0) return uniform_sphere(rng);
  const double u = rng.uniform_open();
  double w;
  if (p.kappa < 1e-6) {
    w = 2.0 * u - 1.0;
  } else {
    // Inverse CDF of w = mu^T x, with density proportional to exp(kappa w)
    // on [-1, 1], written in log space so large kappa cannot overflow.
    w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * p.kappa)) / p.kappa;
    w = std::clamp(w, -1.0, 1.0);
  }
  const double phi = 2.0 * kPi * rng.uniform();
  Eigen::Vector3d e1, e2;
  tangent_basis(p.mu, e1, e2);
  const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
  return UnitVector3(w * p.mu.vec() + r * (std::cos(phi) * e1 + std::sin(phi) * e2));
}

std::vector<UnitVector3> sample(const VmfParams& p, std::size_t n, RandomStream& rng) {
  std::vector<UnitVector3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(p, rng));
  return out;
}

double entropy(const VmfParams& p) {
  // kappa coth(kappa) - 1 = kappa a3(kappa), continuous at 0.
  return -log_norm_const(p.kappa) - p.kappa * a3(p.kappa);
}

VmfParams conjugate_posterior(const VmfParams& prior, double lik_kappa,
                              std::span<const UnitVector3> data) {
  if (!(lik_kappa >= 0.0)) {
    throw DomainError("conjugate_posterior: lik_kappa must be >= 0");
  }
  if (data.empty() && prior.kappa <= 0.0) {
    throw DomainError("conjugate_posterior: need data or a proper prior");
  }
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& x : data) sum += x.vec();
  const Eigen::Vector3d theta = prior.kappa * prior.mu.vec() + lik_kappa * sum;
  const double norm = theta.norm();
  if (!(norm >= 1e-12)) {
    throw DegenerateError("conjugate_posterior: |theta| < 1e-12");
  }
  return VmfParams(UnitVector3(theta), norm);
}

UnitVector3 map_estimate(const VmfParams& prior, double lik_kappa,
                         std::span<const UnitVector3> data) {
  return conjugate_posterior(prior, lik_kappa, data).mu;
}

}  // namespace vmfev
