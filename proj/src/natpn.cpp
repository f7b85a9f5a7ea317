// SPDX-License-Identifier: Apache-2.0
#include "vmfev/natpn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vmfev/error.hpp"

namespace vmfev {

Evidence::Evidence(double m_) : m(m_) {
  if (!(m_ >= 0.0) || !std::isfinite(m_)) {
    throw DomainError("Evidence: m must be finite and >= 0, got " + std::to_string(m_));
  }
}

CertaintyBudget::CertaintyBudget(double n_h) : n_h_(n_h) {
  if (!(n_h > 0.0) || !std::isfinite(n_h)) {
    throw DomainError("CertaintyBudget: N_H must be finite and > 0");
  }
}

VmfParams informative_prior(const UnitVector3& surface_normal) {
  return VmfParams(-surface_normal, kInformativePriorKappa);
}

Evidence evidence_from_log_density(double log_density, const CertaintyBudget& budget,
                                   double m_max) {
  if (!(m_max > 0.0)) throw DomainError("evidence: m_max must be > 0");
  if (std::isnan(log_density) || log_density == std::numeric_limits<double>::infinity()) {
    throw DomainError("evidence: log density must not be NaN or +inf");
  }
  if (log_density == -std::numeric_limits<double>::infinity()) return Evidence(0.0);
  const double log_m = std::log(budget.value()) + log_density;
  if (log_m >= std::log(m_max)) {
    Evidence ev(m_max);
    ev.clamped = true;
    return ev;
  }
  return Evidence(std::exp(log_m));
}

Eigen::Vector3d interpolated_mean(const VmfParams& prior, const UnitVector3& observed_mu,
                                  const Evidence& ev) {
  const double total = prior.kappa + ev.m;
  if (!(total > 0.0)) {
    throw DomainError("posterior_update: prior kappa + evidence must be > 0");
  }
  if (ev.m == 0.0) return prior.mu.vec();
  return (prior.kappa * prior.mu.vec() + ev.m * observed_mu.vec()) / total;
}

VmfParams posterior_update(const VmfParams& prior, const UnitVector3& observed_mu,
                           const Evidence& ev) {
  const Eigen::Vector3d v = interpolated_mean(prior, observed_mu, ev);
  if (ev.m == 0.0) return prior;
  if (!(v.norm() >= 1e-12)) {
    throw DegenerateError("posterior_update: interpolated mean has zero norm");
  }
  return VmfParams(UnitVector3(v), prior.kappa + ev.m);
}

PosteriorAccumulator PosteriorAccumulator::from_prior(const VmfParams& prior) {
  PosteriorAccumulator acc;
  acc.weighted_sum = prior.kappa * prior.mu.vec();
  acc.total_count = prior.kappa;
  return acc;
}

void PosteriorAccumulator::accumulate(const UnitVector3& observed_mu, const Evidence& ev) {
  weighted_sum += ev.m * observed_mu.vec();
  total_count += ev.m;
}

void PosteriorAccumulator::merge(const PosteriorAccumulator& other) {
  weighted_sum += other.weighted_sum;
  total_count += other.total_count;
}

VmfParams PosteriorAccumulator::finalize() const {
  const double n = weighted_sum.norm();
  if (!(n >= 1e-12)) {
    throw DegenerateError("PosteriorAccumulator: weighted sum has zero norm");
  }
  return VmfParams(UnitVector3(weighted_sum), total_count);
}

PosteriorAccumulator accumulate(PosteriorAccumulator acc, const UnitVector3& observed_mu,
                                const Evidence& ev) {
  acc.accumulate(observed_mu, ev);
  return acc;
}

}  // namespace vmfev
