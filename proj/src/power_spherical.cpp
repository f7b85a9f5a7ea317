// SPDX-License-Identifier: Apache-2.0
#include "vmfev/power_spherical.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vmfev/error.hpp"

namespace vmfev {
namespace {
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kLogPi = 1.14472988584940017414;
}  // namespace

PsParams::PsParams(const UnitVector3& mu_, double kappa_) : mu(mu_), kappa(kappa_) {
  if (!(kappa_ >= 0.0) || !std::isfinite(kappa_)) {
    throw DomainError("PsParams: kappa must be finite and >= 0, got " +
                      std::to_string(kappa_));
  }
}

double ps_log_norm(double kappa) {
  return (kappa + 2.0) * kLn2 + kLogPi - std::log1p(kappa);
}

double ps_log_pdf(const PsParams& p, const UnitVector3& x) {
  if (p.kappa == 0.0) return -ps_log_norm(0.0);
  const double t = p.mu.dot(x);
  if (t <= -1.0) return -std::numeric_limits<double>::infinity();
  return p.kappa * std::log1p(t) - ps_log_norm(p.kappa);
}

UnitVector3 ps_sample_one(const PsParams& p, RandomStream& rng) {
  // z ~ Beta(kappa + 1, 1) by inversion, t = 2z - 1 is the cosine to the pole.
  const double z = std::pow(rng.uniform_open(), 1.0 / (p.kappa + 1.0));
  const double t = 2.0 * z - 1.0;
  const double phi = 2.0 * kPi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
  Eigen::Vector3d y(r * std::cos(phi), r * std::sin(phi), t);

  // Householder reflection sending the pole e3 to mu.
  const Eigen::Vector3d u = Eigen::Vector3d::UnitZ() - p.mu.vec();
  const double uu = u.squaredNorm();
  if (uu > 1e-30) y -= (2.0 * u.dot(y) / uu) * u;
  return UnitVector3(y);
}

std::vector<UnitVector3> ps_sample(const PsParams& p, std::size_t n, RandomStream& rng) {
  std::vector<UnitVector3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(ps_sample_one(p, rng));
  return out;
}

}  // namespace vmfev
