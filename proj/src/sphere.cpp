// SPDX-License-Identifier: Apache-2.0
#include "vmfev/sphere.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Geometry>

#include "vmfev/error.hpp"

namespace vmfev {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void require_nonneg(double k, const char* fn) {
  if (!(k >= 0.0)) {
    throw DomainError(std::string(fn) + ": argument must be >= 0, got " +
                      std::to_string(k));
  }
}

// Index of the coordinate axis with the smallest |component|; lowest index
// wins ties.
int least_aligned_axis(const Eigen::Vector3d& v) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) < std::abs(v[best])) best = i;
  }
  return best;
}

Eigen::Vector3d perpendicular_unit(const Eigen::Vector3d& n) {
  Eigen::Vector3d e = Eigen::Vector3d::Unit(least_aligned_axis(n));
  Eigen::Vector3d p = e - e.dot(n) * n;
  return p.normalized();
}

}  // namespace

//---------------------------------------------------------------------------//
// UnitVector3

UnitVector3::UnitVector3(double x, double y, double z)
    : UnitVector3(Eigen::Vector3d(x, y, z)) {}

UnitVector3::UnitVector3(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!std::isfinite(n) || n < 1e-300) {
    throw DomainError("UnitVector3: cannot normalize a zero or non-finite vector");
  }
  v_ = v / n;
}

UnitVector3 UnitVector3::operator-() const { return UnitVector3(-v_, Trusted{}); }

//---------------------------------------------------------------------------//
// Rotation3

Rotation3::Rotation3(const Eigen::Matrix3d& m) : m_(m) {
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (!(ortho <= 1e-9) || !(std::abs(m.determinant() - 1.0) <= 1e-9)) {
    throw DomainError("Rotation3: matrix is not a proper rotation");
  }
}

Rotation3 Rotation3::about_axis(const UnitVector3& axis, double angle) {
  const Eigen::Vector3d& k = axis.vec();
  Eigen::Matrix3d kx;
  kx << 0.0, -k.z(), k.y(), k.z(), 0.0, -k.x(), -k.y(), k.x(), 0.0;
  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() + std::sin(angle) * kx +
                            (1.0 - std::cos(angle)) * kx * kx;
  return Rotation3(r, Trusted{});
}

Rotation3 Rotation3::inverse() const { return Rotation3(m_.transpose(), Trusted{}); }

UnitVector3 Rotation3::operator*(const UnitVector3& u) const {
  return UnitVector3(m_ * u.vec());
}

Rotation3 Rotation3::operator*(const Rotation3& o) const {
  return Rotation3(m_ * o.m_, Trusted{});
}

//---------------------------------------------------------------------------//
// RandomStream

RandomStream::RandomStream(std::uint64_t seed)
    : seed_(seed), key_(mix64(seed + kGolden)) {}

std::uint64_t RandomStream::next_u64() {
  ++counter_;
  return mix64(key_ ^ mix64(counter_ * kGolden));
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

RandomStream RandomStream::split(std::uint64_t index) const {
  return RandomStream(seed_, mix64(key_ ^ mix64((index + 1) * 0xD1B54A32D192ED03ULL)));
}

//---------------------------------------------------------------------------//
// Special functions

double log_sinh(double k) {
  require_nonneg(k, "log_sinh");
  if (k == 0.0) return -std::numeric_limits<double>::infinity();
  if (k < 1e-4) {
    const double k2 = k * k;
    return std::log(k) + k2 / 6.0 - k2 * k2 / 180.0;
  }
  if (k <= 20.0) return std::log(std::sinh(k));
  return k - kLn2 + std::log1p(-std::exp(-2.0 * k));
}

double log_norm_const(double k) {
  require_nonneg(k, "log_norm_const");
  if (k < 1e-4) {
    // log(k / sinh k) = -k^2/6 + k^4/180 - ...
    const double k2 = k * k;
    return -kLog4Pi - k2 / 6.0 + k2 * k2 / 180.0;
  }
  return std::log(k) - kLog4Pi - log_sinh(k);
}

double a3(double k) {
  require_nonneg(k, "a3");
  if (k < 1e-3) {
    const double k2 = k * k;
    return k * (1.0 / 3.0 - k2 / 45.0 + 2.0 * k2 * k2 / 945.0);
  }
  if (k < 1.0) {
    // (k cosh k - sinh k) / (k sinh k); the numerator series has only
    // positive terms x^(2n+1) 2n / (2n+1)!, so no cancellation.
    const double k2 = k * k;
    double term = k * k2 / 3.0;
    double num = term;
    for (int n = 1; n < 30; ++n) {
      term *= k2 / (2.0 * n * (2.0 * n + 3.0));
      num += term;
      if (term < 1e-18 * num) break;
    }
    return num / (k * std::sinh(k));
  }
  return 1.0 / std::tanh(k) - 1.0 / k;
}

double a3_derivative(double k) {
  require_nonneg(k, "a3_derivative");
  if (k < 1e-3) {
    const double k2 = k * k;
    return 1.0 / 3.0 - k2 / 15.0 + 2.0 * k2 * k2 / 189.0;
  }
  if (k < 20.0) {
    // coth^2 = (a3 + 1/k)^2, so 1/k^2 - csch^2 = 1 - a3^2 - 2 a3 / k.
    const double a = a3(k);
    return 1.0 - a * a - 2.0 * a / k;
  }
  const double e = std::exp(-2.0 * k);
  const double d = 1.0 - e;
  return 1.0 / (k * k) - 4.0 * e / (d * d);
}

//---------------------------------------------------------------------------//
// Geometry

Rotation3 align_rotation(const UnitVector3& from, const UnitVector3& to) {
  const Eigen::Vector3d& f = from.vec();
  const Eigen::Vector3d& t = to.vec();
  const Eigen::Vector3d s = f + t;
  const double ss = s.squaredNorm();
  const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();
  if (ss < 1e-20) {
    const Eigen::Vector3d p = perpendicular_unit(f);
    return Rotation3::about_axis(UnitVector3(p), kPi);
  }
  // Reflect across the plane normal to (f + t), sending f to -t, then across
  // the plane normal to t. The product is the minimal rotation f -> t.
  const Eigen::Matrix3d reflect_s = eye - (2.0 / ss) * s * s.transpose();
  const Eigen::Matrix3d reflect_t = eye - 2.0 * t * t.transpose();
  return Rotation3(reflect_t * reflect_s);
}

UnitVector3 uniform_sphere(RandomStream& rng) {
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * kPi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return UnitVector3(r * std::cos(phi), r * std::sin(phi), z);
}

void tangent_basis(const UnitVector3& n, Eigen::Vector3d& e1,
                   Eigen::Vector3d& e2) {
  e1 = perpendicular_unit(n.vec());
  e2 = n.vec().cross(e1);
}

}  // namespace vmfev
