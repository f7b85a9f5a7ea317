// SPDX-License-Identifier: Apache-2.0
//
// Unit-sphere primitives on S^2, the stable special functions of the 3-D
// von Mises-Fisher family, and the counter-based random stream every
// sampler in the library draws from.
#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace vmfev {

inline constexpr double kPi = 3.14159265358979323846;
// log(4 pi): negative log density of the uniform distribution on S^2.
inline constexpr double kLog4Pi = 2.53102424696929079298;

//---------------------------------------------------------------------------//
/*!
 * A direction on S^2. Construction normalizes its argument, so every live
 * instance has unit norm to rounding.
 */
class UnitVector3 {
 public:
  // (0, 0, 1)
  UnitVector3() : v_(0.0, 0.0, 1.0) {}
  UnitVector3(double x, double y, double z);
  explicit UnitVector3(const Eigen::Vector3d& v);

  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double operator[](int i) const { return v_[i]; }

  const Eigen::Vector3d& vec() const { return v_; }
  double dot(const UnitVector3& o) const { return v_.dot(o.v_); }
  double dot(const Eigen::Vector3d& o) const { return v_.dot(o); }

  UnitVector3 operator-() const;

  friend bool operator==(const UnitVector3& a, const UnitVector3& b) {
    return a.v_ == b.v_;
  }

 private:
  struct Trusted {};
  UnitVector3(const Eigen::Vector3d& v, Trusted) : v_(v) {}

  Eigen::Vector3d v_;
};

//---------------------------------------------------------------------------//
/*!
 * A proper rotation of R^3 (orthonormal, det = +1).
 */
class Rotation3 {
 public:
  Rotation3() : m_(Eigen::Matrix3d::Identity()) {}
  // Throws DomainError if the matrix is not orthonormal with det +1 (1e-9).
  explicit Rotation3(const Eigen::Matrix3d& m);

  static Rotation3 identity() { return Rotation3(); }
  // Rotation by `angle` radians about the unit `axis` (Rodrigues).
  static Rotation3 about_axis(const UnitVector3& axis, double angle);

  const Eigen::Matrix3d& matrix() const { return m_; }
  Rotation3 inverse() const;

  UnitVector3 operator*(const UnitVector3& u) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }
  Rotation3 operator*(const Rotation3& o) const;

 private:
  struct Trusted {};
  Rotation3(const Eigen::Matrix3d& m, Trusted) : m_(m) {}

  Eigen::Matrix3d m_;
};

//---------------------------------------------------------------------------//
/*!
 * Counter-based pseudo-random stream.
 *
 * The i-th 64-bit output is a fixed bijective mix of (key, i), so the
 * sequence depends only on the seed and sub-streams can be split off by
 * index without touching the parent. Uniform doubles carry 53 random bits.
 */
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  // Independent stream keyed by (this stream's key, index). Does not
  // advance this stream.
  RandomStream split(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  RandomStream(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

//---------------------------------------------------------------------------//
// Special functions. All throw DomainError for negative or NaN arguments.

// log(sinh k), overflow-free up to k = 1e6 and beyond; -inf at k = 0.
double log_sinh(double k);

// log Z(k) with Z(k) = k / (4 pi sinh k); -log(4 pi) at k = 0.
double log_norm_const(double k);

// Mean resultant length of vMF(k) on S^2: coth(k) - 1/k, in [0, 1).
double a3(double k);

// d a3 / dk = 1/k^2 - 1/sinh^2(k), in (0, 1/3].
double a3_derivative(double k);

//---------------------------------------------------------------------------//
// Minimal rotation taking `from` to `to`. Antipodal pairs rotate by pi about
// the coordinate axis least aligned with `from`, projected perpendicular.
Rotation3 align_rotation(const UnitVector3& from, const UnitVector3& to);

// Draw from the uniform distribution on S^2.
UnitVector3 uniform_sphere(RandomStream& rng);

// Deterministic orthonormal pair (e1, e2) spanning the plane normal to n,
// with e1 x e2 = n.
void tangent_basis(const UnitVector3& n, Eigen::Vector3d& e1,
                   Eigen::Vector3d& e2);

}  // namespace vmfev
