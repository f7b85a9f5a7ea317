#include <cmath>

#include <gtest/gtest.h>

#include "vmfev/error.hpp"
#include "vmfev/mc_oracle.hpp"
#include "vmfev/power_spherical.hpp"

using namespace vmfev;

namespace {
const UnitVector3 kZ(0.0, 0.0, 1.0);
}

TEST(PsLogNorm, ClosedForm) {
  // Normalizer of (1 + t)^k over the sphere: 2 pi * 2^(k+1) / (k+1).
  for (double k : {0.0, 1.0, 2.5, 10.0}) {
    EXPECT_NEAR(ps_log_norm(k), std::log(2.0 * kPi * std::pow(2.0, k + 1.0) / (k + 1.0)), 1e-12);
  }
}

TEST(PsLogPdf, UniformAndAntipode) {
  RandomStream rng(1);
  EXPECT_NEAR(ps_log_pdf(PsParams(kZ, 0.0), uniform_sphere(rng)), -kLog4Pi, 1e-15);
  EXPECT_NEAR(ps_log_pdf(PsParams(kZ, 0.0), -kZ), -kLog4Pi, 1e-15);
  const double v = ps_log_pdf(PsParams(kZ, 2.0), -kZ);
  EXPECT_TRUE(std::isinf(v) && v < 0.0);
}

TEST(PsLogPdf, IntegratesToOne) {
  for (double k : {1.0, 5.0}) {
    const PsParams p(UnitVector3(0.2, 0.5, 1.0), k);
    const auto est = mc_mean(
        1000000, RandomStream(3),
        [&](RandomStream& r) { return 4.0 * kPi * std::exp(ps_log_pdf(p, uniform_sphere(r))); });
    EXPECT_LT(std::abs(est.value - 1.0), 3.0 * est.std_error) << k;
  }
}

TEST(PsSample, UniformWhenKappaZero) {
  RandomStream rng(4);
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  for (const auto& x : ps_sample(PsParams(kZ, 0.0), 100000, rng)) s += x.vec();
  EXPECT_LT((s / 100000.0).norm(), 0.01);
}

TEST(PsSample, MeanCosine) {
  for (double k : {1.0, 2.0, 10.0}) {
    const PsParams p(UnitVector3(-1.0, 0.5, 0.2), k);
    const auto est =
        mc_mean(100000, RandomStream(5), [&](RandomStream& r) { return p.mu.dot(ps_sample_one(p, r)); });
    EXPECT_LT(std::abs(est.value - k / (k + 2.0)), 3.0 * est.std_error) << k;
  }
}

TEST(PsSample, PoleAndAntipoleMeans) {
  // Householder reflection degenerates when mu is the pole; both cases must work.
  for (const UnitVector3& mu : {kZ, -kZ}) {
    const PsParams p(mu, 2.0);
    const auto est =
        mc_mean(100000, RandomStream(6), [&](RandomStream& r) { return ps_sample_one(p, r).z(); });
    EXPECT_LT(std::abs(est.value - 0.5 * mu.z()), 3.0 * est.std_error);
  }
}

TEST(PsSample, Deterministic) {
  RandomStream a(7), b(7);
  const auto xa = ps_sample(PsParams(kZ, 3.0), 10, a);
  const auto xb = ps_sample(PsParams(kZ, 3.0), 10, b);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(xa[i], xb[i]);
}

TEST(Surrogate, SameParameters) {
  const VmfParams v(UnitVector3(1, 2, 3), 5.0);
  const PsParams p = surrogate_from_vmf(v);
  EXPECT_EQ(p.mu, v.mu);
  EXPECT_EQ(p.kappa, v.kappa);
  EXPECT_EQ(surrogate_from_vmf(VmfParams(kZ, 0.0)).kappa, 0.0);
}

TEST(Surrogate, BiasIsNonZero) {
  // E_PS and E_vMF of the same integrand differ; the gap is reported, never zero.
  for (double k : {0.5, 2.0, 10.0}) {
    const VmfParams v(kZ, k);
    const auto a = mc_expected_loglik(v, 5.0, kZ, 200000, RandomStream(8), SamplerKind::kVmf);
    const auto b =
        mc_expected_loglik(v, 5.0, kZ, 200000, RandomStream(8), SamplerKind::kPowerSpherical);
    EXPECT_GT(std::abs(a.value - b.value), 3.0 * std::hypot(a.std_error, b.std_error)) << k;
  }
}
