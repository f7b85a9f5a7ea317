// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo estimators with standard errors for the closed-form
// quantities of the vMF posterior. Sampling is split into fixed-size chunks,
// chunk i drawing from rng.split(i), and chunk sums are reduced in chunk
// order, so results are bit-identical for any thread count.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vmfev/sphere.hpp"
#include "vmfev/vmf.hpp"

namespace vmfev {

inline constexpr std::size_t kMcChunkSize = 8192;

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

enum class SamplerKind { kVmf, kPowerSpherical };

struct McOptions {
  unsigned threads = 1;
};

// Mean and standard error of f over `s` draws. `draw_and_eval` receives a
// chunk-local stream and returns one integrand value.
McEstimate mc_mean(std::size_t s, const RandomStream& rng,
                   const std::function<double(RandomStream&)>& draw_and_eval,
                   const McOptions& opts = {});

// (1/S) sum log vMF(target; mu_s, lik_kappa), mu_s ~ posterior (or its
// Power Spherical surrogate). Requires s >= 100.
McEstimate mc_expected_loglik(const VmfParams& post, double lik_kappa,
                              const UnitVector3& target, std::size_t s,
                              const RandomStream& rng, SamplerKind kind = SamplerKind::kVmf,
                              const McOptions& opts = {});

// -(1/S) sum log_pdf(p, x_s), x_s ~ p. Requires s >= 100.
McEstimate mc_entropy(const VmfParams& p, std::size_t s, const RandomStream& rng,
                      const McOptions& opts = {});

// |analytic - value| / std_error. With std_error = 0 the comparison is
// exact up to 1e-12 relative: 0 on agreement, +inf otherwise.
double z_score(double analytic, const McEstimate& est);

//---------------------------------------------------------------------------//
// Grid verification of the analytic expected log-likelihood.

struct EllGridPoint {
  double kappa_post = 0.0;
  double kappa_lik = 0.0;
  double dot = 0.0;
  double analytic = 0.0;
  McEstimate mc;
  double z = 0.0;
};

struct EllGridSpec {
  std::vector<double> kappa_posts{0.1, 1.0, 2.0, 5.0, 50.0};
  std::vector<double> kappa_liks{0.5, 2.0, 5.0, 10.0};
  std::vector<double> dots{-1.0, 0.0, 0.5, 0.8, 1.0};
};

// Posterior mean fixed at (0, 0, 1); the target sits at the requested
// cosine in the x-z plane. Grid point i draws from rng.split(i).
std::vector<EllGridPoint> verify_ell_grid(const EllGridSpec& grid, std::size_t s,
                                          const RandomStream& rng,
                                          SamplerKind kind = SamplerKind::kVmf,
                                          const McOptions& opts = {});

// Fraction of grid points with z < z_max.
double grid_pass_fraction(const std::vector<EllGridPoint>& points, double z_max = 3.0);

}  // namespace vmfev
