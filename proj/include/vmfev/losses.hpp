// SPDX-License-Identifier: Apache-2.0
//
// Training objectives for contact grasps: the analytical Bayesian loss on a
// vMF posterior, its first-order baselines, the auxiliary grasp terms and
// their weighted total.
#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "vmfev/natpn.hpp"
#include "vmfev/sphere.hpp"
#include "vmfev/vmf.hpp"

namespace vmfev {

inline constexpr double kDefaultGamma = 1e-3;

struct BayesianLossConfig {
  double gamma = kDefaultGamma;  // entropy discount, >= 0
};

struct LossWeights {
  double lambda_w = 10.0;
  double lambda_c = 0.1;
  double lambda_b = 0.1;
  double lambda_a = 0.1;
  double lambda_z = 0.0001;
  double lambda_rec = 10.0;
};

// Per-sample loss terms entering the weighted total.
struct LossParts {
  double width = 0.0;
  double success = 0.0;
  double baseline = 0.0;
  double approach = 0.0;
  double density = 0.0;
  double reconstruction = 0.0;
};

//---------------------------------------------------------------------------//
// Baseline-vector losses

// E_{mu ~ post}[log vMF(target; mu, lik_kappa)]
//   = log Z(lik_kappa) + a3(post.kappa) lik_kappa target^T post.mu
double expected_log_likelihood(const VmfParams& post, double lik_kappa,
                               const UnitVector3& target);

// -ELL - gamma H(post)
double bayesian_loss(const VmfParams& post, double lik_kappa, const UnitVector3& target,
                     const BayesianLossConfig& cfg);

double cosine_loss(const UnitVector3& pred_mu, const UnitVector3& target);

double nll_loss(const VmfParams& pred, const UnitVector3& target);

//---------------------------------------------------------------------------//
// Gradients. Direction gradients are tangent vectors: the ambient gradient
// projected orthogonal to the differentiated unit vector.

struct BayesianLossGradient {
  double value = 0.0;
  Eigen::Vector3d d_observed_mu = Eigen::Vector3d::Zero();
  double d_lik_kappa = 0.0;
  double d_evidence = 0.0;
};

// Gradient of bayesian_loss with the posterior formed by
// posterior_update(prior, observed_mu, ev).
BayesianLossGradient grad_bayesian_loss(const VmfParams& prior,
                                        const UnitVector3& observed_mu,
                                        const Evidence& ev, double lik_kappa,
                                        const UnitVector3& target,
                                        const BayesianLossConfig& cfg);

struct DirectionalLossGradient {
  double value = 0.0;
  Eigen::Vector3d d_mu = Eigen::Vector3d::Zero();
  double d_kappa = 0.0;
};

DirectionalLossGradient grad_nll_loss(const VmfParams& pred, const UnitVector3& target);
DirectionalLossGradient grad_cosine_loss(const UnitVector3& pred_mu,
                                         const UnitVector3& target);

//---------------------------------------------------------------------------//
// Grasp auxiliary losses

// sum_t (score_t - a^T bin_t)^2. Throws DataError on length mismatch.
double soft_bin_loss(std::span<const double> scores, const UnitVector3& target_approach,
                     std::span<const UnitVector3> bins);

// |pred - true|; throws DomainError on negative widths.
double l1_width_loss(double pred_w, double true_w);

// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double bce_loss(double pred_p, int label);

// sum_p min_q |p - q|^2 + sum_q min_p |q - p|^2. Throws DataError on empty
// input. Sets above 1e4 points use a uniform-grid nearest-neighbour search.
double chamfer_extended(std::span<const Eigen::Vector3d> p_set,
                        std::span<const Eigen::Vector3d> q_set);

// Sum over sources of the squared distance to the nearest target point.
double nearest_sq_sum(std::span<const Eigen::Vector3d> sources,
                      std::span<const Eigen::Vector3d> targets, bool use_grid);

//---------------------------------------------------------------------------//

double weighted_sum(const LossParts& parts, const LossWeights& w);

// (1/N) sum_i weighted_sum(parts_i); 0 for an empty batch.
double total_loss(std::span<const LossParts> parts, const LossWeights& w = {});

}  // namespace vmfev
