// SPDX-License-Identifier: Apache-2.0
//
// Diagonal-covariance Gaussian mixture over feature vectors, fit by
// expectation-maximization. Supplies the feature density p(z) from which
// evidence is derived.
#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmfev/sphere.hpp"

namespace vmfev {

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr int kDefaultGmmComponents = 20;

struct GmmModel {
  Eigen::VectorXd weights;    // k
  Eigen::MatrixXd means;      // k x d
  Eigen::MatrixXd variances;  // k x d

  int k() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  // Throws DataError when shapes disagree, weights are off the simplex
  // (1e-9) or a variance sits below the floor.
  void validate() const;
};

struct GmmFitOptions {
  int k = kDefaultGmmComponents;
  int max_iters = 200;
  double tol = 1e-8;
};

struct GmmFit {
  GmmModel model;
  // Mean per-sample training log-likelihood, one entry per E-step.
  std::vector<double> log_likelihood;
  // One message per re-seeded component.
  std::vector<std::string> reseeds;
  bool converged = false;
};

// Rows of `data` are feature vectors. k-means++ seeding from `rng`.
// Throws DataError when data has fewer rows than k or non-finite entries.
GmmFit fit_em(const Eigen::MatrixXd& data, const GmmFitOptions& opts, RandomStream& rng);

// log sum_j w_j N(z; mean_j, diag var_j). Throws DataError on dimension
// mismatch.
double log_density(const GmmModel& model, std::span<const double> z);
double log_density(const GmmModel& model, const Eigen::VectorXd& z);

// log_density divided by the feature dimension.
double log_density_per_dim(const GmmModel& model, const Eigen::VectorXd& z);

// {"k":..., "dim":..., "weights":[...], "means":[[...]], "variances":[[...]]}
std::string gmm_to_json(const GmmModel& model);
GmmModel gmm_from_json(const std::string& text);

}  // namespace vmfev
