// SPDX-License-Identifier: Apache-2.0
#include "vmfev/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "vmfev/error.hpp"

namespace vmfev {

double expected_log_likelihood(const VmfParams& post, double lik_kappa,
                               const UnitVector3& target) {
  return log_norm_const(lik_kappa) + a3(post.kappa) * lik_kappa * target.dot(post.mu);
}

double bayesian_loss(const VmfParams& post, double lik_kappa, const UnitVector3& target,
                     const BayesianLossConfig& cfg) {
  return -expected_log_likelihood(post, lik_kappa, target) - cfg.gamma * entropy(post);
}

double cosine_loss(const UnitVector3& pred_mu, const UnitVector3& target) {
  return 1.0 - target.dot(pred_mu);
}

double nll_loss(const VmfParams& pred, const UnitVector3& target) {
  return -log_pdf(pred, target);
}

BayesianLossGradient grad_bayesian_loss(const VmfParams& prior,
                                        const UnitVector3& observed_mu,
                                        const Evidence& ev, double lik_kappa,
                                        const UnitVector3& target,
                                        const BayesianLossConfig& cfg) {
  if (!(prior.kappa + ev.m > 0.0)) {
    throw DomainError("grad_bayesian_loss: prior kappa + evidence must be > 0");
  }
  // The posterior mean is the direction of u = kappa0 mu0 + m mu_c; the
  // 1 / (kappa0 + m) scale drops out under normalization.
  const Eigen::Vector3d u = prior.kappa * prior.mu.vec() + ev.m * observed_mu.vec();
  const double u_norm = u.norm();
  if (!(u_norm >= 1e-12)) {
    throw DegenerateError("grad_bayesian_loss: interpolated mean has zero norm");
  }
  const Eigen::Vector3d post_mu = u / u_norm;
  const double post_kappa = prior.kappa + ev.m;

  const Eigen::Vector3d& x = target.vec();
  const double dot = x.dot(post_mu);
  const double a_post = a3(post_kappa);
  const double da_post = a3_derivative(post_kappa);
  const double entropy_post = -log_norm_const(post_kappa) - post_kappa * a_post;

  BayesianLossGradient g;
  g.value = -(log_norm_const(lik_kappa) + a_post * lik_kappa * dot) - cfg.gamma * entropy_post;

  // x projected onto the tangent plane at mu'
  const Eigen::Vector3d x_perp = x - dot * post_mu;

  g.d_lik_kappa = a3(lik_kappa) - a_post * dot;
  // dH/dkappa' = -kappa' a3'(kappa')
  g.d_evidence = -lik_kappa * (da_post * dot + a_post * x_perp.dot(observed_mu.vec()) / u_norm) +
                 cfg.gamma * post_kappa * da_post;
  const Eigen::Vector3d ambient = (-lik_kappa * a_post * ev.m / u_norm) * x_perp;
  g.d_observed_mu = ambient - ambient.dot(observed_mu.vec()) * observed_mu.vec();
  return g;
}

DirectionalLossGradient grad_nll_loss(const VmfParams& pred, const UnitVector3& target) {
  const double dot = target.dot(pred.mu);
  DirectionalLossGradient g;
  g.value = -log_pdf(pred, target);
  g.d_kappa = a3(pred.kappa) - dot;
  g.d_mu = -pred.kappa * (target.vec() - dot * pred.mu.vec());
  return g;
}

DirectionalLossGradient grad_cosine_loss(const UnitVector3& pred_mu,
                                         const UnitVector3& target) {
  const double dot = target.dot(pred_mu);
  DirectionalLossGradient g;
  g.value = 1.0 - dot;
  g.d_mu = -(target.vec() - dot * pred_mu.vec());
  return g;
}

double soft_bin_loss(std::span<const double> scores, const UnitVector3& target_approach,
                     std::span<const UnitVector3> bins) {
  if (scores.size() != bins.size()) {
    throw DataError("soft_bin_loss: " + std::to_string(scores.size()) + " scores for " +
                    std::to_string(bins.size()) + " bins");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < bins.size(); ++t) {
    const double r = scores[t] - target_approach.dot(bins[t]);
    sum += r * r;
  }
  return sum;
}

double l1_width_loss(double pred_w, double true_w) {
  if (!(pred_w >= 0.0) || !(true_w >= 0.0)) {
    throw DomainError("l1_width_loss: widths must be >= 0");
  }
  return std::abs(pred_w - true_w);
}

double bce_loss(double pred_p, int label) {
  if (!(pred_p >= 0.0 && pred_p <= 1.0)) {
    throw DomainError("bce_loss: probability must lie in [0, 1], got " +
                      std::to_string(pred_p));
  }
  if (label != 0 && label != 1) throw DomainError("bce_loss: label must be 0 or 1");
  const double p = std::clamp(pred_p, 1e-7, 1.0 - 1e-7);
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

//---------------------------------------------------------------------------//
// Chamfer distance

namespace {

constexpr std::size_t kGridThreshold = 10000;

class PointGrid {
 public:
  explicit PointGrid(std::span<const Eigen::Vector3d> pts) : pts_(pts) {
    lo_ = pts[0];
    Eigen::Vector3d hi = pts[0];
    for (const auto& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Eigen::Vector3d ext = (hi - lo_).cwiseMax(1e-12);
    // Roughly two points per cell.
    const double cell_volume = 2.0 * ext.prod() / static_cast<double>(pts.size());
    cell_ = std::max(std::cbrt(cell_volume), 1e-12);
    for (int i = 0; i < 3; ++i) {
      dims_[i] = std::clamp<long>(static_cast<long>(ext[i] / cell_) + 1, 1, 1024);
    }
    cell_ = std::max({ext[0] / dims_[0], ext[1] / dims_[1], ext[2] / dims_[2]}) * (1.0 + 1e-12);
    start_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]) + 1, 0);
    std::vector<std::size_t> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell_of[i] = flat(cell_index(pts[i]));
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    order_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) order_[fill[cell_of[i]]++] = i;
  }

  double nearest_sq(const Eigen::Vector3d& q) const {
    const std::array<long, 3> c = cell_index(q);
    double best = std::numeric_limits<double>::infinity();
    const long max_r = std::max({dims_[0], dims_[1], dims_[2]});
    for (long r = 0; r <= max_r; ++r) {
      std::array<long, 3> lo, hi;
      for (int i = 0; i < 3; ++i) {
        lo[i] = std::max(0L, c[i] - r);
        hi[i] = std::min(dims_[i] - 1, c[i] + r);
      }
      for (long ix = lo[0]; ix <= hi[0]; ++ix) {
        for (long iy = lo[1]; iy <= hi[1]; ++iy) {
          for (long iz = lo[2]; iz <= hi[2]; ++iz) {
            // Only the shell at Chebyshev distance r is new.
            if (std::max({std::abs(ix - c[0]), std::abs(iy - c[1]), std::abs(iz - c[2])}) != r) {
              continue;
            }
            const std::size_t f = flat({ix, iy, iz});
            for (std::size_t k = start_[f]; k < start_[f + 1]; ++k) {
              best = std::min(best, (pts_[order_[k]] - q).squaredNorm());
            }
          }
        }
      }
      // Any unvisited point lies beyond an interior face of the searched box.
      double bound = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        if (lo[i] > 0) bound = std::min(bound, q[i] - (lo_[i] + lo[i] * cell_));
        if (hi[i] < dims_[i] - 1) bound = std::min(bound, (lo_[i] + (hi[i] + 1) * cell_) - q[i]);
      }
      if (bound == std::numeric_limits<double>::infinity()) break;
      bound = std::max(bound, 0.0);
      if (best <= bound * bound) break;
    }
    return best;
  }

 private:
  std::array<long, 3> cell_index(const Eigen::Vector3d& p) const {
    std::array<long, 3> c;
    for (int i = 0; i < 3; ++i) {
      c[i] = std::clamp(static_cast<long>(std::floor((p[i] - lo_[i]) / cell_)), 0L,
                        dims_[i] - 1);
    }
    return c;
  }
  std::size_t flat(const std::array<long, 3>& c) const {
    return static_cast<std::size_t>((c[0] * dims_[1] + c[1]) * dims_[2] + c[2]);
  }

  std::span<const Eigen::Vector3d> pts_;
  Eigen::Vector3d lo_;
  double cell_ = 1.0;
  std::array<long, 3> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

}  // namespace

double nearest_sq_sum(std::span<const Eigen::Vector3d> sources,
                      std::span<const Eigen::Vector3d> targets, bool use_grid) {
  if (sources.empty() || targets.empty()) {
    throw DataError("chamfer: point sets must be non-empty");
  }
  double sum = 0.0;
  if (use_grid) {
    const PointGrid grid(targets);
    for (const auto& p : sources) sum += grid.nearest_sq(p);
    return sum;
  }
  for (const auto& p : sources) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : targets) best = std::min(best, (p - q).squaredNorm());
    sum += best;
  }
  return sum;
}

double chamfer_extended(std::span<const Eigen::Vector3d> p_set,
                        std::span<const Eigen::Vector3d> q_set) {
  if (p_set.empty() || q_set.empty()) {
    throw DataError("chamfer_extended: point sets must be non-empty");
  }
  const bool grid = std::max(p_set.size(), q_set.size()) > kGridThreshold;
  return nearest_sq_sum(p_set, q_set, grid) + nearest_sq_sum(q_set, p_set, grid);
}

//---------------------------------------------------------------------------//

double weighted_sum(const LossParts& parts, const LossWeights& w) {
  return w.lambda_w * parts.width + w.lambda_c * parts.success + w.lambda_b * parts.baseline +
         w.lambda_a * parts.approach + w.lambda_z * parts.density +
         w.lambda_rec * parts.reconstruction;
}

double total_loss(std::span<const LossParts> parts, const LossWeights& w) {
  if (parts.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : parts) sum += weighted_sum(p, w);
  return sum / static_cast<double>(parts.size());
}

}  // namespace vmfev
