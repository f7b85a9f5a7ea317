// SPDX-License-Identifier: Apache-2.0
//
// Contact-grasp geometry. A grasp at contact point c factorizes as
//   P(g | c) ~ P(w | b, c) P(a | b, c) P(b | c)
// with baseline b drawn from the vMF posterior, approach a chosen among T
// bins perpendicular to b, and width w regressed given both.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmfev/sphere.hpp"
#include "vmfev/vmf.hpp"

namespace vmfev {

inline constexpr int kDefaultApproachBins = 12;

struct ContactGrasp {
  Eigen::Vector3d contact = Eigen::Vector3d::Zero();  // meters
  UnitVector3 baseline;
  UnitVector3 approach;
  double width = 0.0;  // meters
  double quality = 0.0;
  double total_concentration = 0.0;
};

struct ApproachBins {
  std::vector<UnitVector3> directions;
  std::vector<double> scores;
};

struct RigidTransform {
  Rotation3 rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// T directions perpendicular to the baseline at angles t pi / T, starting
// from the projection of world-down (0, 0, -1); when the baseline is
// (anti)parallel to world-down the x-axis projection is used instead.
std::vector<UnitVector3> bin_directions(const UnitVector3& baseline, int t_count);

// Cosine targets a^T bin_t. Throws DataError on empty bins.
std::vector<double> soft_bin_targets(const UnitVector3& true_approach,
                                     std::span<const UnitVector3> bins);

// Highest-scoring direction; lowest index wins ties.
UnitVector3 select_approach(const ApproachBins& bins);

using BinScoreFn = std::function<std::vector<double>(const UnitVector3& baseline,
                                                     std::span<const UnitVector3> bins)>;
using WidthFn = std::function<double(const UnitVector3& baseline, const UnitVector3& approach)>;

enum class BaselineMode { kSample, kMean };

ContactGrasp sample_grasp(const Eigen::Vector3d& contact, const VmfParams& posterior,
                          int t_count, const BinScoreFn& score_fn, const WidthFn& width_fn,
                          RandomStream& rng, BaselineMode mode = BaselineMode::kSample,
                          double quality = 1.0);

// Rotation columns (b, a x b, a), translation c + (w / 2) b. The approach is
// re-orthogonalized against b; |a^T b| > 1e-3 throws DomainError.
RigidTransform assemble_pose(const ContactGrasp& g);

// {"contact":[x,y,z], "baseline":[...], "approach":[...], "width":w,
//  "quality":q, "kappa_post":k}
std::string grasp_to_json(const ContactGrasp& g);
ContactGrasp grasp_from_json(const std::string& text);

}  // namespace vmfev
