// SPDX-License-Identifier: Apache-2.0
#include "vmfev/grasp.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include <json.hpp>

#include "vmfev/error.hpp"

namespace vmfev {

std::vector<UnitVector3> bin_directions(const UnitVector3& baseline, int t_count) {
  if (t_count < 2) throw DomainError("bin_directions: need at least 2 bins");
  const Eigen::Vector3d& b = baseline.vec();
  const Eigen::Vector3d down(0.0, 0.0, -1.0);
  Eigen::Vector3d ref = down;
  if (std::abs(b.dot(down)) > 1.0 - 1e-9) ref = Eigen::Vector3d::UnitX();
  const UnitVector3 r0(ref - ref.dot(b) * b);

  std::vector<UnitVector3> dirs;
  dirs.reserve(static_cast<std::size_t>(t_count));
  for (int t = 0; t < t_count; ++t) {
    const double angle = kPi * t / t_count;
    // Rodrigues about b; r0 is perpendicular to b so the axial term vanishes.
    const Eigen::Vector3d d = std::cos(angle) * r0.vec() + std::sin(angle) * b.cross(r0.vec());
    dirs.emplace_back(d);
  }
  return dirs;
}

std::vector<double> soft_bin_targets(const UnitVector3& true_approach,
                                     std::span<const UnitVector3> bins) {
  if (bins.empty()) throw DataError("soft_bin_targets: no bins");
  std::vector<double> out;
  out.reserve(bins.size());
  for (const auto& d : bins) out.push_back(true_approach.dot(d));
  return out;
}

UnitVector3 select_approach(const ApproachBins& bins) {
  if (bins.directions.empty() || bins.scores.size() != bins.directions.size()) {
    throw DataError("select_approach: scores must match bin directions");
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t < bins.scores.size(); ++t) {
    if (bins.scores[t] > bins.scores[best]) best = t;
  }
  return bins.directions[best];
}

ContactGrasp sample_grasp(const Eigen::Vector3d& contact, const VmfParams& posterior,
                          int t_count, const BinScoreFn& score_fn, const WidthFn& width_fn,
                          RandomStream& rng, BaselineMode mode, double quality) {
  if (!(quality >= 0.0 && quality <= 1.0)) {
    throw DomainError("sample_grasp: quality must lie in [0, 1]");
  }
  ContactGrasp g;
  g.contact = contact;
  g.baseline = mode == BaselineMode::kMean ? posterior.mu : sample_one(posterior, rng);

  ApproachBins bins;
  bins.directions = bin_directions(g.baseline, t_count);
  bins.scores = score_fn(g.baseline, bins.directions);
  g.approach = select_approach(bins);

  g.width = width_fn(g.baseline, g.approach);
  if (!(g.width >= 0.0)) throw DomainError("sample_grasp: width must be >= 0");
  g.quality = quality;
  g.total_concentration = posterior.kappa;
  return g;
}

RigidTransform assemble_pose(const ContactGrasp& g) {
  const Eigen::Vector3d& b = g.baseline.vec();
  const double ab = g.approach.dot(b);
  if (std::abs(ab) > 1e-3) {
    throw DomainError("assemble_pose: approach is not perpendicular to baseline");
  }
  const Eigen::Vector3d a_perp = g.approach.vec() - ab * b;
  const double n = a_perp.norm();
  if (n < 1e-9) throw DomainError("assemble_pose: approach parallel to baseline");
  const Eigen::Vector3d a = a_perp / n;

  Eigen::Matrix3d r;
  r.col(0) = b;
  r.col(1) = a.cross(b);
  r.col(2) = a;
  RigidTransform t;
  t.rotation = Rotation3(r);
  t.translation = g.contact + 0.5 * g.width * b;
  return t;
}

namespace {

nlohmann::json vec_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw DataError("grasp_from_json: expected a 3-vector");
  return {v[0], v[1], v[2]};
}

}  // namespace

std::string grasp_to_json(const ContactGrasp& g) {
  nlohmann::json j;
  j["contact"] = vec_json(g.contact);
  j["baseline"] = vec_json(g.baseline.vec());
  j["approach"] = vec_json(g.approach.vec());
  j["width"] = g.width;
  j["quality"] = g.quality;
  j["kappa_post"] = g.total_concentration;
  return j.dump();
}

ContactGrasp grasp_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ContactGrasp g;
    g.contact = json_vec(j.at("contact"));
    g.baseline = UnitVector3(json_vec(j.at("baseline")));
    g.approach = UnitVector3(json_vec(j.at("approach")));
    g.width = j.at("width").get<double>();
    g.quality = j.at("quality").get<double>();
    g.total_concentration = j.at("kappa_post").get<double>();
    if (!(g.width >= 0.0) || !(g.quality >= 0.0 && g.quality <= 1.0) ||
        !(g.total_concentration >= 0.0)) {
      throw DataError("grasp_from_json: field out of range");
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("grasp_from_json: ") + e.what());
  }
}

}  // namespace vmfev
