// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale synthetic evaluation: directional data with cluster-structured
// features, a linear (mu, kappa) predictor trained under the cosine, NLL or
// Bayesian loss, and sparsification / OOD metrics on a held-out split.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmfev/gmm.hpp"
#include "vmfev/grasp.hpp"
#include "vmfev/losses.hpp"
#include "vmfev/natpn.hpp"
#include "vmfev/sphere.hpp"

namespace vmfev {

struct SynthConfig {
  int cluster_count = 4;
  int points_per_cluster = 1000;
  int ood_points_per_cluster = 150;
  // One value per cluster, or a single value shared by all clusters.
  std::vector<double> true_kappas{5000.0};
  int feature_dim = 4;
  double feature_noise_sigma = 0.15;
  // Standard deviation of the random cluster embeddings.
  double embedding_scale = 3.0;
  // OOD translation, in units of feature_noise_sigma.
  double ood_shift = 10.0;
  std::uint64_t seed = 1;
  // Optional fixed cluster mean directions; drawn uniformly when empty.
  std::vector<UnitVector3> cluster_means;

  double kappa_of(int cluster) const;
  // Throws DomainError on out-of-range fields.
  void validate() const;
};

struct SynthPoint {
  UnitVector3 x;
  Eigen::VectorXd feature;
  int cluster = 0;
  bool ood = false;
};

struct Dataset {
  std::vector<SynthPoint> points;
  int feature_dim = 0;
  int cluster_count = 0;
  // Generating concentrations per cluster; empty when unknown (e.g. loaded
  // from JSONL).
  std::vector<double> cluster_kappas;
  // Generating mean directions per cluster; empty when unknown. The negated
  // mean plays the role of the surface normal for the informative prior.
  std::vector<UnitVector3> cluster_means;
};

Dataset gen_dataset(const SynthConfig& cfg);

// In-distribution points are split by their ordinal among ID points:
// ordinals with (i mod 10) >= 7 are held out. OOD points are never trained on.
bool is_heldout_ordinal(std::size_t id_ordinal);

//---------------------------------------------------------------------------//

enum class LossKind { kCosine, kNll, kBayesian };
enum class DensityMode { kRaw, kPerDim };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct FitOptions {
  int iterations = 2000;
  double step_size = 1e-2;
  double gamma = kDefaultGamma;
  // Certainty budget; <= 0 selects the training-set size.
  double n_h = 0.0;
  double m_max = kDefaultMaxEvidence;
  int gmm_k = kDefaultGmmComponents;
  int gmm_max_iters = 200;
  DensityMode density_mode = DensityMode::kRaw;
  std::uint64_t seed = 1;
};

struct SparsificationResult {
  double ausc = 0.0;
  double ause = 0.0;
  std::vector<double> curve;         // k = 1..100
  std::vector<double> oracle_curve;  // k = 1..100
};

struct FitReport {
  LossKind loss_kind = LossKind::kCosine;
  std::uint64_t seed = 0;
  double cosine_error = 0.0;
  SparsificationResult aleatoric;
  std::optional<SparsificationResult> epistemic;
  SparsificationResult random_order;
  double ood_auroc = 0.5;
  // Rank correlation of fitted kappa_c with the generating kappa, when known.
  std::optional<double> kappa_spearman;
  double n_h = 0.0;
  std::vector<double> loss_trace;

  // Held-out ID diagnostics, aligned by index.
  std::vector<double> heldout_errors;
  std::vector<double> heldout_kappa_lik;
  std::vector<double> heldout_kappa_post;  // empty unless Bayesian
  std::vector<double> heldout_true_kappa;
  std::vector<double> id_evidence;
  std::vector<double> ood_evidence;
};

// Raised when the training loss becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

FitReport fit(const Dataset& data, LossKind kind, const FitOptions& opts);

// Runs gen_dataset + fit for each seed (seed overrides both configs).
// Independent seeds may run on separate threads; output order follows `seeds`.
std::vector<FitReport> run_seeds(const SynthConfig& cfg, LossKind kind, const FitOptions& opts,
                                 std::span<const std::uint64_t> seeds, unsigned threads = 1);

//---------------------------------------------------------------------------//
// Metrics

// curve(k) = mean error of the ceil(k n / 100) least-uncertain points
// (stable order), oracle curve sorts by error itself. Areas use the
// trapezoid rule over k = 1..100 mapped onto [0, 1], scaled by 100.
// Throws DataError on length mismatch or fewer than 10 points.
SparsificationResult sparsification(std::span<const double> errors,
                                    std::span<const double> uncertainties);

// Mann-Whitney AUROC of -evidence as the OOD score; ties count 1/2.
// Throws DataError unless both classes are present.
double ood_auroc(std::span<const double> evidences, const std::vector<bool>& is_ood);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// Grasp ranking by posterior concentration. Which end counts as "best" is
// left to the caller. Ties keep input order.
enum class ConcentrationOrder { kAscending, kDescending };
std::vector<std::size_t> rank_by_concentration(std::span<const ContactGrasp> grasps,
                                               ConcentrationOrder order);

// JSON / JSONL / CSV forms.
std::string fit_report_to_json(const FitReport& r);
std::string dataset_to_jsonl(const Dataset& d);
Dataset dataset_from_jsonl(const std::string& text);
std::string curve_to_csv(const SparsificationResult& s);

}  // namespace vmfev
