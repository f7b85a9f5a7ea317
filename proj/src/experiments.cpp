// SPDX-License-Identifier: Apache-2.0
#include "vmfev/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>

#include <Eigen/QR>
#include <json.hpp>

#include "vmfev/error.hpp"
#include "vmfev/io.hpp"
#include "vmfev/vmf.hpp"

namespace vmfev {

//---------------------------------------------------------------------------//
// Synthetic data

double SynthConfig::kappa_of(int cluster) const {
  return true_kappas.size() == 1 ? true_kappas[0] : true_kappas.at(static_cast<std::size_t>(cluster));
}

void SynthConfig::validate() const {
  if (cluster_count < 1) throw DomainError("synth: cluster_count must be >= 1");
  if (points_per_cluster < 1) throw DomainError("synth: points_per_cluster must be >= 1");
  if (ood_points_per_cluster < 0) throw DomainError("synth: ood_points_per_cluster must be >= 0");
  if (feature_dim < 1) throw DomainError("synth: feature_dim must be >= 1");
  if (true_kappas.empty() ||
      (true_kappas.size() != 1 && static_cast<int>(true_kappas.size()) != cluster_count)) {
    throw DomainError("synth: true_kappas needs one value or one per cluster");
  }
  for (double k : true_kappas) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("synth: true_kappas must be > 0");
  }
  if (!(feature_noise_sigma >= 0.0)) throw DomainError("synth: feature_noise_sigma must be >= 0");
  if (!(embedding_scale >= 0.0)) throw DomainError("synth: embedding_scale must be >= 0");
  if (!(ood_shift >= 0.0)) throw DomainError("synth: ood_shift must be >= 0");
  if (!cluster_means.empty() && static_cast<int>(cluster_means.size()) != cluster_count) {
    throw DomainError("synth: cluster_means needs one direction per cluster");
  }
}

Dataset gen_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const RandomStream root(cfg.seed);
  RandomStream means_rng = root.split(0);
  RandomStream embed_rng = root.split(1);
  RandomStream axis_rng = root.split(2);
  RandomStream point_rng = root.split(3);
  const int d = cfg.feature_dim;

  std::vector<UnitVector3> means = cfg.cluster_means;
  if (means.empty()) {
    for (int j = 0; j < cfg.cluster_count; ++j) means.push_back(uniform_sphere(means_rng));
  }
  std::vector<Eigen::VectorXd> embeddings;
  for (int j = 0; j < cfg.cluster_count; ++j) {
    Eigen::VectorXd e(d);
    for (int i = 0; i < d; ++i) e[i] = cfg.embedding_scale * embed_rng.normal();
    embeddings.push_back(e);
  }
  Eigen::VectorXd axis(d);
  do {
    for (int i = 0; i < d; ++i) axis[i] = axis_rng.normal();
  } while (axis.norm() < 1e-12);
  axis.normalize();

  Dataset data;
  data.feature_dim = d;
  data.cluster_count = cfg.cluster_count;
  for (int j = 0; j < cfg.cluster_count; ++j) data.cluster_kappas.push_back(cfg.kappa_of(j));
  data.cluster_means = means;

  auto make_point = [&](int j, bool ood) {
    SynthPoint p;
    p.cluster = j;
    p.ood = ood;
    p.feature = embeddings[j];
    for (int i = 0; i < d; ++i) p.feature[i] += cfg.feature_noise_sigma * point_rng.normal();
    if (ood) p.feature += cfg.ood_shift * cfg.feature_noise_sigma * axis;
    p.x = sample_one(VmfParams(means[j], cfg.kappa_of(j)), point_rng);
    return p;
  };
  for (int j = 0; j < cfg.cluster_count; ++j) {
    for (int i = 0; i < cfg.points_per_cluster; ++i) data.points.push_back(make_point(j, false));
  }
  for (int j = 0; j < cfg.cluster_count; ++j) {
    for (int i = 0; i < cfg.ood_points_per_cluster; ++i) data.points.push_back(make_point(j, true));
  }
  return data;
}

bool is_heldout_ordinal(std::size_t id_ordinal) { return id_ordinal % 10 >= 7; }

//---------------------------------------------------------------------------//
// Loss kinds

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kCosine:
      return "cosine";
    case LossKind::kNll:
      return "nll";
    case LossKind::kBayesian:
      return "bayesian";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "cosine") return LossKind::kCosine;
  if (s == "nll") return LossKind::kNll;
  if (s == "bayesian") return LossKind::kBayesian;
  throw DomainError("unknown loss kind '" + s + "' (expected cosine, nll or bayesian)");
}

//---------------------------------------------------------------------------//
// Linear predictor

namespace {

double softplus(double s) { return s > 30.0 ? s : std::log1p(std::exp(s)); }
double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

// Affine map from standardized features to (raw direction r, kappa logit s):
// mu_c = r / |r|, kappa_c = softplus(s).
struct LinearPredictor {
  Eigen::MatrixXd w_mu;  // 3 x d
  Eigen::Vector3d b_mu;
  Eigen::VectorXd w_kappa;  // d
  double b_kappa = 0.0;
  Eigen::VectorXd shift;  // feature standardization
  Eigen::VectorXd scale;

  Eigen::VectorXd standardize(const Eigen::VectorXd& z) const {
    return (z - shift).cwiseQuotient(scale);
  }
};

struct Prediction {
  Eigen::Vector3d raw;
  UnitVector3 mu;
  double logit = 0.0;
  double kappa = 0.0;
};

Prediction predict(const LinearPredictor& p, const Eigen::VectorXd& z_std) {
  Prediction out;
  out.raw = p.w_mu * z_std + p.b_mu;
  out.mu = UnitVector3(out.raw);
  out.logit = p.w_kappa.dot(z_std) + p.b_kappa;
  out.kappa = softplus(out.logit);
  return out;
}

struct Split {
  std::vector<std::size_t> train, heldout, ood;
};

Split split_points(const Dataset& data) {
  Split s;
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    if (data.points[i].ood) {
      s.ood.push_back(i);
    } else if (is_heldout_ordinal(ordinal++)) {
      s.heldout.push_back(i);
    } else {
      s.train.push_back(i);
    }
  }
  return s;
}

}  // namespace

FitReport fit(const Dataset& data, LossKind kind, const FitOptions& opts) {
  if (opts.iterations < 0 || !(opts.step_size > 0.0)) {
    throw DomainError("fit: iterations must be >= 0 and step_size > 0");
  }
  if (!(opts.gamma >= 0.0)) throw DomainError("fit: gamma must be >= 0");
  for (const auto& p : data.points) {
    if (p.cluster < 0 || p.cluster >= data.cluster_count) throw DataError("fit: bad cluster id");
    if (p.feature.size() != data.feature_dim) throw DataError("fit: feature dimension mismatch");
  }
  const Split split = split_points(data);
  if (split.train.size() < static_cast<std::size_t>(std::max(opts.gmm_k, 2)) ||
      split.heldout.size() < 10) {
    throw DataError("fit: dataset too small for the train / held-out split");
  }
  const int d = data.feature_dim;
  const std::size_t n_train = split.train.size();

  // Per-cluster priors from the known normals; without them, the normalized
  // resultant of the training directions stands in.
  std::vector<VmfParams> priors;
  if (!data.cluster_means.empty()) {
    if (static_cast<int>(data.cluster_means.size()) != data.cluster_count) {
      throw DataError("fit: cluster_means size does not match cluster_count");
    }
    for (const auto& m : data.cluster_means) priors.push_back(informative_prior(-m));
  } else {
    std::vector<Eigen::Vector3d> resultant(static_cast<std::size_t>(data.cluster_count),
                                           Eigen::Vector3d::Zero());
    for (std::size_t i : split.train) {
      const auto& p = data.points[i];
      resultant[static_cast<std::size_t>(p.cluster)] += p.x.vec();
    }
    for (const auto& r : resultant) {
      if (r.norm() < 1e-12) throw DataError("fit: cluster without training directions");
      priors.push_back(informative_prior(-UnitVector3(r)));
    }
  }
  // Feature density and evidence.
  Eigen::MatrixXd train_features(static_cast<Eigen::Index>(n_train), d);
  for (std::size_t r = 0; r < n_train; ++r) {
    train_features.row(static_cast<Eigen::Index>(r)) = data.points[split.train[r]].feature.transpose();
  }
  RandomStream root(opts.seed);
  RandomStream gmm_rng = root.split(0);
  GmmFitOptions gmm_opts;
  gmm_opts.k = opts.gmm_k;
  gmm_opts.max_iters = opts.gmm_max_iters;
  const GmmModel gmm = fit_em(train_features, gmm_opts, gmm_rng).model;
  const double n_h = opts.n_h > 0.0 ? opts.n_h : static_cast<double>(n_train);
  const CertaintyBudget budget(n_h);
  auto evidence_of = [&](const SynthPoint& p) {
    const double ld = opts.density_mode == DensityMode::kRaw ? log_density(gmm, p.feature)
                                                             : log_density_per_dim(gmm, p.feature);
    return evidence_from_log_density(ld, budget, opts.m_max);
  };

  // Predictor initialization.
  LinearPredictor pred;
  pred.shift = train_features.colwise().mean().transpose();
  pred.scale = ((train_features.rowwise() - pred.shift.transpose()).array().square().colwise().mean())
                   .sqrt()
                   .transpose();
  for (int i = 0; i < d; ++i) {
    if (!(pred.scale[i] > 1e-12)) pred.scale[i] = 1.0;
  }
  std::vector<Eigen::VectorXd> z_train;
  std::vector<Evidence> ev_train;
  for (std::size_t i : split.train) {
    z_train.push_back(pred.standardize(data.points[i].feature));
    ev_train.push_back(evidence_of(data.points[i]));
  }

  // Direction head starts from the least-squares fit of x on [z, 1].
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n_train), d + 1);
  Eigen::MatrixXd targets(static_cast<Eigen::Index>(n_train), 3);
  for (std::size_t r = 0; r < n_train; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    design.row(row).head(d) = z_train[r].transpose();
    design(row, d) = 1.0;
    targets.row(row) = data.points[split.train[r]].x.vec().transpose();
  }
  const Eigen::MatrixXd coef = design.colPivHouseholderQr().solve(targets);  // (d+1) x 3
  pred.w_mu = coef.topRows(d).transpose();
  pred.b_mu = coef.row(d).transpose();
  pred.w_kappa = Eigen::VectorXd::Zero(d);
  pred.b_kappa = std::log(std::expm1(1.0));  // kappa_c = 1

  const BayesianLossConfig bcfg{opts.gamma};
  FitReport report;
  report.loss_kind = kind;
  report.seed = opts.seed;
  report.n_h = n_h;
  report.loss_trace.reserve(static_cast<std::size_t>(opts.iterations));

  for (int iter = 0; iter < opts.iterations; ++iter) {
    Eigen::MatrixXd g_w = Eigen::MatrixXd::Zero(3, d);
    Eigen::Vector3d g_b = Eigen::Vector3d::Zero();
    Eigen::VectorXd g_wk = Eigen::VectorXd::Zero(d);
    double g_bk = 0.0;
    double loss = 0.0;
    for (std::size_t r = 0; r < n_train; ++r) {
      const SynthPoint& p = data.points[split.train[r]];
      Prediction pr;
      try {
        pr = predict(pred, z_train[r]);
      } catch (const DomainError& e) {
        throw DivergenceError("fit: " + std::string(e.what()) + " at iteration " + std::to_string(iter),
                              iter);
      }
      Eigen::Vector3d d_mu;
      double d_kappa = 0.0;
      switch (kind) {
        case LossKind::kCosine: {
          const auto g = grad_cosine_loss(pr.mu, p.x);
          loss += g.value;
          d_mu = g.d_mu;
          break;
        }
        case LossKind::kNll: {
          const auto g = grad_nll_loss(VmfParams(pr.mu, pr.kappa), p.x);
          loss += g.value;
          d_mu = g.d_mu;
          d_kappa = g.d_kappa;
          break;
        }
        case LossKind::kBayesian: {
          const auto g = grad_bayesian_loss(priors[static_cast<std::size_t>(p.cluster)], pr.mu,
                                            ev_train[r], pr.kappa, p.x, bcfg);
          loss += g.value;
          d_mu = g.d_observed_mu;
          d_kappa = g.d_lik_kappa;
          break;
        }
      }
      // d_mu is tangent at mu, so dL/dr = d_mu / |r|.
      const Eigen::Vector3d d_raw = d_mu / pr.raw.norm();
      g_w += d_raw * z_train[r].transpose();
      g_b += d_raw;
      const double d_logit = d_kappa * sigmoid(pr.logit);
      g_wk += d_logit * z_train[r];
      g_bk += d_logit;
    }
    const double inv_n = 1.0 / static_cast<double>(n_train);
    loss *= inv_n;
    if (!std::isfinite(loss)) {
      throw DivergenceError("fit: non-finite loss at iteration " + std::to_string(iter), iter);
    }
    report.loss_trace.push_back(loss);
    pred.w_mu -= opts.step_size * inv_n * g_w;
    pred.b_mu -= opts.step_size * inv_n * g_b;
    pred.w_kappa -= opts.step_size * inv_n * g_wk;
    pred.b_kappa -= opts.step_size * inv_n * g_bk;
    if (!pred.w_mu.allFinite() || !pred.b_mu.allFinite() || !pred.w_kappa.allFinite() ||
        !std::isfinite(pred.b_kappa)) {
      throw DivergenceError("fit: non-finite parameters after iteration " + std::to_string(iter), iter);
    }
  }

  // Held-out evaluation.
  std::vector<double> aleatoric_unc, epistemic_unc, random_unc, fitted_kappa;
  RandomStream order_rng = root.split(2);
  double err_sum = 0.0;
  for (std::size_t i : split.heldout) {
    const SynthPoint& p = data.points[i];
    const Prediction pr = predict(pred, pred.standardize(p.feature));
    const Evidence ev = evidence_of(p);
    UnitVector3 mu_hat = pr.mu;
    if (kind == LossKind::kBayesian) {
      const VmfParams post =
          posterior_update(priors[static_cast<std::size_t>(p.cluster)], pr.mu, ev);
      mu_hat = post.mu;
      report.heldout_kappa_post.push_back(post.kappa);
      epistemic_unc.push_back(1.0 / post.kappa);
    }
    const double err = std::clamp(1.0 - p.x.dot(mu_hat), 0.0, 2.0);
    err_sum += err;
    report.heldout_errors.push_back(err);
    report.heldout_kappa_lik.push_back(pr.kappa);
    if (!data.cluster_kappas.empty()) {
      report.heldout_true_kappa.push_back(data.cluster_kappas.at(static_cast<std::size_t>(p.cluster)));
    }
    aleatoric_unc.push_back(1.0 / pr.kappa);
    random_unc.push_back(order_rng.uniform());
    report.id_evidence.push_back(ev.m);
  }
  report.cosine_error = err_sum / static_cast<double>(split.heldout.size());
  report.aleatoric = sparsification(report.heldout_errors, aleatoric_unc);
  report.random_order = sparsification(report.heldout_errors, random_unc);
  if (kind == LossKind::kBayesian) {
    report.epistemic = sparsification(report.heldout_errors, epistemic_unc);
  }
  const auto& tk = report.heldout_true_kappa;
  if (!tk.empty() && std::adjacent_find(tk.begin(), tk.end(), std::not_equal_to<>()) != tk.end()) {
    report.kappa_spearman = spearman(report.heldout_kappa_lik, report.heldout_true_kappa);
  }

  for (std::size_t i : split.ood) report.ood_evidence.push_back(evidence_of(data.points[i]).m);
  if (!report.ood_evidence.empty()) {
    std::vector<double> all = report.id_evidence;
    all.insert(all.end(), report.ood_evidence.begin(), report.ood_evidence.end());
    std::vector<bool> is_ood(report.id_evidence.size(), false);
    is_ood.resize(all.size(), true);
    report.ood_auroc = ood_auroc(all, is_ood);
  }
  return report;
}

std::vector<FitReport> run_seeds(const SynthConfig& cfg, LossKind kind, const FitOptions& opts,
                                 std::span<const std::uint64_t> seeds, unsigned threads) {
  std::vector<FitReport> out(seeds.size());
  auto run_one = [&](std::size_t i) {
    SynthConfig c = cfg;
    c.seed = seeds[i];
    FitOptions o = opts;
    o.seed = seeds[i];
    out[i] = fit(gen_dataset(c), kind, o);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < seeds.size(); i = next++) run_one(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

//---------------------------------------------------------------------------//
// Metrics

namespace {

std::vector<double> prefix_curve(std::span<const double> errors,
                                 const std::vector<std::size_t>& order) {
  const std::size_t n = errors.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + errors[order[i]];
  std::vector<double> curve(100);
  for (std::size_t k = 1; k <= 100; ++k) {
    const std::size_t count = (k * n + 99) / 100;
    curve[k - 1] = prefix[count] / static_cast<double>(count);
  }
  return curve;
}

double trapezoid_unit(const std::vector<double>& y) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) area += 0.5 * (y[i] + y[i + 1]);
  return area / static_cast<double>(y.size() - 1);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

SparsificationResult sparsification(std::span<const double> errors,
                                    std::span<const double> uncertainties) {
  if (errors.size() != uncertainties.size()) {
    throw DataError("sparsification: " + std::to_string(errors.size()) + " errors vs " +
                    std::to_string(uncertainties.size()) + " uncertainties");
  }
  if (errors.size() < 10) throw DataError("sparsification: need at least 10 points");
  const std::size_t n = errors.size();

  std::vector<std::size_t> by_unc(n), by_err(n);
  std::iota(by_unc.begin(), by_unc.end(), 0);
  std::iota(by_err.begin(), by_err.end(), 0);
  std::stable_sort(by_unc.begin(), by_unc.end(),
                   [&](std::size_t a, std::size_t b) { return uncertainties[a] < uncertainties[b]; });
  std::stable_sort(by_err.begin(), by_err.end(),
                   [&](std::size_t a, std::size_t b) { return errors[a] < errors[b]; });

  SparsificationResult out;
  out.curve = prefix_curve(errors, by_unc);
  out.oracle_curve = prefix_curve(errors, by_err);
  std::vector<double> gap(100);
  for (std::size_t k = 0; k < 100; ++k) gap[k] = std::abs(out.curve[k] - out.oracle_curve[k]);
  out.ausc = 100.0 * trapezoid_unit(out.curve);
  out.ause = 100.0 * trapezoid_unit(gap);
  return out;
}

double ood_auroc(std::span<const double> evidences, const std::vector<bool>& is_ood) {
  if (evidences.size() != is_ood.size()) throw DataError("ood_auroc: length mismatch");
  std::uint64_t n_ood = 0;
  for (bool b : is_ood) n_ood += b ? 1 : 0;
  const std::uint64_t n_id = is_ood.size() - n_ood;
  if (n_ood == 0 || n_id == 0) throw DataError("ood_auroc: both classes must be present");

  // Score s = -evidence; count OOD/ID pairs with s_ood > s_id (full credit)
  // and ties (half credit), walking groups of equal scores in ascending order.
  std::vector<std::size_t> idx(evidences.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return -evidences[a] < -evidences[b]; });
  std::uint64_t greater = 0, ties = 0, id_below = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t g_ood = 0, g_id = 0;
    while (j < idx.size() && -evidences[idx[j]] == -evidences[idx[i]]) {
      if (is_ood[idx[j]]) {
        ++g_ood;
      } else {
        ++g_id;
      }
      ++j;
    }
    greater += g_ood * id_below;
    ties += g_ood * g_id;
    id_below += g_id;
    i = j;
  }
  return static_cast<double>(2 * greater + ties) / static_cast<double>(2 * n_ood * n_id);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("spearman: need equal lengths >= 2");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

//---------------------------------------------------------------------------//
// Serialization

namespace {

nlohmann::json sparsification_json(const std::optional<SparsificationResult>& s, bool ausc) {
  if (!s) return nullptr;
  return ausc ? s->ausc : s->ause;
}

}  // namespace

std::vector<std::size_t> rank_by_concentration(std::span<const ContactGrasp> grasps,
                                               ConcentrationOrder order) {
  std::vector<std::size_t> idx(grasps.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ka = grasps[a].total_concentration, kb = grasps[b].total_concentration;
    return order == ConcentrationOrder::kAscending ? ka < kb : ka > kb;
  });
  return idx;
}

std::string fit_report_to_json(const FitReport& r) {
  nlohmann::json j;
  j["loss_kind"] = to_string(r.loss_kind);
  j["seed"] = r.seed;
  j["metric_scale"] = 100;
  j["metric_note"] = "AUSC/AUSE are trapezoid areas over k = 1..100% on a unit axis, x100";
  j["cosine_error"] = r.cosine_error;
  j["ausc_aleatoric"] = r.aleatoric.ausc;
  j["ause_aleatoric"] = r.aleatoric.ause;
  j["ausc_epistemic"] = sparsification_json(r.epistemic, true);
  j["ause_epistemic"] = sparsification_json(r.epistemic, false);
  j["ausc_random"] = r.random_order.ausc;
  j["ause_random"] = r.random_order.ause;
  j["ood_auroc"] = r.ood_auroc;
  j["kappa_spearman"] = r.kappa_spearman ? nlohmann::json(*r.kappa_spearman) : nlohmann::json(nullptr);
  j["n_h"] = r.n_h;
  j["heldout_count"] = r.heldout_errors.size();
  j["ood_count"] = r.ood_evidence.size();
  j["loss_trace"] = r.loss_trace;
  return j.dump();
}

std::string dataset_to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& p : d.points) {
    nlohmann::json j;
    j["x"] = {p.x.x(), p.x.y(), p.x.z()};
    j["feature"] = std::vector<double>(p.feature.data(), p.feature.data() + p.feature.size());
    j["cluster"] = p.cluster;
    j["ood"] = p.ood;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_jsonl(const std::string& text) {
  Dataset d;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    try {
      const auto j = nlohmann::json::parse(line);
      SynthPoint p;
      const auto x = j.at("x").get<std::vector<double>>();
      if (x.size() != 3) throw DataError("x must have 3 entries");
      p.x = UnitVector3(x[0], x[1], x[2]);
      const auto f = j.at("feature").get<std::vector<double>>();
      if (f.empty()) throw DataError("empty feature");
      if (d.feature_dim == 0) d.feature_dim = static_cast<int>(f.size());
      if (static_cast<int>(f.size()) != d.feature_dim) throw DataError("inconsistent feature dimension");
      p.feature = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
      if (!p.feature.allFinite()) throw DataError("non-finite feature");
      p.cluster = j.at("cluster").get<int>();
      if (p.cluster < 0) throw DataError("negative cluster id");
      p.ood = j.at("ood").get<bool>();
      d.cluster_count = std::max(d.cluster_count, p.cluster + 1);
      d.points.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (d.points.empty()) throw DataError("dataset: no records");
  return d;
}

std::string curve_to_csv(const SparsificationResult& s) {
  std::string out = "k,curve,oracle_curve\n";
  for (std::size_t k = 0; k < s.curve.size(); ++k) {
    out += std::to_string(k + 1) + "," + format_double(s.curve[k]) + "," +
           format_double(s.oracle_curve[k]) + "\n";
  }
  return out;
}

}  // namespace vmfev
