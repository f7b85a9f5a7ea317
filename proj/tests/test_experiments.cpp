#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "vmfev/error.hpp"
#include "vmfev/experiments.hpp"

using namespace vmfev;

namespace {

// Brute-force Mann-Whitney over all pairs with -evidence as the score.
double brute_auroc(const std::vector<double>& ev, const std::vector<bool>& ood) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (!ood[i]) continue;
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (ood[j]) continue;
      den += 1.0;
      if (ev[i] < ev[j]) num += 1.0;
      else if (ev[i] == ev[j]) num += 0.5;
    }
  }
  return num / den;
}

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.cluster_count = 3;
  cfg.points_per_cluster = 200;
  cfg.ood_points_per_cluster = 30;
  cfg.true_kappas = {50.0, 200.0, 800.0};
  cfg.seed = seed;
  return cfg;
}

FitOptions quick_options() {
  FitOptions o;
  o.iterations = 300;
  o.gmm_k = 3;
  return o;
}

}  // namespace

TEST(GenDataset, ShapeAndDeterminism) {
  const SynthConfig cfg = small_config(1);
  const Dataset a = gen_dataset(cfg);
  const Dataset b = gen_dataset(cfg);
  ASSERT_EQ(a.points.size(), 3u * 230u);
  EXPECT_EQ(dataset_to_jsonl(a), dataset_to_jsonl(b));
  EXPECT_EQ(a.cluster_kappas, (std::vector<double>{50.0, 200.0, 800.0}));
  ASSERT_EQ(a.cluster_means.size(), 3u);
  std::size_t ood = 0;
  for (const auto& p : a.points) {
    EXPECT_EQ(p.feature.size(), cfg.feature_dim);
    EXPECT_NEAR(p.x.vec().norm(), 1.0, 1e-12);
    ood += p.ood;
  }
  EXPECT_EQ(ood, 90u);
  EXPECT_NE(dataset_to_jsonl(gen_dataset(small_config(2))), dataset_to_jsonl(a));
}

TEST(GenDataset, DirectionsConcentrateAroundClusterMeans) {
  const Dataset d = gen_dataset(small_config(3));
  std::vector<double> sum(3, 0.0), count(3, 0.0);
  for (const auto& p : d.points) {
    if (p.ood) continue;
    sum[p.cluster] += p.x.dot(d.cluster_means[p.cluster]);
    count[p.cluster] += 1.0;
  }
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(sum[c] / count[c], a3(d.cluster_kappas[c]), 0.01) << c;
}

TEST(GenDataset, Validation) {
  SynthConfig cfg = small_config(1);
  cfg.true_kappas = {1.0, 2.0};
  EXPECT_THROW(gen_dataset(cfg), DomainError);
  cfg = small_config(1);
  cfg.feature_dim = 0;
  EXPECT_THROW(gen_dataset(cfg), DomainError);
}

TEST(HeldoutSplit, ThirtyPercent) {
  int held = 0;
  for (std::size_t i = 0; i < 1000; ++i) held += is_heldout_ordinal(i);
  EXPECT_EQ(held, 300);
  EXPECT_FALSE(is_heldout_ordinal(6));
  EXPECT_TRUE(is_heldout_ordinal(7));
}

TEST(Sparsification, HandExample) {
  // Uncertainty sorted like the error: curve equals the oracle, AUSE = 0.
  std::vector<double> err(10), unc(10);
  for (int i = 0; i < 10; ++i) {
    err[i] = i + 1.0;
    unc[i] = 0.1 * i;
  }
  const auto r = sparsification(err, unc);
  ASSERT_EQ(r.curve.size(), 100u);
  EXPECT_EQ(r.ause, 0.0);
  EXPECT_EQ(r.curve[0], 1.0);
  EXPECT_EQ(r.curve[99], 5.5);
  // k = 15 keeps ceil(1.5) = 2 points.
  EXPECT_EQ(r.curve[14], 1.5);
}

TEST(Sparsification, MatchesDirectTrapezoid) {
  RandomStream rng(4);
  std::vector<double> err(137), unc(137);
  for (std::size_t i = 0; i < err.size(); ++i) {
    err[i] = rng.uniform();
    unc[i] = rng.uniform() + 0.5 * err[i];
  }
  const auto r = sparsification(err, unc);
  std::vector<std::size_t> idx(err.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return unc[a] < unc[b]; });
  std::vector<double> curve;
  for (int k = 1; k <= 100; ++k) {
    const auto n = static_cast<std::size_t>(std::ceil(k * 137.0 / 100.0));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += err[idx[i]];
    curve.push_back(s / n);
  }
  double area = 0.0;
  for (int k = 0; k < 99; ++k) area += 0.5 * (curve[k] + curve[k + 1]) / 99.0;
  EXPECT_NEAR(r.ausc, 100.0 * area, 1e-9);
  EXPECT_GE(r.ause, 0.0);
  EXPECT_THROW(sparsification(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0)), DataError);
  EXPECT_THROW(sparsification(err, std::vector<double>(3, 1.0)), DataError);
}

TEST(OodAuroc, MatchesBruteForce) {
  RandomStream rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> ev;
    std::vector<bool> ood;
    for (int i = 0; i < 150; ++i) {
      ood.push_back(rng.uniform() < 0.3);
      // Coarse values force ties.
      ev.push_back(std::floor(10.0 * rng.uniform()) - (ood.back() ? 2.0 : 0.0));
    }
    if (std::count(ood.begin(), ood.end(), true) == 0) continue;
    EXPECT_DOUBLE_EQ(ood_auroc(ev, ood), brute_auroc(ev, ood));
  }
  EXPECT_EQ(ood_auroc(std::vector<double>{1.0, 2.0, 3.0}, {true, false, false}), 1.0);
  EXPECT_EQ(ood_auroc(std::vector<double>{1.0, 1.0}, {true, false}), 0.5);
  EXPECT_THROW(ood_auroc(std::vector<double>{1.0, 2.0}, {false, false}), DataError);
}

TEST(Spearman, Examples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  EXPECT_NEAR(spearman(a, std::vector<double>{10, 20, 30, 40, 50}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(a, std::vector<double>{5, 4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(spearman(a, std::vector<double>{1, 4, 9, 16, 1000}), 1.0, 1e-15);
  // Average ranks: y ranks (1.5, 1.5, 3, 4, 5).
  EXPECT_NEAR(spearman(a, std::vector<double>{0, 0, 1, 2, 3}), 0.9746794344808963, 1e-12);
}

TEST(Fit, BayesianProducesEpistemicAndDetectsOod) {
  SynthConfig cfg = small_config(6);
  cfg.ood_shift = 10.0;
  const FitReport r = fit(gen_dataset(cfg), LossKind::kBayesian, quick_options());
  ASSERT_TRUE(r.epistemic.has_value());
  EXPECT_EQ(r.heldout_errors.size(), r.heldout_kappa_post.size());
  EXPECT_LT(r.cosine_error, 0.1);
  EXPECT_GT(r.ood_auroc, 0.95);
  ASSERT_TRUE(r.kappa_spearman.has_value());
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) ASSERT_TRUE(std::isfinite(r.loss_trace[i]));
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
  EXPECT_EQ(fit_report_to_json(r).find("\"ausc_epistemic\":null"), std::string::npos);
}

TEST(Fit, NonBayesianHasNoEpistemic) {
  const Dataset d = gen_dataset(small_config(7));
  for (LossKind k : {LossKind::kCosine, LossKind::kNll}) {
    const FitReport r = fit(d, k, quick_options());
    EXPECT_FALSE(r.epistemic.has_value());
    EXPECT_TRUE(r.heldout_kappa_post.empty());
    EXPECT_LT(r.cosine_error, 0.1) << to_string(k);
  }
}

TEST(Fit, DeterministicAcrossThreads) {
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  FitOptions o = quick_options();
  o.iterations = 50;
  const auto a = run_seeds(small_config(1), LossKind::kBayesian, o, seeds, 1);
  const auto b = run_seeds(small_config(1), LossKind::kBayesian, o, seeds, 3);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed, seeds[i]);
    EXPECT_EQ(fit_report_to_json(a[i]), fit_report_to_json(b[i]));
  }
}

TEST(Fit, DivergenceIsReported) {
  FitOptions o = quick_options();
  o.step_size = 1e300;
  EXPECT_THROW(fit(gen_dataset(small_config(8)), LossKind::kNll, o), DivergenceError);
}

TEST(LossKindNames, RoundTrip) {
  for (LossKind k : {LossKind::kCosine, LossKind::kNll, LossKind::kBayesian}) {
    EXPECT_EQ(loss_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(loss_kind_from_string("hinge"), DomainError);
}

TEST(DatasetJsonl, RoundTrip) {
  const Dataset d = gen_dataset(small_config(9));
  const Dataset back = dataset_from_jsonl(dataset_to_jsonl(d));
  ASSERT_EQ(back.points.size(), d.points.size());
  EXPECT_EQ(back.feature_dim, d.feature_dim);
  EXPECT_EQ(back.cluster_count, d.cluster_count);
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    EXPECT_EQ(back.points[i].feature, d.points[i].feature);
    EXPECT_LT((back.points[i].x.vec() - d.points[i].x.vec()).norm(), 1e-15);
    EXPECT_EQ(back.points[i].ood, d.points[i].ood);
  }
  EXPECT_THROW(dataset_from_jsonl("{\"x\":[1,0,0]}\n"), DataError);
  try {
    dataset_from_jsonl(dataset_to_jsonl(d) + "garbage\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(CurveCsv, Header) {
  std::vector<double> err(20, 1.0), unc(20, 0.0);
  const std::string csv = curve_to_csv(sparsification(err, unc));
  EXPECT_EQ(csv.rfind("k,curve,oracle_curve\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 101);
}

TEST(GenDataset, AntipodalClustersMatchMoment) {
  SynthConfig cfg;
  cfg.cluster_count = 2;
  cfg.points_per_cluster = 20000;
  cfg.ood_points_per_cluster = 0;
  cfg.true_kappas = {100.0};
  cfg.cluster_means = {UnitVector3(0, 0, 1), UnitVector3(0, 0, -1)};
  const Dataset d = gen_dataset(cfg);
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double n = 0.0;
    for (const auto& p : d.points) {
      if (p.cluster != c) continue;
      sum += p.x.vec();
      n += 1.0;
    }
    EXPECT_LT(std::abs((sum / n).norm() - a3(100.0)), 3.0 / std::sqrt(n)) << c;
    EXPECT_GT((sum / n).dot(cfg.cluster_means[c].vec()), 0.98);
  }
}

TEST(Fit, NoShiftMeansNoSeparation) {
  SynthConfig cfg;
  cfg.ood_shift = 0.0;
  cfg.ood_points_per_cluster = 500;
  FitOptions o;
  o.iterations = 10;
  const FitReport r = fit(gen_dataset(cfg), LossKind::kBayesian, o);
  EXPECT_NEAR(r.ood_auroc, 0.5, 0.05);
}

TEST(Fit, NearNoiselessCeiling) {
  SynthConfig cfg = small_config(10);
  cfg.true_kappas = {1e4};
  cfg.feature_noise_sigma = 0.0;
  const Dataset d = gen_dataset(cfg);
  FitOptions o;
  o.gmm_k = 3;
  for (LossKind k : {LossKind::kCosine, LossKind::kNll, LossKind::kBayesian}) {
    EXPECT_LT(fit(d, k, o).cosine_error, 0.01) << to_string(k);
  }
}

TEST(Fit, FittedConcentrationTracksTruth) {
  SynthConfig cfg;
  cfg.cluster_count = 4;
  cfg.points_per_cluster = 400;
  cfg.ood_points_per_cluster = 40;
  cfg.true_kappas = {5.0, 200.0, 5.0, 200.0};
  cfg.seed = 11;
  const Dataset d = gen_dataset(cfg);
  for (LossKind k : {LossKind::kNll, LossKind::kBayesian}) {
    const FitReport r = fit(d, k, FitOptions{});
    ASSERT_TRUE(r.kappa_spearman.has_value());
    EXPECT_GE(*r.kappa_spearman, 0.8) << to_string(k);
  }
}

TEST(Fit, OodEvidenceBelowId) {
  const FitReport r = fit(gen_dataset(SynthConfig{}), LossKind::kBayesian, FitOptions{});
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  EXPECT_LT(median(r.ood_evidence), median(r.id_evidence));
  EXPECT_GE(r.ood_auroc, 0.9);
}

TEST(RankByConcentration, BothOrders) {
  std::vector<ContactGrasp> g(4);
  const double k[] = {3.0, 1.0, 3.0, 0.5};
  for (int i = 0; i < 4; ++i) g[i].total_concentration = k[i];
  EXPECT_EQ(rank_by_concentration(g, ConcentrationOrder::kAscending),
            (std::vector<std::size_t>{3, 1, 0, 2}));
  EXPECT_EQ(rank_by_concentration(g, ConcentrationOrder::kDescending),
            (std::vector<std::size_t>{0, 2, 1, 3}));
  EXPECT_TRUE(rank_by_concentration({}, ConcentrationOrder::kAscending).empty());
}

TEST(Sparsification, ConstantErrorsAndBruteForce) {
  const std::vector<double> err(40, 0.25);
  RandomStream rng(12);
  std::vector<double> unc(40);
  for (auto& u : unc) u = rng.uniform();
  const auto flat = sparsification(err, unc);
  EXPECT_NEAR(flat.ausc, 25.0, 1e-12);
  EXPECT_EQ(flat.ause, 0.0);

  // Independent O(n^2) recomputation: rank each point by counting.
  std::vector<double> e(1000), u(1000);
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = rng.uniform();
    u[i] = e[i] + rng.normal();
  }
  auto rank_curve = [&](const std::vector<double>& key) {
    std::vector<double> sorted(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      std::size_t pos = 0;
      for (std::size_t j = 0; j < e.size(); ++j) pos += key[j] < key[i] || (key[j] == key[i] && j < i);
      sorted[pos] = e[i];
    }
    std::vector<double> curve;
    for (int k = 1; k <= 100; ++k) {
      const std::size_t n = (static_cast<std::size_t>(k) * e.size() + 99) / 100;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += sorted[i];
      curve.push_back(s / static_cast<double>(n));
    }
    return curve;
  };
  const auto c = rank_curve(u), oc = rank_curve(e);
  double ausc = 0.0, ause = 0.0;
  for (int k = 0; k < 99; ++k) {
    ausc += 0.5 * (c[k] + c[k + 1]) / 99.0;
    ause += 0.5 * (std::abs(c[k] - oc[k]) + std::abs(c[k + 1] - oc[k + 1])) / 99.0;
  }
  const auto r = sparsification(e, u);
  EXPECT_NEAR(r.ausc, 100.0 * ausc, 1e-9);
  EXPECT_NEAR(r.ause, 100.0 * ause, 1e-9);
}
