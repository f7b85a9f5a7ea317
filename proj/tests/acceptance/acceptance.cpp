// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vmfev/experiments.hpp"
#include "vmfev/losses.hpp"
#include "vmfev/mc_oracle.hpp"
#include "vmfev/natpn.hpp"
#include "vmfev/power_spherical.hpp"
#include "vmfev/vmf.hpp"

using namespace vmfev;

namespace {

const UnitVector3 kZ(0.0, 0.0, 1.0);

UnitVector3 at_dot(double dot) { return UnitVector3(std::sqrt(1.0 - dot * dot), 0.0, dot); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
    pass = pass && ok;
  }

  std::string summary() const {
    std::string s = detail.str();
    if (!failures.empty()) {
      s += " | failed: " + failures.front();
      if (failures.size() > 1) s += " (+" + std::to_string(failures.size() - 1) + " more)";
    }
    return s;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

//---------------------------------------------------------------------------//

void ell_vs_mc(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = verify_ell_grid(EllGridSpec{}, 100000, RandomStream(1), SamplerKind::kVmf, {1});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double frac = grid_pass_fraction(grid, 3.0);
  o.require(grid.size() == 100, "grid has " + std::to_string(grid.size()) + " points");
  o.require(frac >= 0.99, "pass fraction " + fmt(frac));
  o.require(secs < 60.0, "runtime " + fmt(secs) + " s");
  o.detail << "points=" << grid.size() << " z<3 fraction=" << fmt(frac) << " runtime=" << fmt(secs)
           << "s (1 thread)";
}

void entropy_vs_mc(Outcome& o) {
  double worst = 0.0;
  for (double k : {0.1, 1.0, 5.0, 50.0}) {
    const VmfParams p(kZ, k);
    const auto est = mc_entropy(p, 1000000, RandomStream(2), {worker_threads()});
    const double z = z_score(entropy(p), est);
    worst = std::max(worst, z);
    o.require(z < 3.0, "kappa " + fmt(k) + " z=" + fmt(z));
  }
  const double limit = std::log(4.0 * kPi);
  const double gap0 = std::abs(entropy(VmfParams(kZ, 0.0)) - limit);
  const double gap_small = std::abs(entropy(VmfParams(kZ, 1e-10)) - limit);
  o.require(gap0 < 1e-8 && gap_small < 1e-8, "kappa->0 gap " + fmt(std::max(gap0, gap_small)));
  o.require(std::abs(limit - 2.531024) < 5e-7, "log 4pi reference");
  o.detail << "max z=" << fmt(worst) << " |H(0)-log4pi|=" << fmt(gap0)
           << " |H(1e-10)-log4pi|=" << fmt(gap_small);
}

void limit_identities(Outcome& o) {
  double worst_lo = 0.0, worst_hi = 0.0;
  for (double k : {0.5, 5.0}) {
    for (double dot : {-1.0, 0.8}) {
      const double lo = std::abs(expected_log_likelihood(VmfParams(kZ, 1e-9), k, at_dot(dot)) -
                                 log_norm_const(k));
      const double ref = log_norm_const(k) + k * dot;
      const double hi =
          std::abs(expected_log_likelihood(VmfParams(kZ, 1e6), k, at_dot(dot)) - ref) / std::abs(ref);
      worst_lo = std::max(worst_lo, lo);
      worst_hi = std::max(worst_hi, hi);
      o.require(lo < 1e-8, "uniform limit kappa=" + fmt(k) + " dot=" + fmt(dot));
      o.require(hi < 1e-5, "concentrated limit kappa=" + fmt(k) + " dot=" + fmt(dot));
    }
  }
  o.detail << "max |ELL(1e-9)-logZ|=" << fmt(worst_lo)
           << " max rel |ELL(1e6)-(logZ+k dot)|=" << fmt(worst_hi);
}

void gradient_contract(Outcome& o) {
  const double h = 1e-5;
  RandomStream rng(4);
  int checked = 0;
  double worst = 0.0;
  auto close = [&](double a, double fd) {
    const double rel = std::abs(a - fd) / std::max(std::abs(fd), 1e-3);
    worst = std::max(worst, rel);
    return rel <= 1e-5;
  };
  for (int t = 0; t < 100; ++t) {
    const double kp = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    const double k0 = kp * (0.05 + 0.9 * rng.uniform());
    const double m = kp - k0;
    const UnitVector3 obs = uniform_sphere(rng);
    UnitVector3 mu0 = uniform_sphere(rng);
    while (mu0.dot(obs) < -0.9) mu0 = uniform_sphere(rng);
    const VmfParams prior(mu0, k0);
    const double k = 0.1 + 49.9 * rng.uniform();
    const UnitVector3 target = uniform_sphere(rng);
    const BayesianLossConfig cfg{rng.uniform()};
    auto f = [&](const UnitVector3& o_mu, double mm, double kk) {
      return bayesian_loss(posterior_update(prior, o_mu, Evidence(mm)), kk, target, cfg);
    };
    const auto g = grad_bayesian_loss(prior, obs, Evidence(m), k, target, cfg);
    bool ok = close(g.d_lik_kappa, (f(obs, m, k + h) - f(obs, m, k - h)) / (2 * h));
    ok = close(g.d_evidence, (f(obs, m + h, k) - f(obs, m - h, k)) / (2 * h)) && ok;
    Eigen::Vector3d e[2];
    tangent_basis(obs, e[0], e[1]);
    for (const auto& dir : e) {
      const double fd =
          (f(UnitVector3(obs.vec() + h * dir), m, k) - f(UnitVector3(obs.vec() - h * dir), m, k)) / (2 * h);
      ok = close(g.d_observed_mu.dot(dir), fd) && ok;
    }
    o.require(ok, "configuration " + std::to_string(t));
    ++checked;
  }
  o.detail << "configs=" << checked << " max rel err=" << fmt(worst) << " (rel floor 1e-3)";
}

void sampler_moments(Outcome& o) {
  const std::size_t s = 100000;
  RandomStream root(5);
  double worst = 0.0;
  for (double k : {0.1, 1.0, 5.0, 50.0}) {
    RandomStream rng = root.split(static_cast<std::uint64_t>(k * 10));
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& x : sample(VmfParams(kZ, k), s, rng)) sum += x.vec();
    const double gap = std::abs((sum / static_cast<double>(s)).norm() - a3(k));
    const double bound = 3.0 / std::sqrt(static_cast<double>(s));
    worst = std::max(worst, gap / bound);
    o.require(gap < bound, "vMF kappa " + fmt(k) + " gap " + fmt(gap));
  }
  double worst_ps = 0.0;
  for (double k : {1.0, 2.0, 10.0}) {
    const PsParams p(UnitVector3(0.3, -0.2, 0.9), k);
    const auto est = mc_mean(s, root.split(100 + static_cast<std::uint64_t>(k)),
                             [&](RandomStream& r) { return p.mu.dot(ps_sample_one(p, r)); });
    const double z = z_score(k / (k + 2.0), est);
    worst_ps = std::max(worst_ps, z);
    o.require(z < 3.0, "PS kappa " + fmt(k) + " z=" + fmt(z));
  }
  o.detail << "vMF max gap/(3/sqrt S)=" << fmt(worst) << " PS max z=" << fmt(worst_ps);
}

void numerical_stability(Outcome& o) {
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const double k = std::pow(10.0, -8.0 + 14.0 * i / 9999.0);
    const VmfParams p(kZ, k);
    bool ok = std::isfinite(log_norm_const(k)) && std::isfinite(a3(k)) && std::isfinite(entropy(p));
    for (double dot : {-1.0, 0.0, 0.8, 1.0}) {
      ok = ok && std::isfinite(expected_log_likelihood(p, k, at_dot(dot)));
      ok = ok && std::isfinite(expected_log_likelihood(VmfParams(kZ, 1.0), k, at_dot(dot)));
    }
    bad += !ok;
  }
  o.require(bad == 0, std::to_string(bad) + " grid points non-finite");
  const double z1000 = log_norm_const(1000.0);
  const double target = -994.930146;
  o.require(std::abs(z1000 - target) <= 1e-6,
            "log_norm_const(1000)=" + fmt(z1000) + " vs required " + fmt(target) + " +- 1e-6");
  char buf[128];
  std::snprintf(buf, sizeof buf, "non-finite=%d log_norm_const(1000)=%.12f |diff|=%.3g", bad, z1000,
                std::abs(z1000 - target));
  o.detail << buf;
}

void posterior_algebra(Outcome& o) {
  RandomStream rng(7);
  double worst_batch = 0.0;
  for (int t = 0; t < 200; ++t) {
    const VmfParams prior(uniform_sphere(rng), 0.01 + 10.0 * rng.uniform());
    const VmfParams same = posterior_update(prior, uniform_sphere(rng), Evidence(0.0));
    o.require(same.mu == prior.mu && same.kappa == prior.kappa, "m = 0 changed the prior");

    std::vector<UnitVector3> obs;
    std::vector<Evidence> ev;
    for (int i = 0; i < 5; ++i) {
      obs.push_back(uniform_sphere(rng));
      ev.emplace_back(20.0 * rng.uniform());
    }
    PosteriorAccumulator seq = PosteriorAccumulator::from_prior(prior);
    double kappa_sum = prior.kappa;
    for (int i = 0; i < 5; ++i) {
      seq.accumulate(obs[i], ev[i]);
      kappa_sum += ev[i].m;
    }
    PosteriorAccumulator part;
    for (int i = 4; i >= 0; --i) part.accumulate(obs[i], ev[i]);
    PosteriorAccumulator batch = PosteriorAccumulator::from_prior(prior);
    batch.merge(part);
    const double gap = std::max((seq.weighted_sum - batch.weighted_sum).norm(),
                                std::abs(seq.total_count - batch.total_count));
    worst_batch = std::max(worst_batch, gap);
    o.require(gap <= 1e-12, "sequential vs batch gap " + fmt(gap));
    o.require(seq.finalize().kappa == kappa_sum, "kappa' != kappa0 + sum m");

    const VmfParams single = posterior_update(prior, obs[0], ev[0]);
    o.require(single.kappa == prior.kappa + ev[0].m, "single-step kappa not additive");
  }
  const VmfParams exact =
      conjugate_posterior(VmfParams(kZ, 1.0), 1.0, std::vector<UnitVector3>{UnitVector3(1, 0, 0)});
  const double map_gap = (exact.mu.vec() - Eigen::Vector3d(1.0, 0.0, 1.0) / std::sqrt(2.0)).norm();
  o.require(map_gap <= 1e-12, "hand example mean gap " + fmt(map_gap));
  o.require(std::abs(exact.kappa - std::sqrt(2.0)) <= 1e-12, "hand example concentration");
  o.detail << "max seq/batch gap=" << fmt(worst_batch) << " MAP gap=" << fmt(map_gap);
}

double brute_chamfer(const std::vector<Eigen::Vector3d>& p, const std::vector<Eigen::Vector3d>& q) {
  auto one_way = [](const auto& a_set, const auto& b_set) {
    double sum = 0.0;
    for (const auto& a : a_set) {
      double best = 1e300;
      for (const auto& b : b_set) best = std::min(best, (a - b).squaredNorm());
      sum += best;
    }
    return sum;
  };
  return one_way(p, q) + one_way(q, p);
}

double brute_auroc(const std::vector<double>& ev, const std::vector<bool>& ood) {
  std::uint64_t wins2 = 0, pairs = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (!ood[i] || ood[j]) continue;
      ++pairs;
      wins2 += ev[i] < ev[j] ? 2 : (ev[i] == ev[j] ? 1 : 0);
    }
  }
  return static_cast<double>(wins2) / (2.0 * static_cast<double>(pairs));
}

void oracle_equivalences(Outcome& o) {
  RandomStream rng(8);
  int chamfer_bad = 0, ause_bad = 0, auroc_bad = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Eigen::Vector3d> p, q;
    for (int i = 0; i < 50; ++i) {
      p.emplace_back(rng.normal(), rng.normal(), rng.normal());
      q.emplace_back(rng.normal(), rng.normal(), rng.normal());
    }
    chamfer_bad += chamfer_extended(p, q) != brute_chamfer(p, q);

    std::vector<double> err(200);
    for (auto& e : err) e = rng.uniform();
    ause_bad += sparsification(err, err).ause != 0.0;

    std::vector<double> ev;
    std::vector<bool> ood;
    for (int i = 0; i < 120; ++i) {
      ood.push_back(i % 4 == 0);
      ev.push_back(std::floor(20.0 * rng.uniform()) - (ood.back() ? 5.0 : 0.0));
    }
    auroc_bad += ood_auroc(ev, ood) != brute_auroc(ev, ood);
  }
  o.require(chamfer_bad == 0, std::to_string(chamfer_bad) + " chamfer mismatches");
  o.require(ause_bad == 0, std::to_string(ause_bad) + " nonzero oracle AUSE");
  o.require(auroc_bad == 0, std::to_string(auroc_bad) + " AUROC mismatches");
  o.detail << "100 instances each: chamfer, oracle-ordered AUSE, AUROC all exact";
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

void benchmark_trend(Outcome& o, std::vector<FitReport>& bayes) {
  const SynthConfig cfg;
  const FitOptions opts;
  const auto cos = run_seeds(cfg, LossKind::kCosine, opts, kSeeds, worker_threads());
  bayes = run_seeds(cfg, LossKind::kBayesian, opts, kSeeds, worker_threads());
  std::vector<double> err_cos, err_bayes, ause_ep, ause_rand;
  for (const auto& r : cos) err_cos.push_back(r.cosine_error);
  for (const auto& r : bayes) {
    err_bayes.push_back(r.cosine_error);
    ause_ep.push_back(r.epistemic->ause);
    ause_rand.push_back(r.random_order.ause);
  }
  const double ratio = mean(ause_ep) / mean(ause_rand);
  o.require(mean(err_bayes) <= mean(err_cos),
            "bayesian error " + fmt(mean(err_bayes)) + " > cosine " + fmt(mean(err_cos)));
  o.require(ratio <= 0.5, "AUSE ratio " + fmt(ratio));
  o.detail << "cosine error: bayesian=" << fmt(mean(err_bayes)) << " cosine=" << fmt(mean(err_cos))
           << "; AUSE epistemic=" << fmt(mean(ause_ep)) << " random=" << fmt(mean(ause_rand))
           << " ratio=" << fmt(ratio);
}

void evidence_separation(Outcome& o, const std::vector<FitReport>& shifted) {
  SynthConfig cfg;
  cfg.ood_shift = 0.0;
  const auto unshifted = run_seeds(cfg, LossKind::kBayesian, FitOptions{}, kSeeds, worker_threads());
  o.detail << "shift 10:";
  for (const auto& r : shifted) {
    o.require(r.ood_auroc >= 0.9, "seed " + std::to_string(r.seed) + " shift 10 AUROC " + fmt(r.ood_auroc));
    o.detail << " " << fmt(r.ood_auroc);
  }
  o.detail << "; shift 0:";
  for (const auto& r : unshifted) {
    o.require(r.ood_auroc >= 0.45 && r.ood_auroc <= 0.55,
              "seed " + std::to_string(r.seed) + " shift 0 AUROC " + fmt(r.ood_auroc));
    o.detail << " " << fmt(r.ood_auroc);
  }
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  std::vector<FitReport> bayes;
  const std::vector<Criterion> criteria{
      {"expected log-likelihood vs Monte Carlo", ell_vs_mc},
      {"entropy vs Monte Carlo and uniform limit", entropy_vs_mc},
      {"expected log-likelihood limit identities", limit_identities},
      {"Bayesian loss gradient vs finite differences", gradient_contract},
      {"sampler moments", sampler_moments},
      {"numerical stability", numerical_stability},
      {"posterior algebra", posterior_algebra},
      {"oracle equivalences", oracle_equivalences},
      {"benchmark trend (5 seeds)", [&](Outcome& o) { benchmark_trend(o, bayes); }},
      {"evidence separation (5 seeds)", [&](Outcome& o) { evidence_separation(o, bayes); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
