// SPDX-License-Identifier: Apache-2.0
#include "vmfev/mc_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "vmfev/error.hpp"
#include "vmfev/losses.hpp"
#include "vmfev/power_spherical.hpp"

namespace vmfev {
namespace {

struct ChunkSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  // Shift for a numerically stable variance: values are accumulated as
  // (f - shift).
  double shift = 0.0;
  std::size_t n = 0;
};

void require_samples(std::size_t s) {
  if (s < 100) throw DomainError("Monte-Carlo estimate needs at least 100 samples");
}

}  // namespace

McEstimate mc_mean(std::size_t s, const RandomStream& rng,
                   const std::function<double(RandomStream&)>& draw_and_eval,
                   const McOptions& opts) {
  if (s < 2) throw DomainError("mc_mean: need at least 2 samples");
  const std::size_t chunks = (s + kMcChunkSize - 1) / kMcChunkSize;
  std::vector<ChunkSums> sums(chunks);

  auto run_chunk = [&](std::size_t c) {
    RandomStream local = rng.split(c);
    const std::size_t begin = c * kMcChunkSize;
    const std::size_t end = std::min(s, begin + kMcChunkSize);
    ChunkSums cs;
    for (std::size_t i = begin; i < end; ++i) {
      const double f = draw_and_eval(local);
      if (i == begin) cs.shift = f;
      const double d = f - cs.shift;
      cs.sum += d;
      cs.sum_sq += d * d;
      ++cs.n;
    }
    sums[c] = cs;
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Ordered reduction: total mean first, then pooled sum of squares about it.
  double total = 0.0;
  for (const auto& cs : sums) total += cs.sum + cs.shift * static_cast<double>(cs.n);
  const double mean = total / static_cast<double>(s);
  double ss = 0.0;
  for (const auto& cs : sums) {
    // sum (f - mean)^2 = sum d^2 - 2 (mean - shift) sum d + n (mean - shift)^2
    const double off = mean - cs.shift;
    ss += cs.sum_sq - 2.0 * off * cs.sum + static_cast<double>(cs.n) * off * off;
  }
  const double var = std::max(0.0, ss / static_cast<double>(s - 1));
  McEstimate est;
  est.value = mean;
  est.std_error = std::sqrt(var / static_cast<double>(s));
  est.samples = s;
  return est;
}

McEstimate mc_expected_loglik(const VmfParams& post, double lik_kappa,
                              const UnitVector3& target, std::size_t s,
                              const RandomStream& rng, SamplerKind kind,
                              const McOptions& opts) {
  require_samples(s);
  const double log_z = log_norm_const(lik_kappa);
  // Zero likelihood concentration makes the integrand constant.
  if (lik_kappa == 0.0) {
    McEstimate est;
    est.value = log_z;
    est.samples = s;
    return est;
  }
  if (kind == SamplerKind::kVmf) {
    return mc_mean(
        s, rng,
        [&](RandomStream& r) { return log_z + lik_kappa * target.dot(sample_one(post, r)); },
        opts);
  }
  const PsParams ps = surrogate_from_vmf(post);
  return mc_mean(
      s, rng,
      [&](RandomStream& r) { return log_z + lik_kappa * target.dot(ps_sample_one(ps, r)); },
      opts);
}

McEstimate mc_entropy(const VmfParams& p, std::size_t s, const RandomStream& rng,
                      const McOptions& opts) {
  require_samples(s);
  if (p.kappa == 0.0) {
    McEstimate est;
    est.value = kLog4Pi;
    est.samples = s;
    return est;
  }
  return mc_mean(
      s, rng, [&](RandomStream& r) { return -log_pdf(p, sample_one(p, r)); }, opts);
}

double z_score(double analytic, const McEstimate& est) {
  const double diff = std::abs(analytic - est.value);
  if (est.std_error > 0.0) return diff / est.std_error;
  return diff <= 1e-12 * std::max(1.0, std::abs(analytic))
             ? 0.0
             : std::numeric_limits<double>::infinity();
}

std::vector<EllGridPoint> verify_ell_grid(const EllGridSpec& grid, std::size_t s,
                                          const RandomStream& rng, SamplerKind kind,
                                          const McOptions& opts) {
  std::vector<EllGridPoint> out;
  std::uint64_t index = 0;
  for (double kp : grid.kappa_posts) {
    for (double kl : grid.kappa_liks) {
      for (double dot : grid.dots) {
        const VmfParams post(UnitVector3(0.0, 0.0, 1.0), kp);
        const UnitVector3 target(std::sqrt(std::max(0.0, 1.0 - dot * dot)), 0.0, dot);
        EllGridPoint pt;
        pt.kappa_post = kp;
        pt.kappa_lik = kl;
        pt.dot = dot;
        pt.analytic = expected_log_likelihood(post, kl, target);
        pt.mc = mc_expected_loglik(post, kl, target, s, rng.split(index++), kind, opts);
        pt.z = z_score(pt.analytic, pt.mc);
        out.push_back(pt);
      }
    }
  }
  return out;
}

double grid_pass_fraction(const std::vector<EllGridPoint>& points, double z_max) {
  if (points.empty()) return 0.0;
  const auto pass = std::count_if(points.begin(), points.end(),
                                  [&](const EllGridPoint& p) { return p.z < z_max; });
  return static_cast<double>(pass) / static_cast<double>(points.size());
}

}  // namespace vmfev
