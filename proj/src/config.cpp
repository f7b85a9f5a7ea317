// SPDX-License-Identifier: Apache-2.0
#include "vmfev/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "vmfev/error.hpp"
#include "vmfev/io.hpp"

namespace vmfev {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double as_double(const std::string& v) {
  const auto list = parse_double_list(v);
  if (list.size() != 1) throw DataError("expected a single number, got '" + v + "'");
  if (!std::isfinite(list[0])) throw DataError("value must be finite");
  return list[0];
}

std::uint64_t as_u64(const std::string& v) {
  const auto list = parse_seed_list(v);
  if (list.size() != 1) throw DataError("expected a single non-negative integer, got '" + v + "'");
  return list[0];
}

int as_int(const std::string& v, int lo, int hi) {
  const std::uint64_t u = as_u64(v);
  if (u < static_cast<std::uint64_t>(lo) || u > static_cast<std::uint64_t>(hi)) {
    throw DataError("value " + v + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    "]");
  }
  return static_cast<int>(u);
}

double positive(const std::string& v) {
  const double d = as_double(v);
  if (!(d > 0.0)) throw DataError("value must be > 0");
  return d;
}

double nonneg(const std::string& v) {
  const double d = as_double(v);
  if (!(d >= 0.0)) throw DataError("value must be >= 0");
  return d;
}

using Setter = std::function<void(CliConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n_h", [](CliConfig& c, const std::string& v) { c.fit.n_h = positive(v); }},
      {"gamma",
       [](CliConfig& c, const std::string& v) { c.gamma = c.fit.gamma = nonneg(v); }},
      {"t_bins", [](CliConfig& c, const std::string& v) { c.t_bins = as_int(v, 2, 3600); }},
      {"m_max", [](CliConfig& c, const std::string& v) { c.fit.m_max = positive(v); }},
      {"gmm_k", [](CliConfig& c, const std::string& v) { c.fit.gmm_k = as_int(v, 1, 1000); }},
      {"gmm_max_iters",
       [](CliConfig& c, const std::string& v) { c.fit.gmm_max_iters = as_int(v, 1, 1000000); }},
      {"seed",
       [](CliConfig& c, const std::string& v) {
         c.seed = c.synth.seed = c.fit.seed = as_u64(v);
       }},
      {"mc_samples",
       [](CliConfig& c, const std::string& v) {
         c.mc_samples = static_cast<std::size_t>(as_int(v, 100, 1000000000));
       }},
      {"iterations",
       [](CliConfig& c, const std::string& v) { c.fit.iterations = as_int(v, 0, 100000000); }},
      {"step_size", [](CliConfig& c, const std::string& v) { c.fit.step_size = positive(v); }},
      {"density_mode",
       [](CliConfig& c, const std::string& v) {
         if (v == "raw") {
           c.fit.density_mode = DensityMode::kRaw;
         } else if (v == "per_dim") {
           c.fit.density_mode = DensityMode::kPerDim;
         } else {
           throw DataError("density_mode must be raw or per_dim");
         }
       }},
      {"cluster_count",
       [](CliConfig& c, const std::string& v) { c.synth.cluster_count = as_int(v, 1, 100000); }},
      {"points_per_cluster",
       [](CliConfig& c, const std::string& v) {
         c.synth.points_per_cluster = as_int(v, 1, 100000000);
       }},
      {"ood_points_per_cluster",
       [](CliConfig& c, const std::string& v) {
         c.synth.ood_points_per_cluster = as_int(v, 0, 100000000);
       }},
      {"true_kappas",
       [](CliConfig& c, const std::string& v) {
         auto ks = parse_double_list(v);
         for (double k : ks) {
           if (!(k > 0.0) || !std::isfinite(k)) throw DataError("true_kappas must be > 0");
         }
         c.synth.true_kappas = std::move(ks);
       }},
      {"feature_dim",
       [](CliConfig& c, const std::string& v) { c.synth.feature_dim = as_int(v, 1, 4096); }},
      {"feature_noise_sigma",
       [](CliConfig& c, const std::string& v) { c.synth.feature_noise_sigma = nonneg(v); }},
      {"embedding_scale",
       [](CliConfig& c, const std::string& v) { c.synth.embedding_scale = nonneg(v); }},
      {"ood_shift", [](CliConfig& c, const std::string& v) { c.synth.ood_shift = nonneg(v); }},
  };
  return table;
}

}  // namespace

CliConfig parse_config(const std::string& text, CliConfig base) {
  std::istringstream in(text);
  std::string raw;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = "config line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw DataError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw DataError(where + "duplicate key '" + key + "'");
    if (value.empty()) throw DataError(where + "missing value for '" + key + "'");
    try {
      it->second(base, value);
    } catch (const DataError& e) {
      throw DataError(where + key + ": " + e.what());
    }
  }
  try {
    base.synth.validate();
  } catch (const DomainError& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return base;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv(kSeedEnvVar);
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    const auto list = parse_seed_list(v);
    if (list.size() == 1) return list[0];
  } catch (const DataError&) {
  }
  throw DataError(std::string(kSeedEnvVar) + " must be an unsigned integer, got '" + v + "'");
}

}  // namespace vmfev
