// SPDX-License-Identifier: Apache-2.0
//
// Key-value run configuration: `key = value` per line, `#` starts a comment.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "vmfev/experiments.hpp"
#include "vmfev/grasp.hpp"

namespace vmfev {

// Name of the environment variable holding the default seed.
inline constexpr const char* kSeedEnvVar = "VMFEV_SEED";

struct CliConfig {
  double gamma = kDefaultGamma;
  int t_bins = kDefaultApproachBins;
  std::size_t mc_samples = 100000;
  std::uint64_t seed = 1;
  SynthConfig synth;
  FitOptions fit;
};

// Throws DataError naming the line on unknown keys, malformed or
// out-of-range values, and duplicate keys.
CliConfig parse_config(const std::string& text, CliConfig base = {});

// Seed from the environment variable, if set and well-formed.
// Throws DataError when set but not an unsigned integer.
std::optional<std::uint64_t> seed_from_env();

}  // namespace vmfev
