// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace vmfev {

// Shortest form that still carries 17 significant digits ("%.17g").
std::string format_double(double v);

// Parses "x,y,z". Throws DataError on malformed input.
Eigen::Vector3d parse_triple(std::string_view text);

// Parses a comma-separated list of doubles / unsigned integers.
std::vector<double> parse_double_list(std::string_view text);
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// Whole file; throws DataError if it cannot be read.
std::string read_file(const std::string& path);

// Non-empty lines of a JSONL / CSV document.
std::vector<std::string> split_lines(const std::string& text);

}  // namespace vmfev
