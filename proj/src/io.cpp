// SPDX-License-Identifier: Apache-2.0
#include "vmfev/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vmfev/error.hpp"

namespace vmfev {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(',', start);
    out.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view s) {
  // std::from_chars for double is available in GCC 11.
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw DataError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

Eigen::Vector3d parse_triple(std::string_view text) {
  const auto parts = split_commas(text);
  if (parts.size() != 3) {
    throw DataError("expected three comma-separated values, got '" + std::string(text) + "'");
  }
  return {to_double(parts[0]), to_double(parts[1]), to_double(parts[2])};
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (auto p : split_commas(text)) out.push_back(to_double(p));
  return out;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (auto p : split_commas(text)) {
    std::uint64_t v = 0;
    const auto* end = p.data() + p.size();
    const auto res = std::from_chars(p.data(), end, v);
    if (p.empty() || res.ec != std::errc() || res.ptr != end) {
      throw DataError("not a seed: '" + std::string(p) + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace vmfev
