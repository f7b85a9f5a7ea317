// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vmfev::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kVerificationFailed = 3,
};

// Runs one command line (args excludes the program name). Results go to
// `out`; errors go to `err` as a single JSON line {"error": ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace vmfev::cli
