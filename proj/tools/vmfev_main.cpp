// SPDX-License-Identifier: Apache-2.0
#include "vmfev/cli.hpp"

int main(int argc, char** argv) { return vmfev::cli::run(argc, argv); }
