// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "demon/verify.hpp"

namespace demon::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitIo = 3,
};

/// Entry point shared by the executable and the tests. `argv[0]` is the
/// program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Suites: all, lemma1, theorem1, unroll, gradients, reductions.
/// `fault_injection` perturbs the momentum sum of the norm identity (test hook).
std::vector<CheckReport> run_verify_suite(std::string_view suite, double fault_injection = 0.0);

}  // namespace demon::cli
