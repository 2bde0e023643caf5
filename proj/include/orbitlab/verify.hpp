#pragma once

// Numbered end-to-end checks shared by the command line `verify` command and
// the acceptance test.  Each check is deterministic given the seed.

#include <cstdint>
#include <string>
#include <vector>

#include "orbitlab/lens_space.hpp"

namespace orbitlab {

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::uint64_t capacity_budget = 20000;
  Execution exec = Execution::kParallel;
};

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Check names in order: closed-form, quaternionic, conservation, closing,
// bound, dichotomy, bounce, hopf, heps, capacity, capangle.
const std::vector<std::string>& check_names();

// Runs one check by name; throws kInvalidParameter for unknown names.
CheckResult run_check(const std::string& name, const VerifyOptions& options = {});

// "all" or a single check name.
std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& options = {});

}  // namespace orbitlab
