#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "linqrl/envgen.hpp"

namespace linqrl::cli {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string measured;
};

struct VerifyOptions {
  std::string suite = "all";  // lemmas | regret | all
  int seeds = 50;
  // Environment for the run-based checks; a built-in chain when null.
  std::shared_ptr<const Environment> env;
};

// Small deterministic chain used when no environment is given.
Environment default_verify_environment();

// Two-state, two-action, single-step environment with d = 2 and unit gap
// that meets the regret-envelope precondition at c_beta = 1, N = 2000.
Environment envelope_environment();

// Throws UsageError on an unknown suite name.
std::vector<VerifyCheck> run_verify(const VerifyOptions& options);

void print_checks(const std::vector<VerifyCheck>& checks, std::ostream& out);

}  // namespace linqrl::cli
