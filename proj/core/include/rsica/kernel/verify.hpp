#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsica/json_format.hpp"

namespace rsica::kernel {

struct CheckResult {
  std::string op;
  std::string measure;  // "max_rel_error", "max_abs_error" or "max_violation"
  double error = 0.0;
  double tolerance = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

struct KernelCheckOptions {
  std::uint64_t seed = 0;
  // Replaces every per-check tolerance when set.
  std::optional<double> tolerance;
  std::size_t gradient_trials = 20;
  std::size_t oracle_trials = 50;
};

struct KernelCheckSummary {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool all_pass() const;
  // {"seed", "pass", "checks": {op: {measure, error, tolerance, trials, pass}}}
  Json to_json() const;
};

// Runs the whole property suite. Deterministic for a given seed.
KernelCheckSummary run_kernel_checks(const KernelCheckOptions& options = {});

}  // namespace rsica::kernel
