#pragma once

// Finite-difference suites over every loss of the objective and over the
// total loss of a tiny model. Shared by the `gradcheck` command and the tests.

#include <cstdint>
#include <string>
#include <vector>

#include "l2g/diffcore.hpp"

namespace l2g {

struct GradSuiteResult {
  std::string name;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  int seeds = 0;
  diff::Index coordinates = 0;
  diff::Index skipped = 0;  // kink coordinates (total suite)
  std::string worst;  // "param[index] analytic vs numeric" at the worst seed
  bool passed() const { return max_rel_error <= tolerance; }
};

std::vector<std::string> gradient_suite_names();

GradSuiteResult run_gradient_suite(const std::string& name, int seeds, std::uint64_t base_seed = 0);

std::vector<GradSuiteResult> run_gradient_suites(int seeds = 20, std::uint64_t base_seed = 0);

}  // namespace l2g
