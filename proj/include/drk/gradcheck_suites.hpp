#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drk/gradcheck.hpp"

// Named per-module gradcheck suites behind the `gradcheck` CLI command.
// Each suite builds several seeded random instances, compares the
// module's analytic gradients against the finite-difference oracle, and
// folds the results into one report.

namespace drk {

struct SuiteResult {
    std::string module;
    GradReport report;
    double rel_tol = 0;
};

std::vector<std::string> gradcheck_modules();
SuiteResult run_gradcheck_suite(const std::string& module, std::uint64_t seed);

}  // namespace drk
