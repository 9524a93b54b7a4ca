#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace torusflow {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceReport {
    std::vector<CriterionResult> results;
    bool all_passed() const;
};

/// Runs the full acceptance suite, printing one pass/fail line per criterion
/// to `log`.  Scratch files (determinism runs) land under scratch_dir.
AcceptanceReport run_acceptance(const std::string& scratch_dir, std::ostream& log);

} // namespace torusflow
