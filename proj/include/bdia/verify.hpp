#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bdia {

struct RunConfig;

enum class CheckStatus { kPass, kFail, kSkip };

struct InvariantResult {
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  double value = 0.0;      // measured error (or order, count)
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<InvariantResult> results;

  bool all_passed() const;
};

// Runs the invariant suite on the problem described by `cfg` (schedule,
// grid size, mixture, gamma, p, gamma1, gamma2, seed).
VerifyReport run_verification(const RunConfig& cfg);

// One line per invariant: PASS/FAIL/SKIP, name, value, tolerance, detail.
void print_verify_report(std::ostream& out, const VerifyReport& report);

}  // namespace bdia
