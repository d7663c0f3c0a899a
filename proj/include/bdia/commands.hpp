#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bdia/config.hpp"

namespace bdia {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariant = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

// Each command prints its report to `out` (CSV or JSON per cfg.format),
// diagnostics to `err`, and when cfg.out is set also writes files there.

// report.{csv,json} and trace.csv (first trajectory).
int cmd_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// roundtrip.{csv,json}.  Exact solvers without an edit must reconstruct to
// 1e-8 or the command exits 1.
int cmd_roundtrip(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// verify.txt; exit 1 if any invariant fails.
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// compare.{csv,json}: one row per (solver, N).
int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& solvers,
                const std::vector<int>& ns, std::ostream& out, std::ostream& err);

// sweep.{csv,json}: one row per parameter value of cfg.solver.
int cmd_sweep(const RunConfig& cfg, const std::vector<double>& values, std::ostream& out,
              std::ostream& err);

// Runs `body`, mapping exceptions to the exit-code contract.
int run_guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace bdia
