#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bdia/analysis.hpp"
#include "bdia/core.hpp"
#include "bdia/models.hpp"

namespace bdia {

struct RunConfig;

enum class SolverKind {
  kDdim,
  kDdimNaive,
  kBdiaDdim,
  kEdict,
  kCbdia,
  kEdm,
  kBdiaEdm,
  kDpmpp2m,
  kBdiaDpmpp2m,
};

struct SolverInfo {
  std::string_view name;
  SolverKind kind;
  std::string_view param;  // "gamma", "p", "gamma1" or "" when none
  bool round_trip;         // supported by the round-trip command
  bool needs_edm_schedule;
};

const std::vector<SolverInfo>& solver_registry();
// Throws ConfigError for unknown names.
const SolverInfo& solver_info(std::string_view name);

// Value reported in the "param" column for this solver (NaN when none).
double solver_param(const SolverInfo& info, const RunConfig& cfg);

// Draws from the exact marginal at t_N ("noise" substream), at t_0
// ("reference" substream) and data-space points for round trips ("data").
SampleSet initial_noise(const RunConfig& cfg, const TimeGrid& grid, std::size_t count);
SampleSet reference_samples(const RunConfig& cfg, const TimeGrid& grid,
                            std::size_t count);
SampleSet data_samples(const RunConfig& cfg, const TimeGrid& grid, std::size_t count);

struct BatchResult {
  SampleSet terminal;
  std::size_t nfe = 0;  // predictor calls per trajectory
};

// Runs `solver` from every initial state; trajectories are spread over
// cfg.workers threads and the result does not depend on the worker count.
BatchResult sample_batch(const RunConfig& cfg, const SolverInfo& solver,
                         const TimeGrid& grid, const NoisePredictor& predictor,
                         const SampleSet& initial);

// Trace CSV of a single trajectory from z_top.
void write_solver_trace(std::ostream& out, const RunConfig& cfg,
                        const SolverInfo& solver, const TimeGrid& grid,
                        const NoisePredictor& predictor, const Vector& z_top);

struct RoundTripResult {
  SampleSet original;
  SampleSet regenerated;
  ReconstructionError error;
  std::size_t nfe = 0;  // inversion plus regeneration, per trajectory
};

// Inverts every point of `data` to noise and regenerates it, using the
// edited mixture for regeneration when cfg.edit_shift is set.
RoundTripResult round_trip(const RunConfig& cfg, const SolverInfo& solver,
                           const TimeGrid& grid, const SampleSet& data);

// Max-abs distance of the first min(batch, 32) terminal states from a fine
// RK4 solution of the same trajectories.
double terminal_error(const RunConfig& cfg, const TimeGrid& grid,
                      const NoisePredictor& predictor, const SampleSet& initial,
                      const SampleSet& terminal);

// Sampling metrics (and the round trip when supported) for one solver and N.
ComparisonReport evaluate_solver(const RunConfig& cfg, std::string_view solver, int n);

std::vector<ComparisonReport> compare(const RunConfig& cfg,
                                      const std::vector<std::string>& solvers,
                                      const std::vector<int>& ns);

// One report per value of the solver's parameter (gamma or p).
std::vector<ComparisonReport> gamma_sweep(const RunConfig& cfg, std::string_view solver,
                                          const std::vector<double>& values);

}  // namespace bdia
