#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bdia/core.hpp"
#include "bdia/ddim.hpp"
#include "bdia/kernels.hpp"
#include "bdia/models.hpp"

namespace bdia {

/// Pair of coupled sequences.  Chains start with z = y.
struct CoupledState {
  Vector z;
  Vector y;
  int index = 0;
};

/// EDICT mixing weight, p in (0, 1].
struct EdictConfig {
  double p = 0.93;

  EdictConfig() = default;
  explicit EdictConfig(double p_);
};

/// CBDIA mixing weights; gamma1 != gamma2 keeps the mixing invertible.
struct CbdiaConfig {
  double gamma1 = 0.0;
  double gamma2 = 1.0;

  CbdiaConfig() = default;
  CbdiaConfig(double g1, double g2);
};

/// One recorded coupled state and the internals of the step taken from it.
/// For EDICT `first`/`second` hold z_inter/y_inter; for CBDIA they hold w/v,
/// `delta_fwd` is Delta(t_i -> t_{i-1} | y_i) and `delta_bwd` is
/// Delta(t_{i-1} -> t_i | w).  The last entry of a chain carries only z, y.
struct CoupledTraceEntry {
  int index = 0;
  double time = 0.0;
  Vector z;
  Vector y;
  Vector first;
  Vector second;
  Vector delta_fwd;
  Vector delta_bwd;
};

struct CoupledTrace {
  std::vector<CoupledTraceEntry> entries;
  std::size_t epsilon_calls = 0;
  std::optional<CbdiaConfig> cbdia;  // set for CBDIA runs

  const CoupledTraceEntry& at_index(int index) const;
  const CoupledTraceEntry& last() const { return entries.back(); }
  CoupledState final_state() const { return {last().z, last().y, last().index}; }
};

CoupledState coupled_from(const State& s);

// ---------------------------------------------------------------------------
// EDICT
// ---------------------------------------------------------------------------

CoupledState edict_step(const CoupledState& s, const NoisePredictor& predictor,
                        const EdictConfig& cfg, const NoiseSchedule& schedule,
                        const TimeGrid& grid, CoupledTraceEntry* record = nullptr);

// Inverse of edict_step: maps the state at index i-1 back to index i.
CoupledState edict_invert_step(const CoupledState& s,
                               const NoisePredictor& predictor,
                               const EdictConfig& cfg,
                               const NoiseSchedule& schedule, const TimeGrid& grid);

CoupledTrace edict_sample(const CoupledState& top, const NoisePredictor& predictor,
                          const EdictConfig& cfg, const NoiseSchedule& schedule,
                          const TimeGrid& grid);

// Ascending chain from index 0 to N.
CoupledTrace edict_invert_chain(const CoupledState& bottom,
                                const NoisePredictor& predictor,
                                const EdictConfig& cfg,
                                const NoiseSchedule& schedule, const TimeGrid& grid);

// ---------------------------------------------------------------------------
// CBDIA
// ---------------------------------------------------------------------------

struct CbdiaParts {
  Vector w;
  Vector v;
  Vector delta_fwd;
  Vector delta_bwd;
};

// One CBDIA update with the two integration approximations supplied as
// callables: fwd(y) = Delta(t_i -> t_{i-1} | y), bwd(w) = Delta(t_{i-1} -> t_i | w).
template <class Fwd, class Bwd>
CoupledState cbdia_update(const CoupledState& s, Fwd&& fwd, Bwd&& bwd,
                          const CbdiaConfig& cfg, CbdiaParts* parts = nullptr) {
  const std::size_t n = s.z.size();
  Vector df = fwd(s.y);
  Vector w(n);
  kernels::lincomb(w, 1.0, s.z, 1.0, df);
  Vector db = bwd(w);
  Vector v(n);
  kernels::lincomb(v, 1.0, s.y, -1.0, db);
  CoupledState out{Vector(n), Vector(n), s.index - 1};
  kernels::lincomb(out.z, cfg.gamma1, w, 1.0 - cfg.gamma1, v);
  kernels::lincomb(out.y, cfg.gamma2, w, 1.0 - cfg.gamma2, v);
  if (parts != nullptr) {
    *parts = {std::move(w), std::move(v), std::move(df), std::move(db)};
  }
  return out;
}

CoupledState cbdia_step(const CoupledState& s, const NoisePredictor& predictor,
                        const CbdiaConfig& cfg, const NoiseSchedule& schedule,
                        const TimeGrid& grid, CoupledTraceEntry* record = nullptr);

// Inverse of cbdia_step: maps the state at index i-1 back to index i.
CoupledState cbdia_invert_step(const CoupledState& s,
                               const NoisePredictor& predictor,
                               const CbdiaConfig& cfg,
                               const NoiseSchedule& schedule, const TimeGrid& grid);

CoupledTrace cbdia_sample(const CoupledState& top, const NoisePredictor& predictor,
                          const CbdiaConfig& cfg, const NoiseSchedule& schedule,
                          const TimeGrid& grid);

CoupledTrace cbdia_invert_chain(const CoupledState& bottom,
                                const NoisePredictor& predictor,
                                const CbdiaConfig& cfg,
                                const NoiseSchedule& schedule, const TimeGrid& grid);

// Agreement between a (0, 1) CBDIA run and a gamma = 1 BDIA run from the
// same start.
struct CbdiaEquivalence {
  double max_discrepancy = 0.0;  // max_i |y_i(CBDIA) - z_i(BDIA)|
  double closed_form_y_error = 0.0;   // closed form for y_i vs iterated y_i
  double closed_form_z_error = 0.0;   // closed form for z_i vs iterated z_i
  // z_i carries -Delta(t_i -> t_{i+1}) while y_{i} carries +Delta(t_{i+1} -> t_i):
  // largest residual of those two one-step identities.
  double direction_residual = 0.0;
};

CbdiaEquivalence cbdia_bdia_equivalence(const CoupledTrace& cbdia,
                                        const SolverTrace& bdia);

// Closed forms of a (1, 0) CBDIA run:
//   y_i = y_N - sum_{j=i}^{N-1} Delta(t_j -> t_{j+1} | z_j)
//   z_i = z_N + sum_{j=i+1}^{N} Delta(t_j -> t_{j-1} | y_j)
struct CbdiaSplitForm {
  double y_error = 0.0;
  double z_error = 0.0;
};

CbdiaSplitForm cbdia_split_form_errors(const CoupledTrace& cbdia);

}  // namespace bdia
