#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bdia/core.hpp"
#include "bdia/models.hpp"

namespace bdia {

/// Weight of the backward refinement in a BDIA step, in [0, 1].
struct BdiaConfig {
  double gamma = 1.0;

  BdiaConfig() = default;
  explicit BdiaConfig(double g);
};

/// One recorded state of a solver run.  `eps` is the predictor output at
/// this state; `delta_fwd` is Delta(t_i -> t_{i-1} | z_i) and `delta_bwd` is
/// Delta(t_i -> t_{i+1} | z_i).  Empty vectors mean "not computed".
struct TraceEntry {
  int index = 0;
  double time = 0.0;
  Vector z;
  Vector eps;
  Vector delta_fwd;
  Vector delta_bwd;
};

/// Ordered record of one solver run (sampling order for samplers, ascending
/// order for inversion chains).
struct SolverTrace {
  std::vector<TraceEntry> entries;
  std::size_t epsilon_calls = 0;

  const TraceEntry& at_index(int index) const;
  const Vector& final_state() const { return entries.back().z; }
};

// ---------------------------------------------------------------------------
// DDIM
// ---------------------------------------------------------------------------

State ddim_step(const State& z_i, std::span<const double> eps,
                const DdimCoeffs& coeffs);

// Delta(t_from -> t_to | z) realized by a DDIM update with noise `eps`.
Vector ddim_delta(const NoiseSchedule& schedule, std::span<const double> z,
                  std::span<const double> eps, double t_from, double t_to);

// Approximate inverse of ddim_step: the predictor is evaluated at the known
// state z_{i-1} instead of the unknown z_i.
State ddim_invert_step_naive(const State& z_prev, const NoisePredictor& predictor,
                             const NoiseSchedule& schedule, const TimeGrid& grid,
                             int i);

SolverTrace ddim_sample(const State& z_top, const NoisePredictor& predictor,
                        const NoiseSchedule& schedule, const TimeGrid& grid);

// Naive inversion from index 0 up to N.  Ascending trace.
SolverTrace ddim_invert_chain_naive(const State& z_0,
                                    const NoisePredictor& predictor,
                                    const NoiseSchedule& schedule,
                                    const TimeGrid& grid);

// ---------------------------------------------------------------------------
// BDIA-DDIM
// ---------------------------------------------------------------------------

// Boundary step at index N: plain DDIM.
State bdia_init_step(const State& z_top, const NoisePredictor& predictor,
                     const NoiseSchedule& schedule, const TimeGrid& grid);

// z_{i-1} from (z_{i+1}, z_i) with times given explicitly.  With
// F = z_mid + Delta(t_mid -> t_near) and B = z_mid + Delta(t_mid -> t_far):
//   out = F + gamma (z_far - B)
// which is z_far - (1-gamma)(z_far - z_mid) - gamma Delta_bwd + Delta_fwd.
Vector bdia_update(const NoiseSchedule& schedule, std::span<const double> z_far,
                   std::span<const double> z_mid, std::span<const double> eps_mid,
                   double t_far, double t_mid, double t_near, double gamma);

// Algebraic inverse of bdia_update: z_far = B + (z_near - F) / gamma.
Vector bdia_inverse_update(const NoiseSchedule& schedule,
                           std::span<const double> z_near,
                           std::span<const double> z_mid,
                           std::span<const double> eps_mid, double t_far,
                           double t_mid, double t_near, double gamma);

// z_{i-1} given z_{i+1}, z_i and eps_i = eps_hat(z_i, t_i); 1 <= i <= N-1.
State bdia_step(const State& z_ip1, const State& z_i, std::span<const double> eps_i,
                const BdiaConfig& cfg, const NoiseSchedule& schedule,
                const TimeGrid& grid);

// z_{i+1} given z_{i-1}, z_i and eps_i.  Requires gamma > 0.
State bdia_invert_step(const State& z_im1, const State& z_i,
                       std::span<const double> eps_i, const BdiaConfig& cfg,
                       const NoiseSchedule& schedule, const TimeGrid& grid);

// Full descending run from z_N: one DDIM boundary step, then BDIA steps.
SolverTrace bdia_sample(const State& z_top, const NoisePredictor& predictor,
                        const BdiaConfig& cfg, const NoiseSchedule& schedule,
                        const TimeGrid& grid);

// Descending run seeded by the adjacent pair (z_N, z_{N-1}) produced by an
// inversion, so no boundary DDIM step is taken.
SolverTrace bdia_sample_from_pair(const State& z_top, const State& z_below,
                                  const NoisePredictor& predictor,
                                  const BdiaConfig& cfg,
                                  const NoiseSchedule& schedule,
                                  const TimeGrid& grid);

// Ascending exact inversion from the pair (z_0, z_1) to z_N.
SolverTrace bdia_invert_chain(const State& z_0, const State& z_1,
                              const NoisePredictor& predictor,
                              const BdiaConfig& cfg, const NoiseSchedule& schedule,
                              const TimeGrid& grid);

// ---------------------------------------------------------------------------
// Closed-form expansion of BDIA states in terms of recorded deltas
// ---------------------------------------------------------------------------

// Weight of Delta(t_j -> t_{j-1} | z_j) in the expansion of z_i, where
// lag = j - i: (1 - (-gamma)^lag) / (1 + gamma).
double expansion_forward_weight(double gamma, int lag);
// Weight of Delta(t_{j-1} -> t_j | z_{j-1}): (gamma + (-gamma)^lag) / (1 + gamma).
double expansion_backward_weight(double gamma, int lag);

// z_i rebuilt from z_N and the recorded deltas of a bdia_sample trace,
// without running the recursion.  i <= N-2.  For gamma = 1 the parity form
// is evaluated as well and must agree to 1e-12 (NumericError otherwise).
Vector prop1_expansion(const SolverTrace& trace, const BdiaConfig& cfg, int i);

// The gamma = 1 parity form: z_N + sum_j mod(j-i, 2) (Delta_fwd_j - Delta_bwd_j).
Vector prop1_expansion_parity(const SolverTrace& trace, int i);

}  // namespace bdia
