#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bdia/core.hpp"
#include "bdia/models.hpp"

namespace bdia {

/// One EDM / BDIA-EDM step record.  `z_hat` is the refined estimate the step
/// starts from, `z_tilde` the Euler predictor for index - 1, `d` the gradient
/// at (z, t_i) and `d_prime` the gradient at (z_tilde, t_{i-1}), absent when
/// sigma(t_{i-1}) = 0.  The last entry of a trace carries only index, time, z.
struct EdmTraceEntry {
  int index = 0;
  double time = 0.0;
  Vector z;
  Vector z_hat;
  Vector z_tilde;
  Vector d;
  std::optional<Vector> d_prime;
};

struct EdmTrace {
  std::vector<EdmTraceEntry> entries;
  std::size_t epsilon_calls = 0;

  const EdmTraceEntry& at_index(int index) const;
  const Vector& final_state() const { return entries.back().z; }
};

struct EdmStep {
  State next;
  EdmTraceEntry entry;
};

// Heun step from index i = z_i.index to i - 1 under alpha = 1, sigma = t.
EdmStep edm_heun_step(const State& z_i, const NoisePredictor& predictor,
                      const TimeGrid& grid);

EdmTrace edm_heun_sample(const State& z_top, const NoisePredictor& predictor,
                         const TimeGrid& grid);

// BDIA-EDM: each Heun step starts from
//   z_hat_i = z_i + gamma (z_{i+1} + (t_i - t_{i+1}) (d_{i+1} + d_i) / 2 - z_i)
// and gamma = 0 is plain Heun.
EdmTrace bdia_edm_sample(const State& z_top, const NoisePredictor& predictor,
                         double gamma, const TimeGrid& grid);

// Classical fixed-step RK4 of the probability-flow ODE from t_from to t_to.
// When sigma(t_to) = 0 the final sub-step is an Euler step.
Vector rk4_reference(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                     std::span<const double> z_from, double t_from, double t_to,
                     int n_steps);

// EDM form: dz/dt = d(z, t).
State rk4_reference(const State& z_from, const NoisePredictor& predictor,
                    double t_from, double t_to, int n_steps, int to_index);

}  // namespace bdia
