#pragma once

#include <span>

#include "bdia/core.hpp"
#include "bdia/ddim.hpp"
#include "bdia/models.hpp"

namespace bdia {

/// Clean-data estimate from the previous (higher) grid index.
struct DpmHistory {
  Vector prev_x0;
  int prev_index = -1;

  bool valid() const { return prev_index >= 0 && !prev_x0.empty(); }
};

// x_hat = (z - sigma eps) / alpha at time t.
Vector data_prediction(const NoiseSchedule& schedule, std::span<const double> z,
                       std::span<const double> eps, double t);

// Multistep second-order data-prediction update from index i = z_i.index to
// i - 1, given x0_i = x_hat(z_i, t_i).  The first step (no history) and the
// step into sigma = 0 are first order.
Vector dpmpp_2m_update(const NoiseSchedule& schedule, const TimeGrid& grid,
                       std::span<const double> z_i, int i,
                       std::span<const double> x0_i, const DpmHistory& history);

// One predictor call; history is advanced to index i.
State dpmpp_2m_step(const State& z_i, DpmHistory& history,
                    const NoisePredictor& predictor, const NoiseSchedule& schedule,
                    const TimeGrid& grid);

// z_{i-1} = Gamma + gamma (z_{i+1} - (z_i + Delta_bwd)) with Delta_bwd the DDIM
// backward delta sharing the step's single predictor call.  i <= N - 1.
State bdia_dpmpp_step(const State& z_ip1, const State& z_i, DpmHistory& history,
                      const NoisePredictor& predictor, double gamma,
                      const NoiseSchedule& schedule, const TimeGrid& grid);

SolverTrace dpmpp_2m_sample(const State& z_top, const NoisePredictor& predictor,
                            const NoiseSchedule& schedule, const TimeGrid& grid);

SolverTrace bdia_dpmpp_sample(const State& z_top, const NoisePredictor& predictor,
                              double gamma, const NoiseSchedule& schedule,
                              const TimeGrid& grid);

}  // namespace bdia
