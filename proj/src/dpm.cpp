#include "bdia/dpm.hpp"

#include <cmath>
#include <string>

#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"

namespace bdia {

Vector data_prediction(const NoiseSchedule& schedule, std::span<const double> z,
                       std::span<const double> eps, double t) {
  if (z.size() != eps.size()) throw ShapeError("state and noise differ in dimension");
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  Vector out(z.size());
  kernels::lincomb(out, 1.0 / a, z, -s / a, eps);
  return out;
}

Vector dpmpp_2m_update(const NoiseSchedule& schedule, const TimeGrid& grid,
                       std::span<const double> z_i, int i,
                       std::span<const double> x0_i, const DpmHistory& history) {
  if (i < 1 || i > grid.steps()) {
    throw IndexError("DPM step index " + std::to_string(i) + " out of range");
  }
  const double t_i = grid.time(i);
  const double t_prev = grid.time(i - 1);
  const double a_prev = schedule.alpha(t_prev);
  const double s_prev = schedule.sigma(t_prev);
  const std::size_t n = z_i.size();
  Vector out(n);
  if (s_prev == 0.0) {
    for (std::size_t k = 0; k < n; ++k) out[k] = a_prev * x0_i[k];
    return out;
  }
  const double s_i = schedule.sigma(t_i);
  const double lam_i = schedule.log_snr(t_i);
  const double h = schedule.log_snr(t_prev) - lam_i;
  const double phi = -a_prev * std::expm1(-h);

  if (!history.valid()) {
    kernels::lincomb(out, s_prev / s_i, z_i, phi, x0_i);
    return out;
  }
  if (history.prev_index != i + 1) throw IndexError("DPM history is not from index i+1");
  if (history.prev_x0.size() != n) throw ShapeError("DPM history has wrong dimension");
  const double h_prev = lam_i - schedule.log_snr(grid.time(i + 1));
  const double r = h_prev / h;
  Vector d(n);
  kernels::lincomb(d, 1.0 + 0.5 / r, x0_i, -0.5 / r, history.prev_x0);
  kernels::lincomb(out, s_prev / s_i, z_i, phi, d);
  return out;
}

State dpmpp_2m_step(const State& z_i, DpmHistory& history,
                    const NoisePredictor& predictor, const NoiseSchedule& schedule,
                    const TimeGrid& grid) {
  const int i = z_i.index;
  const double t_i = grid.time(i);
  const Vector eps = predictor.epsilon(z_i.z, t_i);
  Vector x0 = data_prediction(schedule, z_i.z, eps, t_i);
  State out{dpmpp_2m_update(schedule, grid, z_i.z, i, x0, history), i - 1};
  history = {std::move(x0), i};
  return out;
}

namespace {

State bdia_dpm_from_eps(const State& z_ip1, const State& z_i,
                        std::span<const double> eps, DpmHistory& history,
                        double gamma, const NoiseSchedule& schedule,
                        const TimeGrid& grid, Vector* gamma_out, Vector* back_out) {
  const int i = z_i.index;
  if (i < 1 || i > grid.steps() - 1) throw IndexError("BDIA-DPM step index out of range");
  if (z_ip1.index != i + 1) throw IndexError("BDIA-DPM expects states at i+1 and i");
  if (z_ip1.z.size() != z_i.z.size()) throw ShapeError("states differ in dimension");
  const double t_i = grid.time(i);
  Vector x0 = data_prediction(schedule, z_i.z, eps, t_i);
  Vector g = dpmpp_2m_update(schedule, grid, z_i.z, i, x0, history);
  const DdimCoeffs c = transfer_coeffs(schedule, t_i, grid.time(i + 1));
  Vector back(z_i.z.size());
  kernels::lincomb(back, c.a, z_i.z, c.b, eps);
  State out{Vector(z_i.z.size()), i - 1};
  kernels::blend(out.z, g, gamma, z_ip1.z, back);
  history = {std::move(x0), i};
  if (gamma_out != nullptr) *gamma_out = std::move(g);
  if (back_out != nullptr) *back_out = std::move(back);
  return out;
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
}

Vector minus(std::span<const double> x, std::span<const double> y) {
  Vector out(x.size());
  kernels::lincomb(out, 1.0, x, -1.0, y);
  return out;
}

}  // namespace

State bdia_dpmpp_step(const State& z_ip1, const State& z_i, DpmHistory& history,
                      const NoisePredictor& predictor, double gamma,
                      const NoiseSchedule& schedule, const TimeGrid& grid) {
  check_gamma(gamma);
  const Vector eps = predictor.epsilon(z_i.z, grid.time(z_i.index));
  return bdia_dpm_from_eps(z_ip1, z_i, eps, history, gamma, schedule, grid, nullptr,
                           nullptr);
}

SolverTrace dpmpp_2m_sample(const State& z_top, const NoisePredictor& predictor,
                            const NoiseSchedule& schedule, const TimeGrid& grid) {
  if (z_top.index != grid.steps()) throw IndexError("sampling starts at index N");
  SolverTrace trace;
  DpmHistory history;
  State cur = z_top;
  while (cur.index >= 1) {
    TraceEntry e{cur.index, grid.time(cur.index), cur.z, {}, {}, {}};
    e.eps = predictor.epsilon(cur.z, e.time);
    ++trace.epsilon_calls;
    Vector x0 = data_prediction(schedule, cur.z, e.eps, e.time);
    State next{dpmpp_2m_update(schedule, grid, cur.z, cur.index, x0, history),
               cur.index - 1};
    history = {std::move(x0), cur.index};
    require_finite(next.z, "dpmpp_2m_sample");
    e.delta_fwd = minus(next.z, cur.z);
    trace.entries.push_back(std::move(e));
    cur = std::move(next);
  }
  trace.entries.push_back({0, grid.time(0), cur.z, {}, {}, {}});
  return trace;
}

SolverTrace bdia_dpmpp_sample(const State& z_top, const NoisePredictor& predictor,
                              double gamma, const NoiseSchedule& schedule,
                              const TimeGrid& grid) {
  check_gamma(gamma);
  const int n = grid.steps();
  if (z_top.index != n) throw IndexError("sampling starts at index N");
  SolverTrace trace;
  DpmHistory history;

  TraceEntry top{n, grid.time(n), z_top.z, {}, {}, {}};
  top.eps = predictor.epsilon(z_top.z, top.time);
  ++trace.epsilon_calls;
  Vector x0 = data_prediction(schedule, z_top.z, top.eps, top.time);
  State cur{dpmpp_2m_update(schedule, grid, z_top.z, n, x0, history), n - 1};
  history = {std::move(x0), n};
  require_finite(cur.z, "bdia_dpmpp_sample");
  top.delta_fwd = minus(cur.z, z_top.z);
  trace.entries.push_back(std::move(top));

  State upper = z_top;
  while (cur.index >= 1) {
    TraceEntry e{cur.index, grid.time(cur.index), cur.z, {}, {}, {}};
    e.eps = predictor.epsilon(cur.z, e.time);
    ++trace.epsilon_calls;
    Vector g;
    Vector back;
    State next = bdia_dpm_from_eps(upper, cur, e.eps, history, gamma, schedule, grid,
                                   &g, &back);
    require_finite(next.z, "bdia_dpmpp_sample");
    e.delta_fwd = minus(g, cur.z);
    e.delta_bwd = minus(back, cur.z);
    trace.entries.push_back(std::move(e));
    upper = std::move(cur);
    cur = std::move(next);
  }
  trace.entries.push_back({0, grid.time(0), cur.z, {}, {}, {}});
  return trace;
}

}  // namespace bdia
