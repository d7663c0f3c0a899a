#include "bdia/edm.hpp"

#include <string>

#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"

namespace bdia {

const EdmTraceEntry& EdmTrace::at_index(int index) const {
  for (const auto& e : entries) {
    if (e.index == index) return e;
  }
  throw IndexError("EDM trace has no state at index " + std::to_string(index));
}

namespace {

void check_edm_grid(const TimeGrid& grid) {
  if (grid.time(0) < 0.0) throw InvalidGridError("EDM grid needs t_0 >= 0");
}

// Heun update from the refined estimate z_hat with d_i already known.
// Fills z_tilde, d_prime and returns z_{i-1}.
Vector heun_from(const NoisePredictor& predictor, const TimeGrid& grid, int i,
                 std::span<const double> z_hat, std::span<const double> d_i,
                 EdmTraceEntry& e, std::size_t& calls) {
  const double t_prev = grid.time(i - 1);
  const double h = t_prev - grid.time(i);
  const std::size_t n = z_hat.size();
  e.z_tilde.assign(n, 0.0);
  kernels::lincomb(e.z_tilde, 1.0, z_hat, h, d_i);
  if (t_prev == 0.0) {
    e.d_prime.reset();
    return e.z_tilde;
  }
  e.d_prime = predictor.gradient(e.z_tilde, t_prev);
  ++calls;
  Vector out(n);
  kernels::lincomb(out, 1.0, z_hat, 0.5 * h, d_i, 0.5 * h, *e.d_prime);
  return out;
}

}  // namespace

EdmStep edm_heun_step(const State& z_i, const NoisePredictor& predictor,
                      const TimeGrid& grid) {
  check_edm_grid(grid);
  const int i = z_i.index;
  if (i < 1 || i > grid.steps()) throw IndexError("EDM step index out of range");
  const double t_i = grid.time(i);
  if (!(t_i > 0.0)) throw DomainError("EDM step needs t_i > 0");
  EdmStep out;
  out.entry.index = i;
  out.entry.time = t_i;
  out.entry.z = z_i.z;
  out.entry.z_hat = z_i.z;
  out.entry.d = predictor.gradient(z_i.z, t_i);
  std::size_t calls = 0;
  out.next = {heun_from(predictor, grid, i, out.entry.z_hat, out.entry.d, out.entry,
                        calls),
              i - 1};
  return out;
}

EdmTrace bdia_edm_sample(const State& z_top, const NoisePredictor& predictor,
                         double gamma, const TimeGrid& grid) {
  check_edm_grid(grid);
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  const int n = grid.steps();
  if (z_top.index != n) throw IndexError("sampling starts at index N");
  const std::size_t dim = z_top.z.size();

  EdmTrace trace;
  Vector z = z_top.z;
  Vector z_up;  // z_{i+1}
  Vector d_up;  // d_{i+1}
  for (int i = n; i >= 1; --i) {
    EdmTraceEntry e;
    e.index = i;
    e.time = grid.time(i);
    e.z = z;
    e.d = predictor.gradient(z, e.time);
    ++trace.epsilon_calls;
    if (i == n) {
      e.z_hat = z;
    } else {
      const double hh = e.time - grid.time(i + 1);
      Vector target(dim);
      kernels::lincomb(target, 1.0, z_up, 0.5 * hh, d_up, 0.5 * hh, e.d);
      e.z_hat.assign(dim, 0.0);
      kernels::blend(e.z_hat, z, gamma, target, z);
    }
    Vector next = heun_from(predictor, grid, i, e.z_hat, e.d, e, trace.epsilon_calls);
    require_finite(next, "bdia_edm_sample");
    z_up = std::move(z);
    d_up = e.d;
    z = std::move(next);
    trace.entries.push_back(std::move(e));
  }
  EdmTraceEntry last;
  last.index = 0;
  last.time = grid.time(0);
  last.z = std::move(z);
  trace.entries.push_back(std::move(last));
  return trace;
}

EdmTrace edm_heun_sample(const State& z_top, const NoisePredictor& predictor,
                         const TimeGrid& grid) {
  check_edm_grid(grid);
  if (z_top.index != grid.steps()) throw IndexError("sampling starts at index N");
  EdmTrace trace;
  State cur = z_top;
  while (cur.index >= 1) {
    EdmStep step = edm_heun_step(cur, predictor, grid);
    trace.epsilon_calls += step.entry.d_prime ? 2 : 1;
    require_finite(step.next.z, "edm_heun_sample");
    trace.entries.push_back(std::move(step.entry));
    cur = std::move(step.next);
  }
  EdmTraceEntry last;
  last.index = 0;
  last.time = grid.time(0);
  last.z = std::move(cur.z);
  trace.entries.push_back(std::move(last));
  return trace;
}

Vector rk4_reference(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                     std::span<const double> z_from, double t_from, double t_to,
                     int n_steps) {
  if (n_steps < 1) throw ConfigError("rk4_reference needs n_steps >= 1");
  if (!schedule.in_domain(t_from) || !schedule.in_domain(t_to)) {
    throw DomainError("rk4_reference bounds outside schedule domain");
  }
  Vector z(z_from.begin(), z_from.end());
  if (t_from == t_to) return z;
  const std::size_t n = z.size();
  const double h = (t_to - t_from) / n_steps;
  Vector k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int s = 0; s < n_steps; ++s) {
    const double t = t_from + h * s;
    const double t_end = s + 1 == n_steps ? t_to : t_from + h * (s + 1);
    const double step = t_end - t;
    probability_flow_drift(predictor, schedule, z, t, k1);
    if (schedule.sigma(t_end) == 0.0) {
      kernels::lincomb(z, 1.0, z, step, k1);
      continue;
    }
    kernels::lincomb(tmp, 1.0, z, 0.5 * step, k1);
    probability_flow_drift(predictor, schedule, tmp, t + 0.5 * step, k2);
    kernels::lincomb(tmp, 1.0, z, 0.5 * step, k2);
    probability_flow_drift(predictor, schedule, tmp, t + 0.5 * step, k3);
    kernels::lincomb(tmp, 1.0, z, step, k3);
    probability_flow_drift(predictor, schedule, tmp, t_end, k4);
    kernels::lincomb(tmp, 1.0, k1, 2.0, k2, 2.0, k3);
    kernels::lincomb(tmp, 1.0, tmp, 1.0, k4);
    kernels::lincomb(z, 1.0, z, step / 6.0, tmp);
  }
  return z;
}

State rk4_reference(const State& z_from, const NoisePredictor& predictor,
                    double t_from, double t_to, int n_steps, int to_index) {
  return {rk4_reference(predictor, NoiseSchedule::edm(), z_from.z, t_from, t_to,
                        n_steps),
          to_index};
}

}  // namespace bdia
