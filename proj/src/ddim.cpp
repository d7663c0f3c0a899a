#include "bdia/ddim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"

namespace bdia {

BdiaConfig::BdiaConfig(double g) : gamma(g) {
  if (!(g >= 0.0 && g <= 1.0)) {
    throw ConfigError("BDIA gamma must lie in [0, 1], got " + std::to_string(g));
  }
}

const TraceEntry& SolverTrace::at_index(int index) const {
  for (const auto& e : entries) {
    if (e.index == index) return e;
  }
  throw IndexError("trace has no state at index " + std::to_string(index));
}

namespace {

Vector apply(const DdimCoeffs& c, std::span<const double> z,
             std::span<const double> eps) {
  Vector out(z.size());
  kernels::lincomb(out, c.a, z, c.b, eps);
  return out;
}

Vector minus(std::span<const double> x, std::span<const double> y) {
  Vector out(x.size());
  kernels::lincomb(out, 1.0, x, -1.0, y);
  return out;
}

void check_shape(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("state and noise differ in dimension");
}

void check_bdia_index(const TimeGrid& grid, int i) {
  if (i < 1 || i > grid.steps() - 1) {
    throw IndexError("BDIA step index " + std::to_string(i) + " outside [1, " +
                     std::to_string(grid.steps() - 1) + "]");
  }
}

struct BdiaParts {
  Vector forward;   // z_i + Delta(t_i -> t_{i-1} | z_i)
  Vector backward;  // z_i + Delta(t_i -> t_{i+1} | z_i)
};

BdiaParts bdia_parts(std::span<const double> z_i, std::span<const double> eps_i,
                     const NoiseSchedule& schedule, const TimeGrid& grid, int i) {
  return {apply(ddim_coeffs(schedule, grid, i), z_i, eps_i),
          apply(transfer_coeffs(schedule, grid.time(i), grid.time(i + 1)), z_i,
                eps_i)};
}

TraceEntry make_entry(const State& s, const TimeGrid& grid) {
  TraceEntry e;
  e.index = s.index;
  e.time = grid.time(s.index);
  e.z = s.z;
  return e;
}

}  // namespace

State ddim_step(const State& z_i, std::span<const double> eps,
                const DdimCoeffs& coeffs) {
  check_shape(z_i.z, eps);
  return {apply(coeffs, z_i.z, eps), z_i.index - 1};
}

Vector ddim_delta(const NoiseSchedule& schedule, std::span<const double> z,
                  std::span<const double> eps, double t_from, double t_to) {
  check_shape(z, eps);
  const DdimCoeffs c = transfer_coeffs(schedule, t_from, t_to);
  Vector out(z.size());
  kernels::lincomb(out, c.a, z, c.b, eps, -1.0, z);
  return out;
}

State ddim_invert_step_naive(const State& z_prev, const NoisePredictor& predictor,
                             const NoiseSchedule& schedule, const TimeGrid& grid,
                             int i) {
  if (i < 1 || i > grid.steps()) throw IndexError("naive inversion index out of range");
  if (z_prev.index != i - 1) throw IndexError("naive inversion expects the state at i-1");
  const Vector eps = predictor.epsilon(z_prev.z, grid.time(i - 1));
  const DdimCoeffs c = transfer_coeffs(schedule, grid.time(i - 1), grid.time(i));
  return {apply(c, z_prev.z, eps), i};
}

SolverTrace ddim_sample(const State& z_top, const NoisePredictor& predictor,
                        const NoiseSchedule& schedule, const TimeGrid& grid) {
  if (z_top.index != grid.steps()) throw IndexError("sampling starts at index N");
  SolverTrace trace;
  State cur = z_top;
  for (int i = grid.steps(); i >= 1; --i) {
    TraceEntry e = make_entry(cur, grid);
    e.eps = predictor.epsilon(cur.z, grid.time(i));
    ++trace.epsilon_calls;
    State next = ddim_step(cur, e.eps, ddim_coeffs(schedule, grid, i));
    require_finite(next.z, "ddim_sample");
    e.delta_fwd = minus(next.z, cur.z);
    trace.entries.push_back(std::move(e));
    cur = std::move(next);
  }
  trace.entries.push_back(make_entry(cur, grid));
  return trace;
}

SolverTrace ddim_invert_chain_naive(const State& z_0,
                                    const NoisePredictor& predictor,
                                    const NoiseSchedule& schedule,
                                    const TimeGrid& grid) {
  if (z_0.index != 0) throw IndexError("inversion starts at index 0");
  SolverTrace trace;
  State cur = z_0;
  for (int i = 1; i <= grid.steps(); ++i) {
    TraceEntry e = make_entry(cur, grid);
    e.eps = predictor.epsilon(cur.z, grid.time(i - 1));
    ++trace.epsilon_calls;
    State next{apply(transfer_coeffs(schedule, grid.time(i - 1), grid.time(i)),
                     cur.z, e.eps),
               i};
    require_finite(next.z, "ddim_invert_chain_naive");
    e.delta_bwd = minus(next.z, cur.z);
    trace.entries.push_back(std::move(e));
    cur = std::move(next);
  }
  trace.entries.push_back(make_entry(cur, grid));
  return trace;
}

State bdia_init_step(const State& z_top, const NoisePredictor& predictor,
                     const NoiseSchedule& schedule, const TimeGrid& grid) {
  const int n = grid.steps();
  if (z_top.index != n) throw IndexError("BDIA boundary step starts at index N");
  const Vector eps = predictor.epsilon(z_top.z, grid.time(n));
  return ddim_step(z_top, eps, ddim_coeffs(schedule, grid, n));
}

Vector bdia_update(const NoiseSchedule& schedule, std::span<const double> z_far,
                   std::span<const double> z_mid, std::span<const double> eps_mid,
                   double t_far, double t_mid, double t_near, double gamma) {
  check_shape(z_mid, eps_mid);
  check_shape(z_far, z_mid);
  const Vector fwd = apply(transfer_coeffs(schedule, t_mid, t_near), z_mid, eps_mid);
  const Vector bwd = apply(transfer_coeffs(schedule, t_mid, t_far), z_mid, eps_mid);
  Vector out(z_mid.size());
  kernels::blend(out, fwd, gamma, z_far, bwd);
  return out;
}

Vector bdia_inverse_update(const NoiseSchedule& schedule,
                           std::span<const double> z_near,
                           std::span<const double> z_mid,
                           std::span<const double> eps_mid, double t_far,
                           double t_mid, double t_near, double gamma) {
  if (!(gamma > 0.0)) throw NonInvertibleError("BDIA inverse needs gamma > 0");
  check_shape(z_mid, eps_mid);
  check_shape(z_near, z_mid);
  const Vector fwd = apply(transfer_coeffs(schedule, t_mid, t_near), z_mid, eps_mid);
  const Vector bwd = apply(transfer_coeffs(schedule, t_mid, t_far), z_mid, eps_mid);
  Vector out(z_mid.size());
  kernels::blend(out, bwd, 1.0 / gamma, z_near, fwd);
  return out;
}

State bdia_step(const State& z_ip1, const State& z_i, std::span<const double> eps_i,
                const BdiaConfig& cfg, const NoiseSchedule& schedule,
                const TimeGrid& grid) {
  const int i = z_i.index;
  check_bdia_index(grid, i);
  if (z_ip1.index != i + 1) throw IndexError("bdia_step expects states at i+1 and i");
  check_shape(z_i.z, eps_i);
  check_shape(z_ip1.z, z_i.z);
  const BdiaParts parts = bdia_parts(z_i.z, eps_i, schedule, grid, i);
  State out{Vector(z_i.z.size()), i - 1};
  kernels::blend(out.z, parts.forward, cfg.gamma, z_ip1.z, parts.backward);
  return out;
}

State bdia_invert_step(const State& z_im1, const State& z_i,
                       std::span<const double> eps_i, const BdiaConfig& cfg,
                       const NoiseSchedule& schedule, const TimeGrid& grid) {
  if (!(cfg.gamma > 0.0)) throw NonInvertibleError("BDIA inverse needs gamma > 0");
  const int i = z_i.index;
  check_bdia_index(grid, i);
  if (z_im1.index != i - 1) throw IndexError("bdia_invert_step expects states at i-1 and i");
  check_shape(z_i.z, eps_i);
  check_shape(z_im1.z, z_i.z);
  const BdiaParts parts = bdia_parts(z_i.z, eps_i, schedule, grid, i);
  State out{Vector(z_i.z.size()), i + 1};
  kernels::blend(out.z, parts.backward, 1.0 / cfg.gamma, z_im1.z, parts.forward);
  return out;
}

namespace {

// Descends from (upper, cur) = (z_{k+1}, z_k) down to index 0, appending
// entries for cur and every later state.
void bdia_descend(State upper, State cur, const NoisePredictor& predictor,
                  const BdiaConfig& cfg, const NoiseSchedule& schedule,
                  const TimeGrid& grid, SolverTrace& trace) {
  while (cur.index >= 1) {
    const int i = cur.index;
    TraceEntry e = make_entry(cur, grid);
    e.eps = predictor.epsilon(cur.z, grid.time(i));
    ++trace.epsilon_calls;
    const BdiaParts parts = bdia_parts(cur.z, e.eps, schedule, grid, i);
    State next{Vector(cur.z.size()), i - 1};
    kernels::blend(next.z, parts.forward, cfg.gamma, upper.z, parts.backward);
    require_finite(next.z, "bdia_sample");
    e.delta_fwd = minus(parts.forward, cur.z);
    e.delta_bwd = minus(parts.backward, cur.z);
    trace.entries.push_back(std::move(e));
    upper = std::move(cur);
    cur = std::move(next);
  }
  trace.entries.push_back(make_entry(cur, grid));
}

}  // namespace

SolverTrace bdia_sample(const State& z_top, const NoisePredictor& predictor,
                        const BdiaConfig& cfg, const NoiseSchedule& schedule,
                        const TimeGrid& grid) {
  const int n = grid.steps();
  if (z_top.index != n) throw IndexError("sampling starts at index N");
  SolverTrace trace;
  TraceEntry top = make_entry(z_top, grid);
  top.eps = predictor.epsilon(z_top.z, grid.time(n));
  ++trace.epsilon_calls;
  State below = ddim_step(z_top, top.eps, ddim_coeffs(schedule, grid, n));
  require_finite(below.z, "bdia_sample");
  top.delta_fwd = minus(below.z, z_top.z);
  trace.entries.push_back(std::move(top));
  bdia_descend(z_top, std::move(below), predictor, cfg, schedule, grid, trace);
  return trace;
}

SolverTrace bdia_sample_from_pair(const State& z_top, const State& z_below,
                                  const NoisePredictor& predictor,
                                  const BdiaConfig& cfg,
                                  const NoiseSchedule& schedule,
                                  const TimeGrid& grid) {
  const int n = grid.steps();
  if (z_top.index != n || z_below.index != n - 1) {
    throw IndexError("anchored sampling expects states at N and N-1");
  }
  check_shape(z_top.z, z_below.z);
  SolverTrace trace;
  trace.entries.push_back(make_entry(z_top, grid));
  bdia_descend(z_top, z_below, predictor, cfg, schedule, grid, trace);
  return trace;
}

SolverTrace bdia_invert_chain(const State& z_0, const State& z_1,
                              const NoisePredictor& predictor,
                              const BdiaConfig& cfg, const NoiseSchedule& schedule,
                              const TimeGrid& grid) {
  if (!(cfg.gamma > 0.0)) throw NonInvertibleError("BDIA inversion needs gamma > 0");
  if (z_0.index != 0 || z_1.index != 1) {
    throw IndexError("inversion chain is anchored at indices 0 and 1");
  }
  check_shape(z_0.z, z_1.z);
  SolverTrace trace;
  trace.entries.push_back(make_entry(z_0, grid));
  State lower = z_0;
  State cur = z_1;
  while (cur.index < grid.steps()) {
    const int i = cur.index;
    TraceEntry e = make_entry(cur, grid);
    e.eps = predictor.epsilon(cur.z, grid.time(i));
    ++trace.epsilon_calls;
    const BdiaParts parts = bdia_parts(cur.z, e.eps, schedule, grid, i);
    State next{Vector(cur.z.size()), i + 1};
    kernels::blend(next.z, parts.backward, 1.0 / cfg.gamma, lower.z, parts.forward);
    require_finite(next.z, "bdia_invert_chain");
    e.delta_fwd = minus(parts.forward, cur.z);
    e.delta_bwd = minus(parts.backward, cur.z);
    trace.entries.push_back(std::move(e));
    lower = std::move(cur);
    cur = std::move(next);
  }
  trace.entries.push_back(make_entry(cur, grid));
  return trace;
}

double expansion_forward_weight(double gamma, int lag) {
  return (1.0 - std::pow(-gamma, lag)) / (1.0 + gamma);
}

double expansion_backward_weight(double gamma, int lag) {
  return (gamma + std::pow(-gamma, lag)) / (1.0 + gamma);
}

namespace {

const Vector& recorded(const Vector& v, const char* what, int index) {
  if (v.empty()) {
    throw Error(std::string("trace is missing ") + what + " at index " +
                std::to_string(index));
  }
  return v;
}

int top_index(const SolverTrace& trace) {
  int n = 0;
  for (const auto& e : trace.entries) n = std::max(n, e.index);
  return n;
}

}  // namespace

Vector prop1_expansion(const SolverTrace& trace, const BdiaConfig& cfg, int i) {
  const int n = top_index(trace);
  if (i < 0 || i > n - 2) throw IndexError("expansion index must satisfy 0 <= i <= N-2");
  const double g = cfg.gamma;
  Vector out = trace.at_index(n).z;
  for (int j = n; j >= i + 2; --j) {
    const Vector& fwd = recorded(trace.at_index(j).delta_fwd, "delta_fwd", j);
    const Vector& bwd = recorded(trace.at_index(j - 1).delta_bwd, "delta_bwd", j - 1);
    kernels::lincomb(out, 1.0, out, expansion_forward_weight(g, j - i), fwd,
                     -expansion_backward_weight(g, j - i), bwd);
  }
  const Vector& last = recorded(trace.at_index(i + 1).delta_fwd, "delta_fwd", i + 1);
  kernels::lincomb(out, 1.0, out, 1.0, last);

  if (g == 1.0) {
    const Vector parity = prop1_expansion_parity(trace, i);
    const double gap = kernels::max_abs_diff(out, parity);
    if (!(gap <= 1e-12)) {
      throw NumericError("expansion forms disagree by " + std::to_string(gap));
    }
  }
  return out;
}

Vector prop1_expansion_parity(const SolverTrace& trace, int i) {
  const int n = top_index(trace);
  if (i < 0 || i > n - 2) throw IndexError("expansion index must satisfy 0 <= i <= N-2");
  Vector out = trace.at_index(n).z;
  if ((n - i) % 2 == 1) {
    kernels::lincomb(out, 1.0, out, 1.0,
                     recorded(trace.at_index(n).delta_fwd, "delta_fwd", n));
  }
  for (int j = n - 1; j >= i + 1; --j) {
    if ((j - i) % 2 == 0) continue;
    const auto& e = trace.at_index(j);
    kernels::lincomb(out, 1.0, out, -1.0, recorded(e.delta_bwd, "delta_bwd", j), 1.0,
                     recorded(e.delta_fwd, "delta_fwd", j));
  }
  return out;
}

}  // namespace bdia
