#include "bdia/edict.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"

namespace bdia {

EdictConfig::EdictConfig(double p_) : p(p_) {
  if (!(p_ > 0.0 && p_ <= 1.0)) {
    throw ConfigError("EDICT p must lie in (0, 1], got " + std::to_string(p_));
  }
}

CbdiaConfig::CbdiaConfig(double g1, double g2) : gamma1(g1), gamma2(g2) {
  if (!(g1 >= 0.0 && g1 <= 1.0) || !(g2 >= 0.0 && g2 <= 1.0)) {
    throw ConfigError("CBDIA gammas must lie in [0, 1]");
  }
  if (g1 == g2) throw NonInvertibleError("CBDIA mixing is singular when gamma1 == gamma2");
}

const CoupledTraceEntry& CoupledTrace::at_index(int index) const {
  for (const auto& e : entries) {
    if (e.index == index) return e;
  }
  throw IndexError("coupled trace has no state at index " + std::to_string(index));
}

CoupledState coupled_from(const State& s) { return {s.z, s.z, s.index}; }

namespace {

void check_state(const CoupledState& s) {
  if (s.z.size() != s.y.size()) throw ShapeError("coupled sequences differ in dimension");
}

void check_step_index(const TimeGrid& grid, int i) {
  if (i < 1 || i > grid.steps()) {
    throw IndexError("coupled step index " + std::to_string(i) + " outside [1, " +
                     std::to_string(grid.steps()) + "]");
  }
}

void check_edict(const EdictConfig& cfg) {
  if (!(cfg.p > 0.0)) throw NonInvertibleError("EDICT needs p > 0");
}

void check_cbdia(const CbdiaConfig& cfg) {
  if (cfg.gamma1 == cfg.gamma2) {
    throw NonInvertibleError("CBDIA mixing is singular when gamma1 == gamma2");
  }
}

Vector shift(std::span<const double> x, double c, std::span<const double> d) {
  Vector out(x.size());
  kernels::lincomb(out, 1.0, x, c, d);
  return out;
}

CoupledTraceEntry entry_for(const CoupledState& s, const TimeGrid& grid) {
  CoupledTraceEntry e;
  e.index = s.index;
  e.time = grid.time(s.index);
  e.z = s.z;
  e.y = s.y;
  return e;
}

void require_finite_pair(const CoupledState& s, const char* where) {
  require_finite(s.z, where);
  require_finite(s.y, where);
}

}  // namespace

CoupledState edict_step(const CoupledState& s, const NoisePredictor& predictor,
                        const EdictConfig& cfg, const NoiseSchedule& schedule,
                        const TimeGrid& grid, CoupledTraceEntry* record) {
  check_edict(cfg);
  check_state(s);
  const int i = s.index;
  check_step_index(grid, i);
  const double t = grid.time(i);
  const DdimCoeffs c = ddim_coeffs(schedule, grid, i);
  const std::size_t n = s.z.size();
  const double p = cfg.p;

  Vector z_inter(n);
  Vector y_inter(n);
  kernels::lincomb(z_inter, c.a, s.z, c.b, predictor.epsilon(s.y, t));
  kernels::lincomb(y_inter, c.a, s.y, c.b, predictor.epsilon(z_inter, t));

  CoupledState out{Vector(n), Vector(n), i - 1};
  kernels::lincomb(out.z, p, z_inter, 1.0 - p, y_inter);
  kernels::lincomb(out.y, p, y_inter, 1.0 - p, out.z);
  if (record != nullptr) {
    record->first = std::move(z_inter);
    record->second = std::move(y_inter);
  }
  return out;
}

CoupledState edict_invert_step(const CoupledState& s,
                               const NoisePredictor& predictor,
                               const EdictConfig& cfg,
                               const NoiseSchedule& schedule, const TimeGrid& grid) {
  check_edict(cfg);
  check_state(s);
  const int i = s.index + 1;
  check_step_index(grid, i);
  const double t = grid.time(i);
  const DdimCoeffs c = ddim_coeffs(schedule, grid, i);
  const std::size_t n = s.z.size();
  const double p = cfg.p;

  Vector y_inter(n);
  Vector z_inter(n);
  kernels::lincomb(y_inter, 1.0 / p, s.y, -(1.0 - p) / p, s.z);
  kernels::lincomb(z_inter, 1.0 / p, s.z, -(1.0 - p) / p, y_inter);

  CoupledState out{Vector(n), Vector(n), i};
  kernels::lincomb(out.y, 1.0 / c.a, y_inter, -c.b / c.a,
                   predictor.epsilon(z_inter, t));
  kernels::lincomb(out.z, 1.0 / c.a, z_inter, -c.b / c.a,
                   predictor.epsilon(out.y, t));
  return out;
}

CoupledTrace edict_sample(const CoupledState& top, const NoisePredictor& predictor,
                          const EdictConfig& cfg, const NoiseSchedule& schedule,
                          const TimeGrid& grid) {
  if (top.index != grid.steps()) throw IndexError("sampling starts at index N");
  CoupledTrace trace;
  CoupledState cur = top;
  while (cur.index >= 1) {
    CoupledTraceEntry e = entry_for(cur, grid);
    CoupledState next = edict_step(cur, predictor, cfg, schedule, grid, &e);
    trace.epsilon_calls += 2;
    require_finite_pair(next, "edict_sample");
    trace.entries.push_back(std::move(e));
    cur = std::move(next);
  }
  trace.entries.push_back(entry_for(cur, grid));
  return trace;
}

CoupledTrace edict_invert_chain(const CoupledState& bottom,
                                const NoisePredictor& predictor,
                                const EdictConfig& cfg,
                                const NoiseSchedule& schedule, const TimeGrid& grid) {
  if (bottom.index != 0) throw IndexError("inversion starts at index 0");
  CoupledTrace trace;
  CoupledState cur = bottom;
  while (cur.index < grid.steps()) {
    trace.entries.push_back(entry_for(cur, grid));
    CoupledState next = edict_invert_step(cur, predictor, cfg, schedule, grid);
    trace.epsilon_calls += 2;
    require_finite_pair(next, "edict_invert_chain");
    cur = std::move(next);
  }
  trace.entries.push_back(entry_for(cur, grid));
  return trace;
}

CoupledState cbdia_step(const CoupledState& s, const NoisePredictor& predictor,
                        const CbdiaConfig& cfg, const NoiseSchedule& schedule,
                        const TimeGrid& grid, CoupledTraceEntry* record) {
  check_cbdia(cfg);
  check_state(s);
  const int i = s.index;
  check_step_index(grid, i);
  const double t_i = grid.time(i);
  const double t_prev = grid.time(i - 1);
  const std::size_t n = s.z.size();

  Vector df = ddim_delta(schedule, s.y, predictor.epsilon(s.y, t_i), t_i, t_prev);
  Vector w(n);
  kernels::lincomb(w, 1.0, s.z, 1.0, df);
  Vector db = ddim_delta(schedule, w, predictor.epsilon(w, t_prev), t_prev, t_i);
  Vector v(n);
  kernels::lincomb(v, 1.0, s.y, -1.0, db);

  CoupledState out{Vector(n), Vector(n), i - 1};
  kernels::lincomb(out.z, cfg.gamma1, w, 1.0 - cfg.gamma1, v);
  kernels::lincomb(out.y, cfg.gamma2, w, 1.0 - cfg.gamma2, v);
  if (record != nullptr) {
    record->first = std::move(w);
    record->second = std::move(v);
    record->delta_fwd = std::move(df);
    record->delta_bwd = std::move(db);
  }
  return out;
}

CoupledState cbdia_invert_step(const CoupledState& s,
                               const NoisePredictor& predictor,
                               const CbdiaConfig& cfg,
                               const NoiseSchedule& schedule, const TimeGrid& grid) {
  check_cbdia(cfg);
  check_state(s);
  const int i = s.index + 1;
  check_step_index(grid, i);
  const double t_i = grid.time(i);
  const double t_prev = grid.time(i - 1);
  const double g1 = cfg.gamma1;
  const double g2 = cfg.gamma2;
  const std::size_t n = s.z.size();

  Vector v(n);
  Vector w(n);
  kernels::lincomb(v, g1 / (g1 - g2), s.y, -g2 / (g1 - g2), s.z);
  kernels::lincomb(w, (1.0 - g1) / (g2 - g1), s.y, -(1.0 - g2) / (g2 - g1), s.z);

  CoupledState out{Vector(n), Vector(n), i};
  out.y = shift(v, 1.0,
                ddim_delta(schedule, w, predictor.epsilon(w, t_prev), t_prev, t_i));
  out.z = shift(w, -1.0,
                ddim_delta(schedule, out.y, predictor.epsilon(out.y, t_i), t_i, t_prev));
  return out;
}

CoupledTrace cbdia_sample(const CoupledState& top, const NoisePredictor& predictor,
                          const CbdiaConfig& cfg, const NoiseSchedule& schedule,
                          const TimeGrid& grid) {
  if (top.index != grid.steps()) throw IndexError("sampling starts at index N");
  check_cbdia(cfg);
  CoupledTrace trace;
  trace.cbdia = cfg;
  CoupledState cur = top;
  while (cur.index >= 1) {
    CoupledTraceEntry e = entry_for(cur, grid);
    CoupledState next = cbdia_step(cur, predictor, cfg, schedule, grid, &e);
    trace.epsilon_calls += 2;
    require_finite_pair(next, "cbdia_sample");
    trace.entries.push_back(std::move(e));
    cur = std::move(next);
  }
  trace.entries.push_back(entry_for(cur, grid));
  return trace;
}

CoupledTrace cbdia_invert_chain(const CoupledState& bottom,
                                const NoisePredictor& predictor,
                                const CbdiaConfig& cfg,
                                const NoiseSchedule& schedule, const TimeGrid& grid) {
  if (bottom.index != 0) throw IndexError("inversion starts at index 0");
  check_cbdia(cfg);
  CoupledTrace trace;
  trace.cbdia = cfg;
  CoupledState cur = bottom;
  while (cur.index < grid.steps()) {
    trace.entries.push_back(entry_for(cur, grid));
    CoupledState next = cbdia_invert_step(cur, predictor, cfg, schedule, grid);
    trace.epsilon_calls += 2;
    require_finite_pair(next, "cbdia_invert_chain");
    cur = std::move(next);
  }
  trace.entries.push_back(entry_for(cur, grid));
  return trace;
}

namespace {

int top_index(const CoupledTrace& trace) {
  int n = 0;
  for (const auto& e : trace.entries) n = std::max(n, e.index);
  return n;
}

const Vector& need(const Vector& v, const char* what, int index) {
  if (v.empty()) {
    throw Error(std::string("coupled trace is missing ") + what + " at index " +
                std::to_string(index));
  }
  return v;
}

// Delta(t_j -> t_{j-1} | y_j), recorded in the step taken from index j.
const Vector& fwd_at(const CoupledTrace& tr, int j) {
  return need(tr.at_index(j).delta_fwd, "delta_fwd", j);
}

// Delta(t_j -> t_{j+1} | w) from the step taken at index j + 1.  Under
// (0, 1) the w of that step is y_j; under (1, 0) it is z_j.
const Vector& bwd_from(const CoupledTrace& tr, int j) {
  return need(tr.at_index(j + 1).delta_bwd, "delta_bwd", j + 1);
}

void require_config(const CoupledTrace& tr, double g1, double g2) {
  if (!tr.cbdia || tr.cbdia->gamma1 != g1 || tr.cbdia->gamma2 != g2) {
    throw ConfigError("closed form needs a CBDIA trace with (gamma1, gamma2) = (" +
                      std::to_string(g1) + ", " + std::to_string(g2) + ")");
  }
}

}  // namespace

CbdiaEquivalence cbdia_bdia_equivalence(const CoupledTrace& cbdia,
                                        const SolverTrace& bdia) {
  require_config(cbdia, 0.0, 1.0);
  if (cbdia.entries.size() != bdia.entries.size()) {
    throw InvalidGridError("CBDIA and BDIA traces cover different grids");
  }
  const int n = top_index(cbdia);
  CbdiaEquivalence out;
  for (int i = 0; i <= n; ++i) {
    const auto& c = cbdia.at_index(i);
    const auto& b = bdia.at_index(i);
    if (c.time != b.time) throw InvalidGridError("CBDIA and BDIA traces use different times");
    out.max_discrepancy = max_or_nan(out.max_discrepancy, kernels::max_abs_diff(c.y, b.z));
  }

  const Vector& y_top = cbdia.at_index(n).y;
  const Vector& f_top = fwd_at(cbdia, n);
  const std::size_t dim = y_top.size();
  for (int i = 0; i <= n - 1; ++i) {
    Vector y_form = y_top;
    Vector z_form = y_top;
    if ((n - i) % 2 == 1) kernels::lincomb(y_form, 1.0, y_form, 1.0, f_top);
    if ((n - i - 1) % 2 == 1) kernels::lincomb(z_form, 1.0, z_form, 1.0, f_top);
    for (int j = i + 1; j <= n - 1; ++j) {
      const Vector& fj = fwd_at(cbdia, j);
      const Vector& bj = bwd_from(cbdia, j);
      if ((j - i) % 2 == 1) kernels::lincomb(y_form, 1.0, y_form, -1.0, bj, 1.0, fj);
      if (j >= i + 2 && (j - i - 1) % 2 == 1) {
        kernels::lincomb(z_form, 1.0, z_form, -1.0, bj, 1.0, fj);
      }
    }
    kernels::lincomb(z_form, 1.0, z_form, -1.0, bwd_from(cbdia, i));
    const auto& e = cbdia.at_index(i);
    out.closed_form_y_error = max_or_nan(out.closed_form_y_error, kernels::max_abs_diff(y_form, e.y));
    out.closed_form_z_error = max_or_nan(out.closed_form_z_error, kernels::max_abs_diff(z_form, e.z));

    // One-step identities: z_i = y_{i+1} - Delta_bwd, y_i = z_{i+1} + Delta_fwd.
    const auto& up = cbdia.at_index(i + 1);
    Vector z_step(dim);
    Vector y_step(dim);
    kernels::lincomb(z_step, 1.0, up.y, -1.0, need(up.delta_bwd, "delta_bwd", i + 1));
    kernels::lincomb(y_step, 1.0, up.z, 1.0, need(up.delta_fwd, "delta_fwd", i + 1));
    out.direction_residual = max_or_nan(
        {out.direction_residual, kernels::max_abs_diff(z_step, e.z),
         kernels::max_abs_diff(y_step, e.y)});
  }
  return out;
}

CbdiaSplitForm cbdia_split_form_errors(const CoupledTrace& cbdia) {
  require_config(cbdia, 1.0, 0.0);
  const int n = top_index(cbdia);
  const auto& top = cbdia.at_index(n);
  CbdiaSplitForm out;
  Vector y_form = top.y;
  Vector z_form = top.z;
  for (int i = n - 1; i >= 0; --i) {
    kernels::lincomb(y_form, 1.0, y_form, -1.0, bwd_from(cbdia, i));
    kernels::lincomb(z_form, 1.0, z_form, 1.0, fwd_at(cbdia, i + 1));
    const auto& e = cbdia.at_index(i);
    out.y_error = max_or_nan(out.y_error, kernels::max_abs_diff(y_form, e.y));
    out.z_error = max_or_nan(out.z_error, kernels::max_abs_diff(z_form, e.z));
  }
  return out;
}

}  // namespace bdia
