#include "bdia/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "bdia/config.hpp"
#include "bdia/ddim.hpp"
#include "bdia/dpm.hpp"
#include "bdia/edict.hpp"
#include "bdia/edm.hpp"
#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"
#include "bdia/parallel.hpp"
#include "bdia/random.hpp"
#include "bdia/trace_io.hpp"

namespace bdia {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kReferenceTrajectories = 32;
constexpr int kReferenceSteps = 4000;

}  // namespace

const std::vector<SolverInfo>& solver_registry() {
  static const std::vector<SolverInfo> registry = {
      {"ddim", SolverKind::kDdim, "", false, false},
      {"ddim-naive", SolverKind::kDdimNaive, "", true, false},
      {"bdia-ddim", SolverKind::kBdiaDdim, "gamma", true, false},
      {"edict", SolverKind::kEdict, "p", true, false},
      {"cbdia", SolverKind::kCbdia, "gamma1", true, false},
      {"edm", SolverKind::kEdm, "", false, true},
      {"bdia-edm", SolverKind::kBdiaEdm, "gamma", false, true},
      {"dpmpp-2m", SolverKind::kDpmpp2m, "", false, false},
      {"bdia-dpmpp-2m", SolverKind::kBdiaDpmpp2m, "gamma", false, false},
  };
  return registry;
}

const SolverInfo& solver_info(std::string_view name) {
  for (const auto& info : solver_registry()) {
    if (info.name == name) return info;
  }
  throw ConfigError("unknown solver '" + std::string(name) + "'");
}

double solver_param(const SolverInfo& info, const RunConfig& cfg) {
  if (info.param == "gamma") return cfg.gamma;
  if (info.param == "p") return cfg.p;
  if (info.param == "gamma1") return cfg.gamma1;
  return kNan;
}

SampleSet initial_noise(const RunConfig& cfg, const TimeGrid& grid, std::size_t count) {
  return exact_sample(cfg.mixture, cfg.schedule, grid.time(grid.steps()),
                      substream_seed(cfg.seed, "noise"), count);
}

SampleSet reference_samples(const RunConfig& cfg, const TimeGrid& grid,
                            std::size_t count) {
  return exact_sample(cfg.mixture, cfg.schedule, grid.time(0),
                      substream_seed(cfg.seed, "reference"), count);
}

SampleSet data_samples(const RunConfig& cfg, const TimeGrid& grid, std::size_t count) {
  return exact_sample(cfg.mixture, cfg.schedule, grid.time(0),
                      substream_seed(cfg.seed, "data"), count);
}

namespace {

struct Terminal {
  Vector z;
  std::size_t nfe = 0;
};

Terminal run_one(const RunConfig& cfg, const SolverInfo& solver, const TimeGrid& grid,
                 const NoisePredictor& predictor, const Vector& z_top) {
  const State top{z_top, grid.steps()};
  const NoiseSchedule& sch = cfg.schedule;
  switch (solver.kind) {
    case SolverKind::kDdim:
    case SolverKind::kDdimNaive: {
      auto tr = ddim_sample(top, predictor, sch, grid);
      return {tr.final_state(), tr.epsilon_calls};
    }
    case SolverKind::kBdiaDdim: {
      auto tr = bdia_sample(top, predictor, BdiaConfig(cfg.gamma), sch, grid);
      return {tr.final_state(), tr.epsilon_calls};
    }
    case SolverKind::kEdict: {
      auto tr = edict_sample(coupled_from(top), predictor, EdictConfig(cfg.p), sch, grid);
      return {tr.last().z, tr.epsilon_calls};
    }
    case SolverKind::kCbdia: {
      auto tr = cbdia_sample(coupled_from(top), predictor,
                             CbdiaConfig(cfg.gamma1, cfg.gamma2), sch, grid);
      return {tr.last().y, tr.epsilon_calls};
    }
    case SolverKind::kEdm: {
      auto tr = edm_heun_sample(top, predictor, grid);
      return {tr.final_state(), tr.epsilon_calls};
    }
    case SolverKind::kBdiaEdm: {
      auto tr = bdia_edm_sample(top, predictor, cfg.gamma, grid);
      return {tr.final_state(), tr.epsilon_calls};
    }
    case SolverKind::kDpmpp2m: {
      auto tr = dpmpp_2m_sample(top, predictor, sch, grid);
      return {tr.final_state(), tr.epsilon_calls};
    }
    case SolverKind::kBdiaDpmpp2m: {
      auto tr = bdia_dpmpp_sample(top, predictor, cfg.gamma, sch, grid);
      return {tr.final_state(), tr.epsilon_calls};
    }
  }
  throw ConfigError("unhandled solver");
}

void check_schedule(const RunConfig& cfg, const SolverInfo& solver) {
  if (solver.needs_edm_schedule && cfg.schedule.kind() != ScheduleKind::kEdm) {
    throw ConfigError("solver '" + std::string(solver.name) + "' needs the edm schedule");
  }
}

}  // namespace

BatchResult sample_batch(const RunConfig& cfg, const SolverInfo& solver,
                         const TimeGrid& grid, const NoisePredictor& predictor,
                         const SampleSet& initial) {
  check_schedule(cfg, solver);
  BatchResult out;
  out.terminal.resize(initial.size());
  std::vector<std::size_t> nfe(initial.size());
  parallel_for(initial.size(), cfg.workers, [&](std::size_t k) {
    Terminal t = run_one(cfg, solver, grid, predictor, initial[k]);
    out.terminal[k] = std::move(t.z);
    nfe[k] = t.nfe;
  });
  out.nfe = nfe.empty() ? 0 : nfe.front();
  for (std::size_t v : nfe) {
    if (v != out.nfe) throw Error("trajectories disagree on predictor call count");
  }
  return out;
}

void write_solver_trace(std::ostream& out, const RunConfig& cfg,
                        const SolverInfo& solver, const TimeGrid& grid,
                        const NoisePredictor& predictor, const Vector& z_top) {
  check_schedule(cfg, solver);
  const State top{z_top, grid.steps()};
  const NoiseSchedule& sch = cfg.schedule;
  switch (solver.kind) {
    case SolverKind::kDdim:
    case SolverKind::kDdimNaive:
      write_trace_csv(out, ddim_sample(top, predictor, sch, grid));
      return;
    case SolverKind::kBdiaDdim:
      write_trace_csv(out, bdia_sample(top, predictor, BdiaConfig(cfg.gamma), sch, grid));
      return;
    case SolverKind::kEdict:
      write_trace_csv(out, edict_sample(coupled_from(top), predictor,
                                        EdictConfig(cfg.p), sch, grid));
      return;
    case SolverKind::kCbdia:
      write_trace_csv(out, cbdia_sample(coupled_from(top), predictor,
                                        CbdiaConfig(cfg.gamma1, cfg.gamma2), sch, grid));
      return;
    case SolverKind::kEdm:
      write_trace_csv(out, edm_heun_sample(top, predictor, grid));
      return;
    case SolverKind::kBdiaEdm:
      write_trace_csv(out, bdia_edm_sample(top, predictor, cfg.gamma, grid));
      return;
    case SolverKind::kDpmpp2m:
      write_trace_csv(out, dpmpp_2m_sample(top, predictor, sch, grid));
      return;
    case SolverKind::kBdiaDpmpp2m:
      write_trace_csv(out, bdia_dpmpp_sample(top, predictor, cfg.gamma, sch, grid));
      return;
  }
}

namespace {

Terminal round_trip_one(const RunConfig& cfg, const SolverInfo& solver,
                        const TimeGrid& grid, const NoisePredictor& invert_with,
                        const NoisePredictor& regenerate_with, const Vector& x) {
  const NoiseSchedule& sch = cfg.schedule;
  const State bottom{x, 0};
  switch (solver.kind) {
    case SolverKind::kDdimNaive: {
      auto up = ddim_invert_chain_naive(bottom, invert_with, sch, grid);
      auto down = ddim_sample({up.final_state(), grid.steps()}, regenerate_with, sch, grid);
      return {down.final_state(), up.epsilon_calls + down.epsilon_calls};
    }
    case SolverKind::kBdiaDdim: {
      const BdiaConfig bc(cfg.gamma);
      const State z1 = ddim_invert_step_naive(bottom, invert_with, sch, grid, 1);
      auto up = bdia_invert_chain(bottom, z1, invert_with, bc, sch, grid);
      const int n = grid.steps();
      auto down = bdia_sample_from_pair({up.at_index(n).z, n}, {up.at_index(n - 1).z, n - 1},
                                        regenerate_with, bc, sch, grid);
      return {down.final_state(), 1 + up.epsilon_calls + down.epsilon_calls};
    }
    case SolverKind::kEdict: {
      const EdictConfig ec(cfg.p);
      auto up = edict_invert_chain(coupled_from(bottom), invert_with, ec, sch, grid);
      auto down = edict_sample(up.final_state(), regenerate_with, ec, sch, grid);
      return {down.last().z, up.epsilon_calls + down.epsilon_calls};
    }
    case SolverKind::kCbdia: {
      const CbdiaConfig cc(cfg.gamma1, cfg.gamma2);
      auto up = cbdia_invert_chain(coupled_from(bottom), invert_with, cc, sch, grid);
      auto down = cbdia_sample(up.final_state(), regenerate_with, cc, sch, grid);
      return {down.last().y, up.epsilon_calls + down.epsilon_calls};
    }
    default:
      throw ConfigError("solver '" + std::string(solver.name) +
                        "' does not support round trips");
  }
}

}  // namespace

RoundTripResult round_trip(const RunConfig& cfg, const SolverInfo& solver,
                           const TimeGrid& grid, const SampleSet& data) {
  if (!solver.round_trip) {
    throw ConfigError("solver '" + std::string(solver.name) +
                      "' does not support round trips (use ddim-naive, bdia-ddim, "
                      "edict or cbdia)");
  }
  if (cfg.schedule.sigma(grid.time(0)) == 0.0) {
    throw ConfigError("round trips need sigma(t_0) > 0");
  }
  if (solver.kind == SolverKind::kBdiaDdim && cfg.gamma == 0.0) {
    throw NonInvertibleError("BDIA with gamma = 0 is not invertible");
  }
  const MixturePredictor invert_with(cfg.mixture, cfg.schedule);
  const MixturePredictor regenerate_with(
      cfg.edit_shift ? cfg.mixture.shifted(*cfg.edit_shift) : cfg.mixture, cfg.schedule);

  RoundTripResult out;
  out.original = data;
  out.regenerated.resize(data.size());
  std::vector<std::size_t> nfe(data.size());
  parallel_for(data.size(), cfg.workers, [&](std::size_t k) {
    Terminal t = round_trip_one(cfg, solver, grid, invert_with, regenerate_with, data[k]);
    out.regenerated[k] = std::move(t.z);
    nfe[k] = t.nfe;
  });
  out.nfe = nfe.empty() ? 0 : nfe.front();
  out.error = reconstruction_error(out.original, out.regenerated);
  return out;
}

double terminal_error(const RunConfig& cfg, const TimeGrid& grid,
                      const NoisePredictor& predictor, const SampleSet& initial,
                      const SampleSet& terminal) {
  const std::size_t m = std::min({initial.size(), terminal.size(), kReferenceTrajectories});
  std::vector<double> err(m);
  parallel_for(m, cfg.workers, [&](std::size_t k) {
    const Vector ref = rk4_reference(predictor, cfg.schedule, initial[k],
                                     grid.time(grid.steps()), grid.time(0),
                                     kReferenceSteps);
    err[k] = kernels::max_abs_diff(ref, terminal[k]);
  });
  double worst = 0.0;
  for (double e : err) {
    if (std::isnan(e)) return e;
    worst = max_or_nan(worst, e);
  }
  return worst;
}

namespace {

ComparisonReport evaluate(const RunConfig& base, std::string_view solver_name, int n,
                          bool with_edit) {
  RunConfig cfg = base;
  cfg.solver = std::string(solver_name);
  cfg.grid.n = n;
  if (!with_edit) cfg.edit_shift.reset();
  validate(cfg);
  const SolverInfo& info = solver_info(cfg.solver);
  const TimeGrid grid = make_time_grid(cfg.grid);
  const MixturePredictor predictor(cfg.mixture, cfg.schedule);

  ComparisonReport r;
  r.solver = cfg.solver;
  r.n_steps = n;
  r.param = solver_param(info, cfg);

  const SampleSet initial = initial_noise(cfg, grid, cfg.batch);
  const auto start = std::chrono::steady_clock::now();
  const BatchResult batch = sample_batch(cfg, info, grid, predictor, initial);
  const auto stop = std::chrono::steady_clock::now();
  r.nfe = batch.nfe;
  r.wall_time_s = cfg.timing ? std::chrono::duration<double>(stop - start).count() : 0.0;

  const SampleSet reference = reference_samples(cfg, grid, cfg.batch);
  EnergyDistanceOptions ed;
  ed.workers = cfg.workers;
  ed.seed = substream_seed(cfg.seed, "pairs");
  r.energy_distance = energy_distance(batch.terminal, reference, ed);
  SlicedW1Options sw;
  sw.workers = cfg.workers;
  sw.seed = substream_seed(cfg.seed, "projections");
  r.sliced_w1 = sliced_w1(batch.terminal, reference, sw);
  r.terminal_error = terminal_error(cfg, grid, predictor, initial, batch.terminal);

  r.roundtrip_error = kNan;
  const bool invertible = info.round_trip &&
                          cfg.schedule.sigma(grid.time(0)) > 0.0 &&
                          !(info.kind == SolverKind::kBdiaDdim && cfg.gamma == 0.0);
  if (invertible) {
    try {
      const SampleSet data = data_samples(cfg, grid, cfg.batch);
      r.roundtrip_error = round_trip(cfg, info, grid, data).error.max_abs;
    } catch (const NumericError&) {
      // Inversion with small gamma can overflow; that is the measurement.
      r.roundtrip_error = std::numeric_limits<double>::infinity();
    }
  }
  return r;
}

}  // namespace

ComparisonReport evaluate_solver(const RunConfig& cfg, std::string_view solver, int n) {
  return evaluate(cfg, solver, n, false);
}

std::vector<ComparisonReport> compare(const RunConfig& cfg,
                                      const std::vector<std::string>& solvers,
                                      const std::vector<int>& ns) {
  if (solvers.empty()) throw ConfigError("compare needs at least one solver");
  if (ns.empty()) throw ConfigError("compare needs at least one step count");
  for (const auto& s : solvers) check_schedule(cfg, solver_info(s));
  std::vector<ComparisonReport> out;
  for (const auto& s : solvers) {
    for (int n : ns) out.push_back(evaluate(cfg, s, n, false));
  }
  return out;
}

std::vector<ComparisonReport> gamma_sweep(const RunConfig& cfg, std::string_view solver,
                                          const std::vector<double>& values) {
  const SolverInfo& info = solver_info(solver);
  if (info.param != "gamma" && info.param != "p") {
    throw ConfigError("solver '" + std::string(solver) + "' has no gamma or p to sweep");
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ComparisonReport> out;
  for (double v : values) {
    RunConfig c = cfg;
    if (info.param == "gamma") {
      c.gamma = v;
    } else {
      c.p = v;
    }
    out.push_back(evaluate(c, solver, c.grid.n, true));
  }
  return out;
}

}  // namespace bdia
