// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bdia/analysis.hpp"
#include "bdia/commands.hpp"
#include "bdia/config.hpp"
#include "bdia/ddim.hpp"
#include "bdia/dpm.hpp"
#include "bdia/edict.hpp"
#include "bdia/edm.hpp"
#include "bdia/runner.hpp"
#include "oracles.hpp"

using namespace bdia;

namespace {

const NoiseSchedule kVp = NoiseSchedule::vp();
const NoiseSchedule kEdm = NoiseSchedule::edm();

// Collects the individual checks of one criterion.
struct Criterion {
  bool ok = true;
  std::vector<std::string> notes;

  void le(const std::string& what, double value, double bound) {
    const bool pass = value <= bound;  // NaN fails
    ok = ok && pass;
    notes.push_back(what + "=" + format_double(value) + (pass ? "<=" : ">") + format_double(bound));
  }
  void eq(const std::string& what, long long value, long long expected) {
    const bool pass = value == expected;
    ok = ok && pass;
    notes.push_back(what + "=" + std::to_string(value) + (pass ? "==" : "!=") + std::to_string(expected));
  }
  void near(const std::string& what, double value, double target, double tol) {
    const bool pass = std::fabs(value - target) <= tol;
    ok = ok && pass;
    notes.push_back(what + "=" + format_double(value) + (pass ? " within " : " outside ") +
                    format_double(target) + "+-" + format_double(tol));
  }
  void note(const std::string& text) { notes.push_back(text); }
};

// Larger of two errors; NaN wins so a broken run cannot pass.
double worse(double a, double b) { return std::isnan(a) || std::isnan(b) ? NAN : std::max(a, b); }
double worse(std::initializer_list<double> xs) {
  double m = 0.0;
  for (double x : xs) m = worse(m, x);
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TimeGrid vp_grid(int n) { return make_time_grid(GridKind::kUniform, n, 1e-3, 0.99); }

MixturePredictor pair_predictor(std::size_t d) {
  return MixturePredictor(GaussianMixture::symmetric_pair(d, 2.0, 0.25), kVp);
}

RunConfig mixture_config(std::size_t d, std::size_t batch) {
  RunConfig cfg;
  cfg.mixture = GaussianMixture::symmetric_pair(d, 2.0, 0.25);
  cfg.batch = batch;
  cfg.grid.n = 50;
  return cfg;
}

void criterion_1(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const TimeGrid g = vp_grid(20);
  const auto p = pair_predictor(4);
  const double gammas[] = {0.25, 0.5, 0.92, 1.0};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const BdiaConfig cfg(gammas[trial % 4]);
    const int i = 1 + trial % 19;
    const State z_ip1{oracle::normal_vec(4, 1.0, rng), i + 1};
    const State z_i{oracle::normal_vec(4, 1.0, rng), i};
    const Vector eps = p.epsilon(z_i.z, g.time(i));
    const State down = bdia_step(z_ip1, z_i, eps, cfg, kVp, g);
    const State back = bdia_invert_step(down, z_i, eps, cfg, kVp, g);
    worst = worse(worst, oracle::max_abs_diff(back.z, z_ip1.z));
  }
  c.le("step_inverse", worst, 1e-13);
  for (std::size_t d : {2u, 16u}) {
    for (double gamma : {0.92, 1.0}) {
      RunConfig cfg = mixture_config(d, 100);
      cfg.gamma = gamma;
      const TimeGrid grid = make_time_grid(cfg.grid);
      const auto rt = round_trip(cfg, solver_info("bdia-ddim"), grid, data_samples(cfg, grid, cfg.batch));
      c.le("roundtrip_d" + std::to_string(d) + "_g" + format_double(gamma), rt.error.max_abs, 1e-8);
    }
  }
  c.le("seconds", seconds_since(start), 5.0);
}

void criterion_2(Criterion& c) {
  std::mt19937_64 rng(202);
  const TimeGrid g = vp_grid(20);
  const auto p = pair_predictor(4);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const EdictConfig cfg(trial % 2 == 0 ? 0.93 : 0.8);
    const int i = 1 + trial % 20;
    const CoupledState s{oracle::normal_vec(4, 1.0, rng), oracle::normal_vec(4, 1.0, rng), i};
    const CoupledState down = edict_step(s, p, cfg, kVp, g);
    const CoupledState back = edict_invert_step(down, p, cfg, kVp, g);
    worst = worse({worst, oracle::max_abs_diff(back.z, s.z), oracle::max_abs_diff(back.y, s.y)});
  }
  c.le("step_inverse", worst, 1e-13);
  for (std::size_t d : {2u, 16u}) {
    RunConfig cfg = mixture_config(d, 100);
    cfg.solver = "edict";
    const TimeGrid grid = make_time_grid(cfg.grid);
    const auto rt = round_trip(cfg, solver_info("edict"), grid, data_samples(cfg, grid, cfg.batch));
    c.le("roundtrip_d" + std::to_string(d), rt.error.max_abs, 1e-8);
  }
  const Vector top{0.4, -1.1, 0.2, 0.9};
  CountingPredictor counted(p);
  edict_sample({top, top, 20}, counted, EdictConfig(0.93), kVp, g);
  c.eq("edict_calls_per_step", static_cast<long long>(counted.calls() / 20), 2);
  counted.reset();
  bdia_sample({top, 20}, counted, BdiaConfig(1.0), kVp, g);
  c.eq("bdia_calls_per_step", static_cast<long long>(counted.calls() / 20), 1);
}

void criterion_3(Criterion& c) {
  std::mt19937_64 rng(303);
  const TimeGrid g = vp_grid(20);
  const auto p = pair_predictor(3);
  const CbdiaConfig mixed(0.3, 0.8);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int i = 1 + trial % 20;
    const CoupledState s{oracle::normal_vec(3, 1.0, rng), oracle::normal_vec(3, 1.0, rng), i};
    const CoupledState back = cbdia_invert_step(cbdia_step(s, p, mixed, kVp, g), p, mixed, kVp, g);
    worst = worse({worst, oracle::max_abs_diff(back.z, s.z), oracle::max_abs_diff(back.y, s.y)});
  }
  c.le("step_inverse", worst, 1e-13);
  const Vector top = oracle::normal_vec(3, 1.0, rng);
  const auto cb = cbdia_sample({top, top, 20}, p, CbdiaConfig(0.0, 1.0), kVp, g);
  const auto bd = bdia_sample({top, 20}, p, BdiaConfig(1.0), kVp, g);
  double seq = 0.0;
  for (int i = 0; i <= 20; ++i) seq = worse(seq, oracle::max_abs_diff(cb.at_index(i).y, bd.at_index(i).z));
  c.le("y_vs_bdia", seq, 1e-12);
  const CbdiaEquivalence eq = cbdia_bdia_equivalence(cb, bd);
  c.le("closed_form_y", eq.closed_form_y_error, 1e-10);
  c.le("closed_form_z", eq.closed_form_z_error, 1e-10);
  const CbdiaSplitForm l2 = cbdia_split_form_errors(cbdia_sample({top, top, 20}, p, CbdiaConfig(1.0, 0.0), kVp, g));
  c.le("split_form_y", l2.y_error, 1e-10);
  c.le("split_form_z", l2.z_error, 1e-10);
}

void criterion_4(Criterion& c) {
  const TimeGrid g = vp_grid(20);
  const auto p = pair_predictor(3);
  const Vector top{0.7, -0.3, 1.2};
  for (double gamma : {0.5, 0.92, 1.0}) {
    const BdiaConfig cfg(gamma);
    const auto tr = bdia_sample({top, 20}, p, cfg, kVp, g);
    double worst = 0.0;
    for (int i = 0; i <= 18; ++i) {
      worst = worse(worst, oracle::max_abs_diff(prop1_expansion(tr, cfg, i), tr.at_index(i).z));
    }
    c.le("expansion_g" + format_double(gamma), worst, 1e-10);
    if (gamma == 1.0) {
      double parity = 0.0;
      for (int i = 0; i <= 18; ++i) {
        parity = worse(parity, oracle::max_abs_diff(prop1_expansion_parity(tr, i),
                                                       prop1_expansion(tr, cfg, i)));
      }
      c.le("parity_form", parity, 1e-12);
    }
  }
  double sums = 0.0;
  for (double gamma : {0.0, 0.25, 0.5, 0.92, 1.0}) {
    for (int lag = 1; lag <= 20; ++lag) {
      sums = worse(sums, std::fabs(expansion_forward_weight(gamma, lag) +
                                      expansion_backward_weight(gamma, lag) - 1.0));
    }
  }
  c.le("weight_sums", sums, 1e-15);
}

void criterion_5(Criterion& c) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.01, 0.98);
  double worst = 0.0;
  int draws = 0;
  while (draws < 1000) {
    double t[3] = {u(rng), u(rng), u(rng)};
    std::sort(t, t + 3);
    if (t[1] - t[0] < 1e-3 || t[2] - t[1] < 1e-3) continue;
    const Vector a = oracle::normal_vec(3, 1.0, rng), z = oracle::normal_vec(3, 1.0, rng),
                 e = oracle::normal_vec(3, 1.0, rng);
    const Vector swapped = bdia_update(kVp, a, z, e, t[0], t[1], t[2], 1.0);
    const Vector inverse = bdia_inverse_update(kVp, a, z, e, t[2], t[1], t[0], 1.0);
    worst = worse(worst, oracle::max_abs_diff(swapped, inverse));
    ++draws;
  }
  c.le("swapped_vs_inverse", worst, 1e-13);
}

template <class TraceA, class TraceB>
double trace_gap(const TraceA& a, const TraceB& b) {
  if (a.entries.size() != b.entries.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    worst = worse(worst, oracle::max_abs_diff(a.entries[k].z, b.entries[k].z));
  }
  return worst;
}

void criterion_6(Criterion& c) {
  const auto p = pair_predictor(4);
  const TimeGrid g = vp_grid(20);
  const State top{Vector{0.8, -0.2, 1.4, -0.9}, 20};
  c.le("bdia_ddim", trace_gap(bdia_sample(top, p, BdiaConfig(0.0), kVp, g), ddim_sample(top, p, kVp, g)), 1e-14);
  c.le("bdia_dpm", trace_gap(bdia_dpmpp_sample(top, p, 0.0, kVp, g), dpmpp_2m_sample(top, p, kVp, g)), 1e-14);
  const MixturePredictor pe(GaussianMixture::symmetric_pair(4, 2.0, 0.25), kEdm);
  const TimeGrid ge = make_time_grid(GridKind::kPowerLaw, 20, 0.002, 80.0, 7.0);
  const State top_e{Vector{60.0, -20.0, 10.0, 75.0}, 20};
  c.le("bdia_edm", trace_gap(bdia_edm_sample(top_e, pe, 0.0, ge), edm_heun_sample(top_e, pe, ge)), 1e-14);
}

void criterion_7(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  const MixturePredictor p(GaussianMixture::single_gaussian(1, 1.0), kEdm);
  const Vector z_top{2.0};
  const double exact = analytic_ode_solution(1.0, z_top, 1.0, 0.01)[0];
  std::vector<std::pair<double, double>> ddim, heun, bdia;
  for (int n : {10, 20, 40, 80}) {
    const TimeGrid g = make_time_grid(GridKind::kUniform, n, 0.01, 1.0);
    const double h = 0.99 / n;
    ddim.emplace_back(h, std::fabs(ddim_sample({z_top, n}, p, kEdm, g).final_state()[0] - exact));
    heun.emplace_back(h, std::fabs(edm_heun_sample({z_top, n}, p, g).final_state()[0] - exact));
    bdia.emplace_back(h, std::fabs(bdia_edm_sample({z_top, n}, p, 1.0, g).final_state()[0] - exact));
  }
  c.near("ddim_order", convergence_order(ddim), 1.0, 0.3);
  c.near("heun_order", convergence_order(heun), 2.0, 0.3);
  c.near("bdia_edm_order", convergence_order(bdia), 2.0, 0.3);
  const State rk = rk4_reference({z_top, 1}, p, 1.0, 0.01, 100000, 0);
  c.le("rk4_error", std::fabs(rk.z[0] - exact), 1e-10);
  c.le("seconds", seconds_since(start), 30.0);
}

void criterion_8(Criterion& c) {
  RunConfig cfg;
  cfg.batch = 10000;
  cfg.grid.n = 10;
  cfg.workers = 8;
  const ComparisonReport ddim = evaluate_solver(cfg, "ddim", 10);
  const ComparisonReport bdia = evaluate_solver(cfg, "bdia-ddim", 10);
  c.note("ddim_ed=" + format_double(ddim.energy_distance));
  c.note("bdia_ed=" + format_double(bdia.energy_distance));
  c.le("bdia_minus_ddim", bdia.energy_distance - ddim.energy_distance, 0.0);
}

void criterion_9(Criterion& c) {
  for (const SolverInfo& info : solver_registry()) {
    const bool edm = info.needs_edm_schedule;
    for (int n : {10, 20, 35}) {
      for (bool closed : {false, true}) {
        if (closed && !edm) continue;
        RunConfig cfg;
        cfg.batch = 4;
        if (edm) {
          cfg.schedule = kEdm;
          cfg.grid = default_grid(kEdm, n);
          if (closed) cfg.grid.t_min = 0.0;
        }
        cfg.grid.n = n;
        const TimeGrid grid = make_time_grid(cfg.grid);
        const MixturePredictor pred(cfg.mixture, cfg.schedule);
        const auto res = sample_batch(cfg, info, grid, pred, initial_noise(cfg, grid, cfg.batch));
        long long expected = n;
        if (info.kind == SolverKind::kEdict || info.kind == SolverKind::kCbdia) expected = 2 * n;
        if (edm) expected = closed ? 2 * n - 1 : 2 * n;
        const std::string tag = std::string(info.name) + "_N" + std::to_string(n) + (closed ? "_t0" : "");
        if (static_cast<long long>(res.nfe) != expected) c.eq(tag, static_cast<long long>(res.nfe), expected);
        // The count is also checked against the calls actually made.
        CountingPredictor counted(pred);
        const auto one = sample_batch(cfg, info, grid, counted, initial_noise(cfg, grid, 1));
        if (static_cast<long long>(counted.calls()) != expected) {
          c.eq(tag + "_calls", static_cast<long long>(counted.calls()), expected);
        }
        (void)one;
      }
    }
  }
  if (c.ok) c.note("all solvers and N match");
}

void criterion_10(Criterion& c) {
  RunConfig cfg;
  cfg.batch = 300;
  cfg.seed = 12345;
  const std::vector<std::string> solvers{"ddim", "ddim-naive", "bdia-ddim", "edict",
                                         "cbdia", "dpmpp-2m", "bdia-dpmpp-2m"};
  auto run = [&](int workers) {
    RunConfig local = cfg;
    local.workers = workers;
    std::ostringstream out, err;
    const int code = run_guarded([&] { return cmd_compare(local, solvers, {10, 20}, out, err); }, err);
    return code == kExitOk ? out.str() : std::string("exit ") + std::to_string(code) + ": " + err.str();
  };
  const std::string first = run(1);
  c.eq("repeat_identical", run(1) == first, 1);
  c.eq("workers_8_identical", run(8) == first, 1);
  RunConfig edm_cfg = cfg;
  edm_cfg.schedule = kEdm;
  edm_cfg.grid = default_grid(kEdm);
  auto run_edm = [&](int workers) {
    RunConfig local = edm_cfg;
    local.workers = workers;
    std::ostringstream out, err;
    run_guarded([&] { return cmd_compare(local, {"edm", "bdia-edm"}, {10, 20}, out, err); }, err);
    return out.str();
  };
  const std::string edm_first = run_edm(1);
  c.eq("edm_nonempty", !edm_first.empty(), 1);
  c.eq("edm_workers_8_identical", run_edm(8) == edm_first, 1);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"1 bdia exact inversion", criterion_1},
      {"2 edict exact inversion", criterion_2},
      {"3 cbdia inversion and equivalence", criterion_3},
      {"4 closed-form expansion", criterion_4},
      {"5 time symmetry", criterion_5},
      {"6 gamma=0 reductions", criterion_6},
      {"7 convergence orders", criterion_7},
      {"8 energy distance at N=10", criterion_8},
      {"9 nfe accounting", criterion_9},
      {"10 determinism", criterion_10},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Criterion c;
    try {
      run(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.note(std::string("exception: ") + e.what());
    }
    std::string detail;
    for (const auto& n : c.notes) detail += (detail.empty() ? "" : " ") + n;
    std::printf("%s criterion %s: %s\n", c.ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
