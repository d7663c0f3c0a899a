#include "bdia/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>

#include "bdia/analysis.hpp"
#include "bdia/config.hpp"
#include "bdia/ddim.hpp"
#include "bdia/dpm.hpp"
#include "bdia/edict.hpp"
#include "bdia/edm.hpp"
#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"
#include "bdia/random.hpp"

namespace bdia {

bool VerifyReport::all_passed() const {
  return std::none_of(results.begin(), results.end(), [](const InvariantResult& r) {
    return r.status == CheckStatus::kFail;
  });
}

namespace {

constexpr int kDraws = 200;

InvariantResult within(std::string name, double value, double tol,
                       std::string detail = {}) {
  InvariantResult r{std::move(name), CheckStatus::kFail, value, tol, std::move(detail)};
  if (value <= tol) r.status = CheckStatus::kPass;
  return r;
}

InvariantResult skipped(std::string name, std::string why) {
  return {std::move(name), CheckStatus::kSkip, 0.0, 0.0, std::move(why)};
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = max_or_nan(m, std::fabs(x));
  return m;
}

// Absolute tolerance scaled to the magnitude of the compared states.
double scaled(double tol, std::span<const double> v) { return tol * std::max(1.0, max_abs(v)); }

struct Problem {
  RunConfig cfg;
  TimeGrid grid;
  MixturePredictor predictor;
  std::uint64_t seed;

  explicit Problem(const RunConfig& c)
      : cfg(c),
        grid(make_time_grid(c.grid)),
        predictor(c.mixture, c.schedule),
        seed(substream_seed(c.seed, "verify")) {}

  Vector draw(double t, std::uint64_t stream) const {
    return exact_sample(cfg.mixture, cfg.schedule, t, splitmix64(seed + stream), 1).front();
  }
};

InvariantResult check_coefficients(const Problem& p) {
  double worst = 0.0;
  const auto& s = p.cfg.schedule;
  for (int i = 1; i <= p.grid.steps(); ++i) {
    const double t_i = p.grid.time(i);
    const double t_prev = p.grid.time(i - 1);
    const double a = std::sqrt(1.0 - (s.kind() == ScheduleKind::kVp ? t_prev : 0.0)) /
                     std::sqrt(1.0 - (s.kind() == ScheduleKind::kVp ? t_i : 0.0));
    const double sig_prev = s.kind() == ScheduleKind::kVp ? std::sqrt(t_prev) : t_prev;
    const double sig_i = s.kind() == ScheduleKind::kVp ? std::sqrt(t_i) : t_i;
    const double b = sig_prev - sig_i * a;
    const DdimCoeffs c = ddim_coeffs(s, p.grid, i);
    worst = max_or_nan({worst, std::fabs(c.a - a) / max_or_nan(1.0, std::fabs(a)),
                      std::fabs(c.b - b) / max_or_nan(1.0, std::fabs(b))});
  }
  return within("ddim_coefficients", worst, 1e-14);
}

InvariantResult check_ddim_order() {
  // Zero-mean Gaussian, variance 1, EDM schedule: closed-form trajectory.
  const auto model = GaussianMixture::single_gaussian(1, 1.0);
  const auto schedule = NoiseSchedule::edm();
  const MixturePredictor pred(model, schedule);
  std::vector<std::pair<double, double>> pts;
  for (int n : {10, 20, 40, 80}) {
    const TimeGrid grid = make_time_grid(GridKind::kUniform, n, 0.01, 1.0);
    const Vector z_top{2.0};
    const auto tr = ddim_sample({z_top, n}, pred, schedule, grid);
    const Vector exact = analytic_ode_solution(1.0, z_top, 1.0, 0.01);
    pts.push_back({0.99 / n, std::fabs(tr.final_state()[0] - exact[0])});
  }
  double order = 0.0;
  try {
    order = convergence_order(pts);
  } catch (const DomainError& e) {
    return {"ddim_first_order", CheckStatus::kFail, 0.0, 0.3, e.what()};
  }
  InvariantResult r = within("ddim_first_order", std::fabs(order - 1.0), 0.3,
                             "order " + format_double(order));
  return r;
}

InvariantResult check_bdia_step_inverse(const Problem& p) {
  const double g = p.cfg.gamma;
  if (g == 0.0) return skipped("bdia_step_inverse", "gamma = 0 has no inverse");
  const BdiaConfig bc(g);
  std::mt19937_64 rng(splitmix64(p.seed ^ 0x11));
  std::uniform_int_distribution<int> pick(1, p.grid.steps() - 1);
  double worst = 0.0;
  for (int k = 0; k < kDraws; ++k) {
    const int i = pick(rng);
    const State up{p.draw(p.grid.time(i + 1), 2 * k), i + 1};
    const State mid{p.draw(p.grid.time(i), 2 * k + 1), i};
    const Vector eps = p.predictor.epsilon_at(mid.z, p.grid, i);
    const State down = bdia_step(up, mid, eps, bc, p.cfg.schedule, p.grid);
    const State back = bdia_invert_step(down, mid, eps, bc, p.cfg.schedule, p.grid);
    worst = max_or_nan(worst, kernels::max_abs_diff(back.z, up.z) / scaled(1.0, up.z));
  }
  return within("bdia_step_inverse", worst, 1e-13);
}

InvariantResult check_bdia_chain(const Problem& p) {
  const double g = p.cfg.gamma;
  if (g == 0.0) return skipped("bdia_chain_roundtrip", "gamma = 0 has no inverse");
  if (p.cfg.schedule.sigma(p.grid.time(0)) == 0.0) {
    return skipped("bdia_chain_roundtrip", "sigma(t_0) = 0");
  }
  const BdiaConfig bc(g);
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    const State x{p.draw(p.grid.time(0), 1000 + k), 0};
    const State z1 = ddim_invert_step_naive(x, p.predictor, p.cfg.schedule, p.grid, 1);
    const auto up = bdia_invert_chain(x, z1, p.predictor, bc, p.cfg.schedule, p.grid);
    const int n = p.grid.steps();
    const auto down = bdia_sample_from_pair({up.at_index(n).z, n},
                                            {up.at_index(n - 1).z, n - 1}, p.predictor,
                                            bc, p.cfg.schedule, p.grid);
    worst = max_or_nan(worst, kernels::max_abs_diff(down.final_state(), x.z));
  }
  return within("bdia_chain_roundtrip", worst, 1e-8);
}

double expansion_error(const Problem& p, double g, bool parity) {
  const BdiaConfig bc(g);
  const int n = p.grid.steps();
  const auto tr = bdia_sample({p.draw(p.grid.time(n), 2000), n}, p.predictor, bc,
                              p.cfg.schedule, p.grid);
  double worst = 0.0;
  for (int i = 0; i <= n - 2; ++i) {
    const Vector& z = tr.at_index(i).z;
    const Vector form = parity ? prop1_expansion_parity(tr, i) : prop1_expansion(tr, bc, i);
    worst = max_or_nan(worst, kernels::max_abs_diff(form, z) / scaled(1.0, z));
  }
  return worst;
}

InvariantResult check_prop1(const Problem& p) {
  return within("prop1_expansion", expansion_error(p, p.cfg.gamma, false), 1e-10,
                "gamma " + format_double(p.cfg.gamma));
}

InvariantResult check_prop1_parity(const Problem& p) {
  const BdiaConfig bc(1.0);
  const int n = p.grid.steps();
  const auto tr = bdia_sample({p.draw(p.grid.time(n), 3000), n}, p.predictor, bc,
                              p.cfg.schedule, p.grid);
  double worst = 0.0;
  for (int i = 0; i <= n - 2; ++i) {
    const Vector weighted = prop1_expansion(tr, bc, i);
    const Vector parity = prop1_expansion_parity(tr, i);
    worst = max_or_nan(worst, kernels::max_abs_diff(weighted, parity) / scaled(1.0, parity));
  }
  return within("prop1_parity_form", worst, 1e-12);
}

InvariantResult check_weight_sums(const Problem& p) {
  double worst = 0.0;
  for (double g : {p.cfg.gamma, 0.5, 0.92, 1.0}) {
    for (int lag = 1; lag <= p.grid.steps(); ++lag) {
      worst = max_or_nan(worst, std::fabs(expansion_forward_weight(g, lag) +
                                        expansion_backward_weight(g, lag) - 1.0));
    }
  }
  return within("expansion_weight_sums", worst, 1e-15);
}

InvariantResult check_time_symmetry(const Problem& p) {
  std::mt19937_64 rng(splitmix64(p.seed ^ 0x22));
  std::uniform_int_distribution<int> pick(1, p.grid.steps() - 1);
  double worst = 0.0;
  const auto& s = p.cfg.schedule;
  for (int k = 0; k < kDraws; ++k) {
    const int i = pick(rng);
    const Vector z_prev = p.draw(p.grid.time(i - 1), 4000 + 2 * k);
    const Vector z_mid = p.draw(p.grid.time(i), 4001 + 2 * k);
    const Vector eps = p.predictor.epsilon_at(z_mid, p.grid, i);
    const double t_up = p.grid.time(i + 1);
    const double t_mid = p.grid.time(i);
    const double t_down = p.grid.time(i - 1);
    const Vector swapped = bdia_update(s, z_prev, z_mid, eps, t_down, t_mid, t_up, 1.0);
    const Vector inverse = bdia_inverse_update(s, z_prev, z_mid, eps, t_up, t_mid, t_down, 1.0);
    worst = max_or_nan(worst, kernels::max_abs_diff(swapped, inverse) / scaled(1.0, inverse));
  }
  return within("time_symmetry", worst, 1e-13);
}

double trace_gap(const SolverTrace& a, const SolverTrace& b) {
  if (a.entries.size() != b.entries.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    worst = max_or_nan(worst, kernels::max_abs_diff(a.entries[k].z, b.entries[k].z));
  }
  return worst;
}

InvariantResult check_ddim_reduction(const Problem& p) {
  const int n = p.grid.steps();
  const State top{p.draw(p.grid.time(n), 5000), n};
  const auto bdia = bdia_sample(top, p.predictor, BdiaConfig(0.0), p.cfg.schedule, p.grid);
  const auto ddim = ddim_sample(top, p.predictor, p.cfg.schedule, p.grid);
  return within("reduction_bdia_ddim", trace_gap(bdia, ddim), 1e-14);
}

InvariantResult check_edm_reduction(const Problem& p) {
  const NoiseSchedule edm = NoiseSchedule::edm();
  const MixturePredictor pred(p.cfg.mixture, edm);
  const TimeGrid grid = make_time_grid(default_grid(edm, p.grid.steps()));
  const int n = grid.steps();
  State cur{exact_sample(p.cfg.mixture, edm, grid.time(n), p.seed, 1).front(), n};
  const auto bdia = bdia_edm_sample(cur, pred, 0.0, grid);
  double worst = 0.0;
  while (cur.index >= 1) {
    EdmStep step = edm_heun_step(cur, pred, grid);
    cur = std::move(step.next);
    worst = max_or_nan(worst, kernels::max_abs_diff(bdia.at_index(cur.index).z, cur.z));
  }
  return within("reduction_bdia_edm", worst, 1e-14);
}

InvariantResult check_dpm_reduction(const Problem& p) {
  const int n = p.grid.steps();
  const State top{p.draw(p.grid.time(n), 6000), n};
  const auto bdia = bdia_dpmpp_sample(top, p.predictor, 0.0, p.cfg.schedule, p.grid);
  const auto dpm = dpmpp_2m_sample(top, p.predictor, p.cfg.schedule, p.grid);
  return within("reduction_bdia_dpmpp", trace_gap(bdia, dpm), 1e-14);
}

InvariantResult check_edict_p1(const Problem& p) {
  const int n = p.grid.steps();
  const Vector z = p.draw(p.grid.time(n), 7000);
  CoupledTraceEntry rec;
  const CoupledState out = edict_step({z, z, n}, p.predictor, EdictConfig(1.0),
                                      p.cfg.schedule, p.grid, &rec);
  const double gap = max_or_nan(kernels::max_abs_diff(out.z, rec.first),
                              kernels::max_abs_diff(out.y, rec.second));
  return within("reduction_edict_p1", gap, 0.0);
}

template <class StepFn, class InvFn>
double coupled_step_error(const Problem& p, std::uint64_t stream, StepFn&& step,
                          InvFn&& inv) {
  std::mt19937_64 rng(splitmix64(p.seed ^ stream));
  std::uniform_int_distribution<int> pick(1, p.grid.steps());
  double worst = 0.0;
  for (int k = 0; k < kDraws; ++k) {
    const int i = pick(rng);
    const CoupledState s{p.draw(p.grid.time(i), stream + 2 * k),
                         p.draw(p.grid.time(i), stream + 2 * k + 1), i};
    const CoupledState back = inv(step(s));
    worst = max_or_nan({worst, kernels::max_abs_diff(back.z, s.z) / scaled(1.0, s.z),
                      kernels::max_abs_diff(back.y, s.y) / scaled(1.0, s.y)});
  }
  return worst;
}

InvariantResult check_edict_step(const Problem& p) {
  const EdictConfig ec(p.cfg.p);
  const auto& s = p.cfg.schedule;
  const double e = coupled_step_error(
      p, 8000,
      [&](const CoupledState& c) { return edict_step(c, p.predictor, ec, s, p.grid); },
      [&](const CoupledState& c) { return edict_invert_step(c, p.predictor, ec, s, p.grid); });
  return within("edict_step_inverse", e, 1e-13, "p " + format_double(p.cfg.p));
}

InvariantResult check_cbdia_step(const Problem& p) {
  const CbdiaConfig cc(p.cfg.gamma1, p.cfg.gamma2);
  const auto& s = p.cfg.schedule;
  if (s.sigma(p.grid.time(0)) == 0.0) return skipped("cbdia_step_inverse", "sigma(t_0) = 0");
  const double e = coupled_step_error(
      p, 9000,
      [&](const CoupledState& c) { return cbdia_step(c, p.predictor, cc, s, p.grid); },
      [&](const CoupledState& c) { return cbdia_invert_step(c, p.predictor, cc, s, p.grid); });
  return within("cbdia_step_inverse", e, 1e-13);
}

InvariantResult check_edict_chain(const Problem& p) {
  const EdictConfig ec(p.cfg.p);
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    const Vector x = p.draw(p.grid.time(0), 10000 + k);
    const auto up = edict_invert_chain({x, x, 0}, p.predictor, ec, p.cfg.schedule, p.grid);
    const auto down = edict_sample(up.final_state(), p.predictor, ec, p.cfg.schedule, p.grid);
    worst = max_or_nan({worst, kernels::max_abs_diff(down.last().z, x),
                      kernels::max_abs_diff(down.last().y, x)});
  }
  return within("edict_chain_roundtrip", worst, 1e-8);
}

InvariantResult check_cbdia_chain(const Problem& p) {
  const CbdiaConfig cc(p.cfg.gamma1, p.cfg.gamma2);
  if (p.cfg.schedule.sigma(p.grid.time(0)) == 0.0) {
    return skipped("cbdia_chain_roundtrip", "sigma(t_0) = 0");
  }
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    const Vector x = p.draw(p.grid.time(0), 11000 + k);
    const auto up = cbdia_invert_chain({x, x, 0}, p.predictor, cc, p.cfg.schedule, p.grid);
    const auto down = cbdia_sample(up.final_state(), p.predictor, cc, p.cfg.schedule, p.grid);
    worst = max_or_nan({worst, kernels::max_abs_diff(down.last().z, x),
                      kernels::max_abs_diff(down.last().y, x)});
  }
  return within("cbdia_chain_roundtrip", worst, 1e-8);
}

std::vector<InvariantResult> check_cbdia_closed_forms(const Problem& p) {
  const int n = p.grid.steps();
  const Vector z = p.draw(p.grid.time(n), 12000);
  const auto& s = p.cfg.schedule;
  const auto cb = cbdia_sample({z, z, n}, p.predictor, CbdiaConfig(0.0, 1.0), s, p.grid);
  const auto bd = bdia_sample({z, n}, p.predictor, BdiaConfig(1.0), s, p.grid);
  const CbdiaEquivalence eq = cbdia_bdia_equivalence(cb, bd);
  const auto cb2 = cbdia_sample({z, z, n}, p.predictor, CbdiaConfig(1.0, 0.0), s, p.grid);
  const CbdiaSplitForm l2 = cbdia_split_form_errors(cb2);
  const double scale = scaled(1.0, z);
  return {
      within("cbdia_bdia_equivalence", eq.max_discrepancy / scale, 1e-12),
      within("cbdia_equivalence_closed_form",
             max_or_nan(eq.closed_form_y_error, eq.closed_form_z_error) / scale, 1e-10),
      within("cbdia_opposite_directions", eq.direction_residual / scale, 1e-12),
      within("cbdia_split_closed_form", max_or_nan(l2.y_error, l2.z_error) / scale, 1e-10),
  };
}

InvariantResult check_nfe(const Problem& p) {
  const int n = p.grid.steps();
  const auto& s = p.cfg.schedule;
  const Vector z = p.draw(p.grid.time(n), 13000);
  CountingPredictor counter(p.predictor);
  std::string bad;
  auto expect = [&](const char* name, std::size_t recorded, std::size_t analytic) {
    if (counter.calls() != analytic || recorded != analytic) {
      bad += std::string(bad.empty() ? "" : ", ") + name;
    }
    counter.reset();
  };
  expect("ddim", ddim_sample({z, n}, counter, s, p.grid).epsilon_calls, n);
  expect("bdia-ddim", bdia_sample({z, n}, counter, BdiaConfig(p.cfg.gamma), s, p.grid).epsilon_calls, n);
  expect("edict", edict_sample({z, z, n}, counter, EdictConfig(p.cfg.p), s, p.grid).epsilon_calls, 2 * n);
  expect("cbdia", cbdia_sample({z, z, n}, counter, CbdiaConfig(p.cfg.gamma1, p.cfg.gamma2), s, p.grid).epsilon_calls, 2 * n);
  expect("dpmpp-2m", dpmpp_2m_sample({z, n}, counter, s, p.grid).epsilon_calls, n);
  expect("bdia-dpmpp-2m", bdia_dpmpp_sample({z, n}, counter, p.cfg.gamma, s, p.grid).epsilon_calls, n);

  const NoiseSchedule edm = NoiseSchedule::edm();
  const MixturePredictor epred(p.cfg.mixture, edm);
  CountingPredictor ecount(epred);
  for (double t_min : {0.0, 0.002}) {
    const TimeGrid grid = make_time_grid(GridKind::kPowerLaw, n, t_min, 80.0, 7.0);
    const std::size_t want = t_min == 0.0 ? 2 * n - 1 : 2 * n;
    const Vector ze = exact_sample(p.cfg.mixture, edm, 80.0, p.seed, 1).front();
    const auto heun = edm_heun_sample({ze, n}, ecount, grid);
    if (ecount.calls() != want || heun.epsilon_calls != want) bad += " edm";
    ecount.reset();
    const auto bdia = bdia_edm_sample({ze, n}, ecount, p.cfg.gamma, grid);
    if (ecount.calls() != want || bdia.epsilon_calls != want) bad += " bdia-edm";
    ecount.reset();
  }
  InvariantResult r = within("nfe_accounting", bad.empty() ? 0.0 : 1.0, 0.0);
  if (!bad.empty()) r.detail = "mismatch:" + bad;
  return r;
}

}  // namespace

VerifyReport run_verification(const RunConfig& cfg) {
  validate(cfg);
  const Problem p(cfg);
  VerifyReport report;
  auto run = [&](const std::string& name, const std::function<InvariantResult()>& fn) {
    try {
      report.results.push_back(fn());
    } catch (const std::exception& e) {
      report.results.push_back({name, CheckStatus::kFail, NAN, 0.0, e.what()});
    }
  };
  run("ddim_coefficients", [&] { return check_coefficients(p); });
  run("ddim_first_order", [&] { return check_ddim_order(); });
  run("bdia_step_inverse", [&] { return check_bdia_step_inverse(p); });
  run("bdia_chain_roundtrip", [&] { return check_bdia_chain(p); });
  run("prop1_expansion", [&] { return check_prop1(p); });
  run("prop1_parity_form", [&] { return check_prop1_parity(p); });
  run("expansion_weight_sums", [&] { return check_weight_sums(p); });
  run("time_symmetry", [&] { return check_time_symmetry(p); });
  run("reduction_bdia_ddim", [&] { return check_ddim_reduction(p); });
  run("reduction_bdia_edm", [&] { return check_edm_reduction(p); });
  run("reduction_bdia_dpmpp", [&] { return check_dpm_reduction(p); });
  run("reduction_edict_p1", [&] { return check_edict_p1(p); });
  run("edict_step_inverse", [&] { return check_edict_step(p); });
  run("edict_chain_roundtrip", [&] { return check_edict_chain(p); });
  run("cbdia_step_inverse", [&] { return check_cbdia_step(p); });
  run("cbdia_chain_roundtrip", [&] { return check_cbdia_chain(p); });
  try {
    for (auto& r : check_cbdia_closed_forms(p)) report.results.push_back(std::move(r));
  } catch (const std::exception& e) {
    report.results.push_back({"cbdia_closed_forms", CheckStatus::kFail, NAN, 0.0, e.what()});
  }
  run("nfe_accounting", [&] { return check_nfe(p); });
  return report;
}

void print_verify_report(std::ostream& out, const VerifyReport& report) {
  std::size_t failed = 0;
  for (const auto& r : report.results) {
    switch (r.status) {
      case CheckStatus::kPass:
        out << "PASS ";
        break;
      case CheckStatus::kFail:
        out << "FAIL ";
        ++failed;
        break;
      case CheckStatus::kSkip:
        out << "SKIP ";
        break;
    }
    out << r.name;
    if (r.status == CheckStatus::kSkip) {
      out << ": " << r.detail << '\n';
      continue;
    }
    out << " value=" << format_double(r.value) << " tol=" << format_double(r.tolerance);
    if (!r.detail.empty()) out << " (" << r.detail << ')';
    out << '\n';
  }
  out << (failed == 0 ? "all invariants passed" : std::to_string(failed) + " invariant(s) failed")
      << '\n';
}

}  // namespace bdia
