#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bdia/commands.hpp"
#include "bdia/config.hpp"
#include "bdia/core.hpp"
#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"
#include "bdia/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::string solver;
  std::string schedule;
  int n = 0;
  double gamma = 0.0;
  double p = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::size_t batch = 0;
  int workers = 0;
  std::string out;
  std::string format;
  std::vector<double> edit_shift;
  std::string isa;
  bool timing = false;
  bool inject_fault = false;

  std::vector<std::string> solvers;
  std::vector<int> ns;
  std::vector<double> gammas;
};

struct Options {
  CLI::Option* solver = nullptr;
  CLI::Option* schedule = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* gamma = nullptr;
  CLI::Option* p = nullptr;
  CLI::Option* gamma1 = nullptr;
  CLI::Option* gamma2 = nullptr;
  CLI::Option* rho = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* batch = nullptr;
  CLI::Option* workers = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* edit_shift = nullptr;
};

Options add_common(CLI::App* app, Flags& f) {
  Options o;
  app->add_option("--config", f.config, "JSON run configuration");
  o.solver = app->add_option("--solver", f.solver, "solver name");
  o.schedule = app->add_option("--schedule", f.schedule, "noise schedule: vp or edm");
  o.n = app->add_option("--n", f.n, "number of steps N");
  o.gamma = app->add_option("--gamma", f.gamma, "BDIA gamma");
  o.p = app->add_option("--p", f.p, "EDICT mixing weight");
  o.gamma1 = app->add_option("--gamma1", f.gamma1, "CBDIA gamma1");
  o.gamma2 = app->add_option("--gamma2", f.gamma2, "CBDIA gamma2");
  o.rho = app->add_option("--rho", f.rho, "power_law grid exponent");
  o.seed = app->add_option("--seed", f.seed, "random seed");
  o.batch = app->add_option("--batch", f.batch, "trajectories per run");
  o.workers = app->add_option("--workers", f.workers, "worker threads");
  o.out = app->add_option("--out", f.out, "output directory");
  o.format = app->add_option("--format", f.format, "report format: csv or json");
  o.edit_shift = app->add_option("--edit-shift", f.edit_shift,
                                 "mean shift applied before regeneration")
                     ->delimiter(',');
  app->add_option("--isa", f.isa, "kernel variant: scalar, avx2 or neon");
  app->add_flag("--timing", f.timing, "record wall time in reports");
  app->add_flag("--inject-fault", f.inject_fault,
                "corrupt DDIM coefficients (checks that verify detects it)");
  return o;
}

bool edm_family(const std::string& name) {
  return bdia::solver_info(name).needs_edm_schedule;
}

bdia::RunConfig build_config(const Flags& f, const Options& o,
                             const std::vector<std::string>& solvers_in_use) {
  bdia::RunConfig cfg = f.config.empty() ? bdia::RunConfig{} : bdia::load_run_config(f.config);
  if (o.solver->count()) cfg.solver = f.solver;
  if (o.schedule->count()) {
    cfg.schedule = bdia::schedule_from_name(f.schedule);
    cfg.schedule_set = true;
  }
  if (!cfg.schedule_set) {
    const std::vector<std::string> in_use =
        solvers_in_use.empty() ? std::vector<std::string>{cfg.solver} : solvers_in_use;
    bool all_edm = true;
    for (const auto& s : in_use) all_edm = all_edm && edm_family(s);
    if (all_edm) cfg.schedule = bdia::NoiseSchedule::edm();
  }
  if (!cfg.grid_set) cfg.grid = bdia::default_grid(cfg.schedule, cfg.grid.n);
  if (o.n->count()) cfg.grid.n = f.n;
  if (o.rho->count()) cfg.grid.rho = f.rho;
  if (o.gamma->count()) cfg.gamma = f.gamma;
  if (o.p->count()) cfg.p = f.p;
  if (o.gamma1->count()) cfg.gamma1 = f.gamma1;
  if (o.gamma2->count()) cfg.gamma2 = f.gamma2;
  if (o.seed->count()) cfg.seed = f.seed;
  if (o.batch->count()) cfg.batch = f.batch;
  if (o.workers->count()) cfg.workers = f.workers;
  if (o.out->count()) cfg.out = f.out;
  if (o.format->count()) cfg.format = f.format;
  if (o.edit_shift->count()) cfg.edit_shift = f.edit_shift;
  if (f.timing) cfg.timing = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BDIA diffusion ODE solvers on analytic Gaussian mixtures"};
  app.require_subcommand(1);
  Flags f;

  auto* sample = app.add_subcommand("sample", "sample a batch and report metrics");
  auto* roundtrip = app.add_subcommand("roundtrip", "invert data to noise and regenerate");
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  auto* cmp = app.add_subcommand("compare", "report matrix over solvers and step counts");
  auto* sweep = app.add_subcommand("sweep", "sweep gamma (or p) for one solver");

  const Options o_sample = add_common(sample, f);
  const Options o_round = add_common(roundtrip, f);
  const Options o_verify = add_common(verify, f);
  const Options o_cmp = add_common(cmp, f);
  const Options o_sweep = add_common(sweep, f);
  cmp->add_option("--solvers", f.solvers, "comma-separated solver names")
      ->delimiter(',');
  cmp->add_option("--ns", f.ns, "comma-separated step counts")->delimiter(',');
  sweep->add_option("--gammas,--values", f.gammas, "comma-separated parameter values")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bdia::kExitConfig;
  }

  return bdia::run_guarded(
      [&]() -> int {
        if (!f.isa.empty()) {
          const auto isa = bdia::kernels::parse_isa(f.isa);
          if (!isa) throw bdia::ConfigError("unknown kernel variant '" + f.isa + "'");
          bdia::kernels::set_active(*isa);
        }
        if (f.inject_fault) bdia::testing::set_flip_ddim_b(true);

        if (sample->parsed()) {
          const auto cfg = build_config(f, o_sample, {});
          return bdia::cmd_sample(cfg, std::cout, std::cerr);
        }
        if (roundtrip->parsed()) {
          const auto cfg = build_config(f, o_round, {});
          return bdia::cmd_roundtrip(cfg, std::cout, std::cerr);
        }
        if (verify->parsed()) {
          const auto cfg = build_config(f, o_verify, {});
          return bdia::cmd_verify(cfg, std::cout, std::cerr);
        }
        if (cmp->parsed()) {
          if (f.solvers.empty()) throw bdia::ConfigError("--solvers must name at least one solver");
          auto cfg = build_config(f, o_cmp, f.solvers);
          std::vector<int> ns = f.ns.empty() ? std::vector<int>{cfg.grid.n} : f.ns;
          return bdia::cmd_compare(cfg, f.solvers, ns, std::cout, std::cerr);
        }
        const auto cfg = build_config(f, o_sweep, {});
        return bdia::cmd_sweep(cfg, f.gammas, std::cout, std::cerr);
      },
      std::cerr);
}
