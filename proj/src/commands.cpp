#include "bdia/commands.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "bdia/analysis.hpp"
#include "bdia/errors.hpp"
#include "bdia/random.hpp"
#include "bdia/runner.hpp"
#include "bdia/verify.hpp"

namespace bdia {

namespace {

constexpr double kRoundTripTolerance = 1e-8;

void write_file(const RunConfig& cfg, const std::string& name, const std::string& body) {
  if (cfg.out.empty()) return;
  const std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + (dir / name).string() + "'");
  f << body;
}

std::string render(const RunConfig& cfg, const std::vector<ComparisonReport>& reports) {
  std::ostringstream s;
  if (cfg.format == "json") {
    write_reports_json(s, reports);
  } else {
    write_reports_csv(s, reports);
  }
  return s.str();
}

void emit(const RunConfig& cfg, const std::string& stem,
          const std::vector<ComparisonReport>& reports, std::ostream& out) {
  const std::string body = render(cfg, reports);
  out << body;
  write_file(cfg, stem + (cfg.format == "json" ? ".json" : ".csv"), body);
}

}  // namespace

int cmd_sample(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  validate(cfg);
  const ComparisonReport report = evaluate_solver(cfg, cfg.solver, cfg.grid.n);
  if (!cfg.out.empty()) {
    const TimeGrid grid = make_time_grid(cfg.grid);
    const MixturePredictor predictor(cfg.mixture, cfg.schedule);
    std::ostringstream trace;
    write_solver_trace(trace, cfg, solver_info(cfg.solver), grid, predictor,
                       initial_noise(cfg, grid, 1).front());
    write_file(cfg, "trace.csv", trace.str());
  }
  emit(cfg, "report", {report}, out);
  return kExitOk;
}

int cmd_roundtrip(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const SolverInfo& info = solver_info(cfg.solver);
  const TimeGrid grid = make_time_grid(cfg.grid);
  const SampleSet data = data_samples(cfg, grid, cfg.batch);
  const RoundTripResult rt = round_trip(cfg, info, grid, data);

  ComparisonReport r;
  r.solver = cfg.solver;
  r.n_steps = cfg.grid.n;
  r.param = solver_param(info, cfg);
  r.terminal_error = std::numeric_limits<double>::quiet_NaN();
  r.roundtrip_error = rt.error.max_abs;
  r.nfe = rt.nfe;
  // Distance of the regenerated batch to the distribution it should follow
  // (the edited mixture when an edit is applied).
  const GaussianMixture target =
      cfg.edit_shift ? cfg.mixture.shifted(*cfg.edit_shift) : cfg.mixture;
  const SampleSet reference = exact_sample(target, cfg.schedule, grid.time(0),
                                           substream_seed(cfg.seed, "reference"),
                                           cfg.batch);
  EnergyDistanceOptions ed;
  ed.workers = cfg.workers;
  ed.seed = substream_seed(cfg.seed, "pairs");
  r.energy_distance = energy_distance(rt.regenerated, reference, ed);
  SlicedW1Options sw;
  sw.workers = cfg.workers;
  sw.seed = substream_seed(cfg.seed, "projections");
  r.sliced_w1 = sliced_w1(rt.regenerated, reference, sw);
  emit(cfg, "roundtrip", {r}, out);

  if (cfg.edit_shift) {
    err << "mean shift:";
    for (std::size_t k = 0; k < cfg.mixture.dim(); ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        acc += rt.regenerated[i][k] - rt.original[i][k];
      }
      err << ' ' << format_double(acc / static_cast<double>(data.size()));
    }
    err << '\n';
    return kExitOk;
  }
  const bool exact = info.kind != SolverKind::kDdimNaive;
  if (exact && !(rt.error.max_abs <= kRoundTripTolerance)) {
    err << "round trip error " << format_double(rt.error.max_abs) << " exceeds "
        << format_double(kRoundTripTolerance) << '\n';
    return kExitInvariant;
  }
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const VerifyReport report = run_verification(cfg);
  std::ostringstream s;
  print_verify_report(s, report);
  out << s.str();
  write_file(cfg, "verify.txt", s.str());
  return report.all_passed() ? kExitOk : kExitInvariant;
}

int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& solvers,
                const std::vector<int>& ns, std::ostream& out, std::ostream&) {
  validate(cfg);
  emit(cfg, "compare", compare(cfg, solvers, ns), out);
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<double>& values, std::ostream& out,
              std::ostream&) {
  validate(cfg);
  emit(cfg, "sweep", gamma_sweep(cfg, cfg.solver, values), out);
  return kExitOk;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace bdia
