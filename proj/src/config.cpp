#include "bdia/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "bdia/errors.hpp"
#include "bdia/runner.hpp"

namespace bdia {

using nlohmann::json;

GridSpec default_grid(const NoiseSchedule& schedule, int n) {
  if (schedule.kind() == ScheduleKind::kEdm) {
    return {GridKind::kPowerLaw, n, 0.002, 80.0, 7.0};
  }
  return {GridKind::kUniform, n, 1e-3, 0.99, 7.0};
}

GaussianMixture default_mixture() {
  return GaussianMixture::symmetric_pair(2, 2.0, 0.25);
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
  return v.get<std::string>();
}

Vector get_vector(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("'" + key + "' must be an array of numbers");
  Vector out;
  for (const auto& x : v) out.push_back(get_number(x, key));
  return out;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  reject_unknown(doc,
                 {"schedule", "grid", "mixture", "solver", "gamma", "p", "gamma1",
                  "gamma2", "seed", "batch", "workers", "out", "format", "edit_shift",
                  "timing"},
                 "config");

  RunConfig cfg;
  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    reject_unknown(s, {"kind"}, "schedule");
    if (!s.contains("kind")) throw ConfigError("schedule needs 'kind'");
    cfg.schedule = schedule_from_name(get_string(s["kind"], "kind"));
    cfg.schedule_set = true;
  } else if (doc.contains("solver") && doc["solver"].is_string() &&
             solver_info(doc["solver"].get<std::string>()).needs_edm_schedule) {
    cfg.schedule = NoiseSchedule::edm();
  }
  cfg.grid = default_grid(cfg.schedule);
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    reject_unknown(g, {"kind", "n", "t_min", "t_max", "rho"}, "grid");
    if (g.contains("kind")) cfg.grid.kind = grid_kind_from_name(get_string(g["kind"], "kind"));
    if (g.contains("n")) {
      const auto n = get_integer(g["n"], "n");
      if (n < 2 || n > 1000000) throw ConfigError("grid 'n' must lie in [2, 1e6]");
      cfg.grid.n = static_cast<int>(n);
    }
    if (g.contains("t_min")) cfg.grid.t_min = get_number(g["t_min"], "t_min");
    if (g.contains("t_max")) cfg.grid.t_max = get_number(g["t_max"], "t_max");
    if (g.contains("rho")) cfg.grid.rho = get_number(g["rho"], "rho");
    cfg.grid_set = true;
  }
  if (doc.contains("mixture")) {
    const json& m = doc["mixture"];
    if (!m.is_array()) throw ConfigError("'mixture' must be an array");
    std::vector<MixtureComponent> comps;
    for (const auto& c : m) {
      reject_unknown(c, {"w", "mu", "s2"}, "mixture component");
      if (!c.contains("w") || !c.contains("mu") || !c.contains("s2")) {
        throw ConfigError("mixture component needs 'w', 'mu' and 's2'");
      }
      comps.push_back({get_number(c["w"], "w"), get_vector(c["mu"], "mu"),
                       get_number(c["s2"], "s2")});
    }
    try {
      cfg.mixture = GaussianMixture(std::move(comps));
    } catch (const ShapeError& e) {
      throw ConfigError(e.what());
    }
  }
  if (doc.contains("solver")) cfg.solver = get_string(doc["solver"], "solver");
  if (doc.contains("gamma")) cfg.gamma = get_number(doc["gamma"], "gamma");
  if (doc.contains("p")) cfg.p = get_number(doc["p"], "p");
  if (doc.contains("gamma1")) cfg.gamma1 = get_number(doc["gamma1"], "gamma1");
  if (doc.contains("gamma2")) cfg.gamma2 = get_number(doc["gamma2"], "gamma2");
  if (doc.contains("seed")) {
    const auto s = get_integer(doc["seed"], "seed");
    if (s < 0) throw ConfigError("'seed' must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (doc.contains("batch")) {
    const auto b = get_integer(doc["batch"], "batch");
    if (b < 1) throw ConfigError("'batch' must be >= 1");
    cfg.batch = static_cast<std::size_t>(b);
  }
  if (doc.contains("workers")) {
    const auto w = get_integer(doc["workers"], "workers");
    if (w < 1 || w > 1024) throw ConfigError("'workers' must lie in [1, 1024]");
    cfg.workers = static_cast<int>(w);
  }
  if (doc.contains("out")) cfg.out = get_string(doc["out"], "out");
  if (doc.contains("format")) cfg.format = get_string(doc["format"], "format");
  if (doc.contains("edit_shift")) cfg.edit_shift = get_vector(doc["edit_shift"], "edit_shift");
  if (doc.contains("timing")) {
    if (!doc["timing"].is_boolean()) throw ConfigError("'timing' must be a boolean");
    cfg.timing = doc["timing"].get<bool>();
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

void validate(const RunConfig& cfg) {
  const SolverInfo& info = solver_info(cfg.solver);
  TimeGrid grid = make_time_grid(cfg.grid);
  for (double t : grid.times()) {
    if (!cfg.schedule.in_domain(t)) {
      throw ConfigError("grid time " + std::to_string(t) + " outside the " +
                        std::string(cfg.schedule.name()) + " schedule domain");
    }
  }
  if (cfg.schedule.sigma(grid.time(grid.steps())) == 0.0) {
    throw ConfigError("t_max must have sigma > 0");
  }
  if (info.needs_edm_schedule && cfg.schedule.kind() != ScheduleKind::kEdm) {
    throw ConfigError("solver '" + cfg.solver + "' needs the edm schedule");
  }
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(cfg.p > 0.0 && cfg.p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
  if (!(cfg.gamma1 >= 0.0 && cfg.gamma1 <= 1.0) ||
      !(cfg.gamma2 >= 0.0 && cfg.gamma2 <= 1.0)) {
    throw ConfigError("gamma1 and gamma2 must lie in [0, 1]");
  }
  if (cfg.gamma1 == cfg.gamma2) throw ConfigError("gamma1 must differ from gamma2");
  if (cfg.batch < 1) throw ConfigError("batch must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.format != "csv" && cfg.format != "json") {
    throw ConfigError("format must be 'csv' or 'json'");
  }
  if (cfg.edit_shift) {
    if (cfg.edit_shift->size() != cfg.mixture.dim()) {
      throw ConfigError("edit_shift dimension does not match the mixture");
    }
    if (!all_finite(*cfg.edit_shift)) throw ConfigError("edit_shift must be finite");
  }
}

}  // namespace bdia
