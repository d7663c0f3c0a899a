#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "bdia/core.hpp"
#include "bdia/models.hpp"

namespace bdia {

// VP: uniform on [1e-3, 0.99].  EDM: power_law, rho = 7, on [0.002, 80].
GridSpec default_grid(const NoiseSchedule& schedule, int n = 10);

GaussianMixture default_mixture();

/// Everything a CLI run needs.  JSON form (all keys optional, unknown keys
/// rejected):
///   {"schedule": {"kind": "vp"}, "grid": {"kind": "uniform", "n": 10,
///    "t_min": 0.001, "t_max": 0.99, "rho": 7}, "mixture": [{"w": 0.5,
///    "mu": [2, 0], "s2": 0.25}, ...], "solver": "bdia-ddim", "gamma": 1,
///    "p": 0.93, "gamma1": 0, "gamma2": 1, "seed": 0, "batch": 1000,
///    "workers": 1, "out": "dir", "format": "csv", "edit_shift": [1, 0]}
struct RunConfig {
  NoiseSchedule schedule = NoiseSchedule::vp();
  GridSpec grid = default_grid(NoiseSchedule::vp());
  GaussianMixture mixture = default_mixture();
  std::string solver = "bdia-ddim";
  double gamma = 1.0;
  double p = 0.93;
  double gamma1 = 0.0;
  double gamma2 = 1.0;
  std::uint64_t seed = 0;
  std::size_t batch = 1000;
  int workers = 1;
  std::string out;
  std::string format = "csv";
  std::optional<Vector> edit_shift;
  bool timing = false;

  // Whether the schedule / grid were given explicitly (config or flag).
  bool schedule_set = false;
  bool grid_set = false;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);

// Checks every module precondition that can be checked before compute.
void validate(const RunConfig& cfg);

}  // namespace bdia
