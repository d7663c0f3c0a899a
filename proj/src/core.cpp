#include "bdia/core.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "bdia/errors.hpp"

namespace bdia {

std::string_view NoiseSchedule::name() const {
  return kind_ == ScheduleKind::kVp ? "vp" : "edm";
}

bool NoiseSchedule::in_domain(double t) const {
  if (!std::isfinite(t) || t < 0.0) return false;
  return kind_ == ScheduleKind::kEdm || t < 1.0;
}

double NoiseSchedule::alpha(double t) const {
  if (!in_domain(t)) {
    throw DomainError("time " + std::to_string(t) + " outside " +
                      std::string(name()) + " schedule domain");
  }
  return kind_ == ScheduleKind::kVp ? std::sqrt(1.0 - t) : 1.0;
}

double NoiseSchedule::sigma(double t) const {
  if (!in_domain(t)) {
    throw DomainError("time " + std::to_string(t) + " outside " +
                      std::string(name()) + " schedule domain");
  }
  return kind_ == ScheduleKind::kVp ? std::sqrt(t) : t;
}

double NoiseSchedule::sigma_tilde(double t) const { return sigma(t) / alpha(t); }

double NoiseSchedule::log_snr(double t) const {
  const double s = sigma(t);
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return std::log(alpha(t) / s);
}

double NoiseSchedule::drift_coefficient(double t) const {
  if (!in_domain(t)) throw DomainError("time outside schedule domain");
  return kind_ == ScheduleKind::kVp ? -0.5 / (1.0 - t) : 0.0;
}

double NoiseSchedule::diffusion_squared(double t) const {
  if (!in_domain(t)) throw DomainError("time outside schedule domain");
  return kind_ == ScheduleKind::kVp ? 1.0 / (1.0 - t) : 2.0 * t;
}

NoiseSchedule schedule_from_name(std::string_view name) {
  if (name == "vp") return NoiseSchedule::vp();
  if (name == "edm") return NoiseSchedule::edm();
  throw ConfigError("unknown schedule kind '" + std::string(name) + "'");
}

std::string_view grid_kind_name(GridKind kind) {
  return kind == GridKind::kUniform ? "uniform" : "power_law";
}

GridKind grid_kind_from_name(std::string_view name) {
  if (name == "uniform") return GridKind::kUniform;
  if (name == "power_law") return GridKind::kPowerLaw;
  throw ConfigError("unknown grid kind '" + std::string(name) + "'");
}

TimeGrid::TimeGrid(std::vector<double> descending_times)
    : times_(std::move(descending_times)) {
  if (times_.size() < 2) throw InvalidGridError("grid needs at least two times");
  for (double t : times_) {
    if (!std::isfinite(t)) throw InvalidGridError("grid time is not finite");
  }
  if (times_.back() < 0.0) throw InvalidGridError("grid time t_0 is negative");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k - 1] > times_[k])) {
      throw InvalidGridError("grid times must be strictly decreasing");
    }
  }
}

double TimeGrid::time(int index) const {
  if (index < 0 || index > steps()) {
    throw IndexError("grid index " + std::to_string(index) + " outside [0, " +
                     std::to_string(steps()) + "]");
  }
  return times_[static_cast<std::size_t>(steps() - index)];
}

TimeGrid make_time_grid(GridKind kind, int n, double t_min, double t_max,
                        double rho) {
  if (n < 2) throw InvalidGridError("grid needs N >= 2 steps");
  if (!(t_min >= 0.0) || !(t_max > t_min) || !std::isfinite(t_max)) {
    throw InvalidGridError("grid needs t_max > t_min >= 0");
  }
  std::vector<double> times(static_cast<std::size_t>(n) + 1);
  if (kind == GridKind::kUniform) {
    for (int j = 0; j <= n; ++j) {
      times[static_cast<std::size_t>(n - j)] =
          t_min + (t_max - t_min) * (static_cast<double>(j) / n);
    }
  } else {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw InvalidGridError("power_law grid needs rho > 0");
    }
    const double lo = std::pow(t_min, 1.0 / rho);
    const double hi = std::pow(t_max, 1.0 / rho);
    for (int j = 0; j <= n; ++j) {
      const double frac = 1.0 - static_cast<double>(j) / n;
      times[static_cast<std::size_t>(n - j)] = std::pow(hi + frac * (lo - hi), rho);
    }
  }
  times.front() = t_max;
  times.back() = t_min;
  return TimeGrid(std::move(times));
}

TimeGrid make_time_grid(const GridSpec& spec) {
  return make_time_grid(spec.kind, spec.n, spec.t_min, spec.t_max, spec.rho);
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_finite(std::span<const double> v, std::string_view where) {
  if (!all_finite(v)) {
    throw NumericError("non-finite state produced in " + std::string(where));
  }
}

DdimCoeffs transfer_coeffs(const NoiseSchedule& schedule, double t_from,
                           double t_to) {
  const double a = schedule.alpha(t_to) / schedule.alpha(t_from);
  return {a, schedule.sigma(t_to) - schedule.sigma(t_from) * a};
}

namespace {
std::atomic<bool> g_flip_b{false};
}

DdimCoeffs ddim_coeffs(const NoiseSchedule& schedule, const TimeGrid& grid,
                       int i) {
  if (i < 1 || i > grid.steps()) {
    throw IndexError("DDIM step index " + std::to_string(i) + " outside [1, " +
                     std::to_string(grid.steps()) + "]");
  }
  DdimCoeffs c = transfer_coeffs(schedule, grid.time(i), grid.time(i - 1));
  if (g_flip_b.load(std::memory_order_relaxed)) c.b = -c.b;
  return c;
}

namespace testing {
void set_flip_ddim_b(bool enabled) { g_flip_b.store(enabled); }
bool flip_ddim_b() { return g_flip_b.load(); }
}  // namespace testing

}  // namespace bdia
