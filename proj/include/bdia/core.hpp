#pragma once

#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bdia {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Noise schedules
// ---------------------------------------------------------------------------

enum class ScheduleKind { kVp, kEdm };

/// Signal scale alpha(t) and noise level sigma(t) of the forward process
/// z_t = alpha(t) x + sigma(t) eps, in continuous time.
///
/// VP:  alpha = sqrt(1 - t), sigma = sqrt(t) for t in [0, 1).
/// EDM: alpha = 1, sigma = t for t >= 0.
class NoiseSchedule {
 public:
  static NoiseSchedule vp() { return NoiseSchedule(ScheduleKind::kVp); }
  static NoiseSchedule edm() { return NoiseSchedule(ScheduleKind::kEdm); }

  ScheduleKind kind() const { return kind_; }
  std::string_view name() const;

  bool in_domain(double t) const;
  double alpha(double t) const;
  double sigma(double t) const;
  // sigma / alpha, the EDM noise level.
  double sigma_tilde(double t) const;
  // log(alpha / sigma); +inf where sigma = 0.
  double log_snr(double t) const;

  // Coefficients of the probability-flow ODE
  //   dz/dt = f(t) z + g2(t) / (2 sigma(t)) * eps_hat(z, t).
  double drift_coefficient(double t) const;   // f = d log(alpha) / dt
  double diffusion_squared(double t) const;   // g^2 = d sigma^2/dt - 2 f sigma^2

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;

 private:
  explicit NoiseSchedule(ScheduleKind kind) : kind_(kind) {}
  ScheduleKind kind_;
};

NoiseSchedule schedule_from_name(std::string_view name);

// ---------------------------------------------------------------------------
// Time grids
// ---------------------------------------------------------------------------

enum class GridKind { kUniform, kPowerLaw };

std::string_view grid_kind_name(GridKind kind);
GridKind grid_kind_from_name(std::string_view name);

struct GridSpec {
  GridKind kind = GridKind::kUniform;
  int n = 10;
  double t_min = 0.0;
  double t_max = 1.0;
  double rho = 7.0;
};

/// Strictly decreasing sampling times t_N > ... > t_0 >= 0.  Grid index i
/// addresses time t_i; storage order follows sampling order (t_N first).
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> descending_times);

  int steps() const { return static_cast<int>(times_.size()) - 1; }
  double time(int index) const;
  std::span<const double> times() const { return times_; }

 private:
  std::vector<double> times_;
};

TimeGrid make_time_grid(GridKind kind, int n, double t_min, double t_max,
                        double rho = 1.0);
TimeGrid make_time_grid(const GridSpec& spec);

// ---------------------------------------------------------------------------
// States and DDIM coefficients
// ---------------------------------------------------------------------------

struct State {
  Vector z;
  int index = 0;
};

// max(a, b) that returns NaN when either argument is NaN.
inline double max_or_nan(double a, double b) { return (a != a || b != b) ? a + b : (a < b ? b : a); }
inline double max_or_nan(std::initializer_list<double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = max_or_nan(m, x);
  return m;
}

bool all_finite(std::span<const double> v);
// Throws NumericError naming `where` when v holds NaN or Inf.
void require_finite(std::span<const double> v, std::string_view where);

/// DDIM transfer from t_i to t_{i-1}: z_{i-1} = a z_i + b eps.
struct DdimCoeffs {
  double a = 1.0;
  double b = 0.0;
};

// Coefficients moving a state from t_from to t_to along a DDIM update:
// a = alpha(t_to)/alpha(t_from), b = sigma(t_to) - sigma(t_from) * a.
DdimCoeffs transfer_coeffs(const NoiseSchedule& schedule, double t_from,
                           double t_to);

// (a_i, b_i) for the step t_i -> t_{i-1}; 1 <= i <= N.
DdimCoeffs ddim_coeffs(const NoiseSchedule& schedule, const TimeGrid& grid,
                       int i);

namespace testing {
// Mutation hook: when set, ddim_coeffs returns -b.  Used to check that the
// verification suite detects corrupted coefficients.
void set_flip_ddim_b(bool enabled);
bool flip_ddim_b();
}  // namespace testing

}  // namespace bdia
