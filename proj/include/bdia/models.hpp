#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bdia/core.hpp"

namespace bdia {

// ---------------------------------------------------------------------------
// Data distributions
// ---------------------------------------------------------------------------

struct MixtureComponent {
  double weight = 1.0;
  Vector mean;
  double variance = 1.0;  // isotropic
};

/// Isotropic Gaussian mixture standing in for the data distribution.
class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<MixtureComponent> components);

  static GaussianMixture single_gaussian(std::size_t dim, double variance);
  // Equal-weight pair at +/- offset along the first axis.
  static GaussianMixture symmetric_pair(std::size_t dim, double offset,
                                        double variance);

  std::size_t dim() const { return dim_; }
  const std::vector<MixtureComponent>& components() const { return components_; }

  // Every component mean moved by `delta` (the editing analog).
  GaussianMixture shifted(std::span<const double> delta) const;

 private:
  std::vector<MixtureComponent> components_;
  std::size_t dim_ = 0;
};

/// Distribution of z_t = alpha_t x + sigma_t eps for mixture data.
struct MixtureMarginal {
  std::vector<MixtureComponent> components;

  double log_density(std::span<const double> z) const;
};

MixtureMarginal mixture_marginal(const GaussianMixture& model,
                                 const NoiseSchedule& schedule, double t);

// ---------------------------------------------------------------------------
// Noise predictors
// ---------------------------------------------------------------------------

/// eps_hat(z, t).  Implementations are pure: identical inputs give
/// bit-identical outputs, and one instance may be shared across threads.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;

  virtual void epsilon(std::span<const double> z, double t,
                       std::span<double> out) const = 0;

  Vector epsilon(std::span<const double> z, double t) const {
    Vector out(z.size());
    epsilon(z, t, out);
    return out;
  }

  Vector epsilon_at(std::span<const double> z, const TimeGrid& grid,
                    int index) const {
    return epsilon(z, grid.time(index));
  }

  // EDM gradient d(z, t).  Under alpha = 1, sigma = t the probability-flow
  // drift reduces to eps_hat.
  Vector gradient(std::span<const double> z, double t) const {
    return epsilon(z, t);
  }
};

/// Exact eps_hat = -sigma(t) * grad log q_t for a Gaussian mixture.
class MixturePredictor final : public NoisePredictor {
 public:
  MixturePredictor(GaussianMixture model, NoiseSchedule schedule)
      : model_(std::move(model)), schedule_(schedule) {}

  using NoisePredictor::epsilon;
  void epsilon(std::span<const double> z, double t,
               std::span<double> out) const override;

  const GaussianMixture& model() const { return model_; }
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  GaussianMixture model_;
  NoiseSchedule schedule_;
};

/// eps_hat(z, t) = c z.
class LinearPredictor final : public NoisePredictor {
 public:
  explicit LinearPredictor(double c) : c_(c) {}
  using NoisePredictor::epsilon;
  void epsilon(std::span<const double> z, double t,
               std::span<double> out) const override;

 private:
  double c_;
};

class ZeroPredictor final : public NoisePredictor {
 public:
  using NoisePredictor::epsilon;
  void epsilon(std::span<const double> z, double t,
               std::span<double> out) const override;
};

/// Predictor whose clean-data estimate is the constant `target`:
/// eps_hat = (z - alpha target) / sigma.
class ConstantDataPredictor final : public NoisePredictor {
 public:
  ConstantDataPredictor(Vector target, NoiseSchedule schedule)
      : target_(std::move(target)), schedule_(schedule) {}
  using NoisePredictor::epsilon;
  void epsilon(std::span<const double> z, double t,
               std::span<double> out) const override;

 private:
  Vector target_;
  NoiseSchedule schedule_;
};

/// Forwards to another predictor and counts evaluations.
class CountingPredictor final : public NoisePredictor {
 public:
  explicit CountingPredictor(const NoisePredictor& inner) : inner_(inner) {}
  using NoisePredictor::epsilon;
  void epsilon(std::span<const double> z, double t,
               std::span<double> out) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    inner_.epsilon(z, t, out);
  }
  std::size_t calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  const NoisePredictor& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

Vector epsilon_hat_analytic(const GaussianMixture& model,
                            const NoiseSchedule& schedule,
                            std::span<const double> z, double t);

// d(z, t) under the EDM schedule; t > 0.
Vector edm_gradient(const GaussianMixture& model, std::span<const double> z,
                    double t);

// Right-hand side of the probability-flow ODE for a general schedule.
void probability_flow_drift(const NoisePredictor& predictor,
                            const NoiseSchedule& schedule,
                            std::span<const double> z, double t,
                            std::span<double> out);

// n i.i.d. draws from the marginal at time t.  Deterministic in seed.
std::vector<Vector> exact_sample(const GaussianMixture& model,
                                 const NoiseSchedule& schedule, double t,
                                 std::uint64_t seed, std::size_t n);

// Closed-form probability-flow trajectory of a zero-mean Gaussian with
// variance s2 under the EDM schedule.
Vector analytic_ode_solution(double s2, std::span<const double> z_from,
                             double t_from, double t_to);

}  // namespace bdia
