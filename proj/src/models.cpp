#include "bdia/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"

namespace bdia {

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ == 0) throw ConfigError("mixture component mean is empty");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_) throw ShapeError("mixture means differ in dimension");
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw ConfigError("mixture weights must be non-negative");
    }
    if (!(c.variance > 0.0) || !std::isfinite(c.variance)) {
      throw ConfigError("mixture variances must be positive");
    }
    if (!all_finite(c.mean)) throw ConfigError("mixture mean is not finite");
    total += c.weight;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw ConfigError("mixture weights sum to " + std::to_string(total) +
                      ", expected 1");
  }
}

GaussianMixture GaussianMixture::single_gaussian(std::size_t dim, double variance) {
  return GaussianMixture({{1.0, Vector(dim, 0.0), variance}});
}

GaussianMixture GaussianMixture::symmetric_pair(std::size_t dim, double offset,
                                                double variance) {
  Vector plus(dim, 0.0);
  Vector minus(dim, 0.0);
  plus[0] = offset;
  minus[0] = -offset;
  return GaussianMixture({{0.5, plus, variance}, {0.5, minus, variance}});
}

GaussianMixture GaussianMixture::shifted(std::span<const double> delta) const {
  if (delta.size() != dim_) throw ShapeError("shift has wrong dimension");
  std::vector<MixtureComponent> moved = components_;
  for (auto& c : moved) {
    for (std::size_t k = 0; k < dim_; ++k) c.mean[k] += delta[k];
  }
  return GaussianMixture(std::move(moved));
}

double MixtureMarginal::log_density(std::span<const double> z) const {
  const double d = static_cast<double>(z.size());
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(components.size());
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    terms[k] = std::log(c.weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * c.variance) -
               0.5 * kernels::squared_distance(z, c.mean) / c.variance;
    best = std::max(best, terms[k]);
  }
  double acc = 0.0;
  for (double term : terms) acc += std::exp(term - best);
  return best + std::log(acc);
}

MixtureMarginal mixture_marginal(const GaussianMixture& model,
                                 const NoiseSchedule& schedule, double t) {
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  MixtureMarginal out;
  out.components.reserve(model.components().size());
  for (const auto& c : model.components()) {
    MixtureComponent m{c.weight, c.mean, a * a * c.variance + s * s};
    for (double& x : m.mean) x *= a;
    out.components.push_back(std::move(m));
  }
  return out;
}

void MixturePredictor::epsilon(std::span<const double> z, double t,
                               std::span<double> out) const {
  const double a = schedule_.alpha(t);
  const double s = schedule_.sigma(t);
  if (s == 0.0) {
    throw DomainError("eps_hat undefined where sigma(t) = 0; use the data-space value");
  }
  if (z.size() != model_.dim() || out.size() != z.size()) {
    throw ShapeError("predictor input has wrong dimension");
  }
  const auto& comps = model_.components();
  const std::size_t dim = z.size();
  const double d = static_cast<double>(dim);

  // Responsibilities in log space with max-subtraction.
  Vector means(comps.size() * dim);
  std::vector<double> variances(comps.size());
  std::vector<double> logr(comps.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    std::span<double> mk(means.data() + k * dim, dim);
    for (std::size_t q = 0; q < dim; ++q) mk[q] = a * comps[k].mean[q];
    variances[k] = a * a * comps[k].variance + s * s;
    logr[k] = std::log(comps[k].weight) - 0.5 * d * std::log(variances[k]) -
              0.5 * kernels::squared_distance(z, mk) / variances[k];
    best = std::max(best, logr[k]);
  }
  double norm = 0.0;
  for (double& lr : logr) {
    lr = std::exp(lr - best);
    norm += lr;
  }

  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double c = s * (logr[k] / norm) / variances[k];
    if (c == 0.0) continue;
    std::span<const double> mk(means.data() + k * dim, dim);
    kernels::lincomb(out, 1.0, out, c, z, -c, mk);
  }
}

void LinearPredictor::epsilon(std::span<const double> z, double,
                              std::span<double> out) const {
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = c_ * z[k];
}

void ZeroPredictor::epsilon(std::span<const double>, double,
                            std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
}

void ConstantDataPredictor::epsilon(std::span<const double> z, double t,
                                    std::span<double> out) const {
  const double s = schedule_.sigma(t);
  if (s == 0.0) throw DomainError("eps_hat undefined where sigma(t) = 0");
  if (z.size() != target_.size()) throw ShapeError("predictor input has wrong dimension");
  const double a = schedule_.alpha(t);
  kernels::lincomb(out, 1.0 / s, z, -a / s, target_);
}

Vector epsilon_hat_analytic(const GaussianMixture& model,
                            const NoiseSchedule& schedule,
                            std::span<const double> z, double t) {
  return MixturePredictor(model, schedule).epsilon(z, t);
}

Vector edm_gradient(const GaussianMixture& model, std::span<const double> z,
                    double t) {
  if (!(t > 0.0)) throw DomainError("EDM gradient needs t > 0");
  return epsilon_hat_analytic(model, NoiseSchedule::edm(), z, t);
}

void probability_flow_drift(const NoisePredictor& predictor,
                            const NoiseSchedule& schedule,
                            std::span<const double> z, double t,
                            std::span<double> out) {
  const double s = schedule.sigma(t);
  if (s == 0.0) throw DomainError("probability-flow drift undefined at sigma = 0");
  Vector eps = predictor.epsilon(z, t);
  const double f = schedule.drift_coefficient(t);
  const double g2 = schedule.diffusion_squared(t);
  kernels::lincomb(out, f, z, g2 / (2.0 * s), eps);
}

std::vector<Vector> exact_sample(const GaussianMixture& model,
                                 const NoiseSchedule& schedule, double t,
                                 std::uint64_t seed, std::size_t n) {
  if (n == 0) throw ConfigError("exact_sample needs n >= 1");
  const MixtureMarginal marginal = mixture_marginal(model, schedule, t);
  std::vector<double> weights;
  for (const auto& c : marginal.components) weights.push_back(c.weight);

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out(n, Vector(model.dim()));
  for (auto& z : out) {
    const auto& c = marginal.components[pick(rng)];
    const double sd = std::sqrt(c.variance);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = c.mean[k] + sd * normal(rng);
  }
  return out;
}

Vector analytic_ode_solution(double s2, std::span<const double> z_from,
                             double t_from, double t_to) {
  if (!(s2 > 0.0)) throw DomainError("variance must be positive");
  const double scale = std::sqrt((s2 + t_to * t_to) / (s2 + t_from * t_from));
  Vector out(z_from.begin(), z_from.end());
  for (double& x : out) x *= scale;
  return out;
}

}  // namespace bdia
