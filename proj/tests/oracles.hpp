#pragma once

// Straight-line reference formulas used only by the tests.  Nothing here
// calls into the library's kernels or solver code.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double vp_alpha(double t) { return std::sqrt(1.0 - t); }
inline double vp_sigma(double t) { return std::sqrt(t); }

struct Sched {
  bool vp = true;
  double alpha(double t) const { return vp ? vp_alpha(t) : 1.0; }
  double sigma(double t) const { return vp ? vp_sigma(t) : t; }
};

// eps_hat for a zero-mean isotropic Gaussian with variance s2.
inline Vec gaussian_eps(const Sched& s, const Vec& z, double t, double s2) {
  const double a = s.alpha(t);
  const double sg = s.sigma(t);
  Vec out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = sg * z[k] / (a * a * s2 + sg * sg);
  return out;
}

// eps_hat for an isotropic mixture, written as -sigma * grad log q.
struct Comp {
  double w;
  Vec mu;
  double s2;
};

inline Vec mixture_eps(const Sched& s, const std::vector<Comp>& comps, const Vec& z,
                       double t) {
  const double a = s.alpha(t);
  const double sg = s.sigma(t);
  const std::size_t d = z.size();
  std::vector<double> logp(comps.size());
  double best = -INFINITY;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const double v = a * a * comps[c].s2 + sg * sg;
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = z[k] - a * comps[c].mu[k];
      sq += diff * diff;
    }
    logp[c] = std::log(comps[c].w) - 0.5 * static_cast<double>(d) * std::log(v) - 0.5 * sq / v;
    best = std::max(best, logp[c]);
  }
  double norm = 0.0;
  for (double& l : logp) {
    l = std::exp(l - best);
    norm += l;
  }
  Vec grad(d, 0.0);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const double v = a * a * comps[c].s2 + sg * sg;
    for (std::size_t k = 0; k < d; ++k) {
      grad[k] -= (logp[c] / norm) * (z[k] - a * comps[c].mu[k]) / v;
    }
  }
  for (double& g : grad) g *= -sg;
  return grad;
}

// DDIM update z_to = alpha_to (z - sigma_from eps) / alpha_from + sigma_to eps.
inline Vec ddim(const Sched& s, const Vec& z, const Vec& eps, double t_from, double t_to) {
  Vec out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double x0 = (z[k] - s.sigma(t_from) * eps[k]) / s.alpha(t_from);
    out[k] = s.alpha(t_to) * x0 + s.sigma(t_to) * eps[k];
  }
  return out;
}

inline Vec delta(const Sched& s, const Vec& z, const Vec& eps, double t_from, double t_to) {
  Vec out = ddim(s, z, eps, t_from, t_to);
  for (std::size_t k = 0; k < z.size(); ++k) out[k] -= z[k];
  return out;
}

// BDIA written as its defining combination:
// z_{i-1} = z_{i+1} - (1 - gamma)(z_{i+1} - z_i) - gamma Delta_bwd + Delta_fwd.
inline Vec bdia(const Sched& s, const Vec& z_up, const Vec& z, const Vec& eps, double t_up,
                double t, double t_down, double gamma) {
  const Vec fwd = delta(s, z, eps, t, t_down);
  const Vec bwd = delta(s, z, eps, t, t_up);
  Vec out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = z_up[k] - (1.0 - gamma) * (z_up[k] - z[k]) - gamma * bwd[k] + fwd[k];
  }
  return out;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a[k] - b[k]));
  return m;
}

inline double max_abs(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

// All-pairs V-statistic energy distance by direct double loops.
inline double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  auto mean_dist = [](const std::vector<Vec>& x, const std::vector<Vec>& y) {
    long double total = 0.0L;
    for (const auto& p : x) {
      for (const auto& q : y) {
        double sq = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) sq += (p[k] - q[k]) * (p[k] - q[k]);
        total += std::sqrt(sq);
      }
    }
    return static_cast<double>(total / (static_cast<long double>(x.size()) * y.size()));
  };
  return 2.0 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b);
}

inline std::vector<Vec> normal_points(std::size_t n, std::size_t d, double scale,
                                      unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<Vec> out(n, Vec(d));
  for (auto& v : out) {
    for (double& x : v) x = g(rng);
  }
  return out;
}

inline Vec normal_vec(std::size_t d, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(d);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace oracle
