#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bdia/ddim.hpp"
#include "bdia/dpm.hpp"
#include "bdia/errors.hpp"
#include "oracles.hpp"

using namespace bdia;

namespace {

const NoiseSchedule kVp = NoiseSchedule::vp();
const NoiseSchedule kEdm = NoiseSchedule::edm();

TimeGrid vp_grid(int n) { return make_time_grid(GridKind::kUniform, n, 1e-3, 0.99); }

double lambda(const oracle::Sched& s, double t) { return std::log(s.alpha(t) / s.sigma(t)); }

// Multistep second-order data-prediction update written out directly:
//   z_prev = (sigma_prev / sigma_i) z_i - alpha_prev (exp(-h) - 1) D,
//   D = (1 + 1/(2r)) x_i - 1/(2r) x_{i+1},  r = h_last / h.
oracle::Vec dpm2m_oracle(const oracle::Sched& s, const oracle::Vec& z, const oracle::Vec& x_i,
                         const oracle::Vec* x_up, double t_up, double t, double t_prev) {
  const double h = lambda(s, t_prev) - lambda(s, t);
  oracle::Vec out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    double d = x_i[k];
    if (x_up != nullptr) {
      const double r = (lambda(s, t) - lambda(s, t_up)) / h;
      d = (1 + 1 / (2 * r)) * x_i[k] - (1 / (2 * r)) * (*x_up)[k];
    }
    out[k] = s.sigma(t_prev) / s.sigma(t) * z[k] - s.alpha(t_prev) * (std::exp(-h) - 1) * d;
  }
  return out;
}

}  // namespace

TEST(DataPrediction, InvertsForwardNoising) {
  const Vector x{1.0, -2.0}, e{0.3, 0.7};
  const double t = 0.4;
  Vector z(2);
  for (int k = 0; k < 2; ++k) z[k] = kVp.alpha(t) * x[k] + kVp.sigma(t) * e[k];
  const Vector back = data_prediction(kVp, z, e, t);
  EXPECT_NEAR(back[0], 1.0, 1e-15);
  EXPECT_NEAR(back[1], -2.0, 1e-15);
}

TEST(Dpm2m, FirstStepIsFirstOrderDataPrediction) {
  const MixturePredictor p(GaussianMixture::symmetric_pair(2, 2.0, 0.25), kVp);
  const TimeGrid g = vp_grid(10);
  const Vector z{0.5, 0.1};
  DpmHistory h;
  const State out = dpmpp_2m_step({z, 10}, h, p, kVp, g);
  // First-order data-prediction equals DDIM.
  const Vector ref = oracle::ddim(oracle::Sched{true}, z, p.epsilon(z, g.time(10)), g.time(10), g.time(9));
  EXPECT_LE(oracle::max_abs_diff(out.z, ref), 1e-14);
  EXPECT_TRUE(h.valid());
  EXPECT_EQ(h.prev_index, 10);
}

TEST(Dpm2m, MatchesSingleFormulaOracleOnLinearPredictors) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uc(-1.5, 1.5);
  const oracle::Sched os{true};
  for (int trial = 0; trial < 50; ++trial) {
    const LinearPredictor p(uc(rng));
    const TimeGrid g = make_time_grid(GridKind::kPowerLaw, 12, 0.01, 0.98, 2.0);
    State cur{oracle::normal_vec(3, 1.0, rng), 12};
    DpmHistory hist;
    oracle::Vec x_up;
    for (int i = 12; i >= 1; --i) {
      const oracle::Vec eps = p.epsilon(cur.z, g.time(i));
      oracle::Vec x_i(3);
      for (int k = 0; k < 3; ++k) x_i[k] = (cur.z[k] - os.sigma(g.time(i)) * eps[k]) / os.alpha(g.time(i));
      const oracle::Vec ref = dpm2m_oracle(os, cur.z, x_i, i == 12 ? nullptr : &x_up,
                                           i == 12 ? 0.0 : g.time(i + 1), g.time(i), g.time(i - 1));
      const State next = dpmpp_2m_step(cur, hist, p, kVp, g);
      EXPECT_LE(oracle::max_abs_diff(next.z, ref), 1e-12 * std::max(1.0, oracle::max_abs(ref)));
      x_up = x_i;
      cur = next;
    }
  }
}

TEST(Dpm2m, UniformLogSnrSpacingUsesTwoPointExtrapolation) {
  // Times with equally spaced log-SNR give r = 1, so D = 1.5 x_i - 0.5 x_{i+1}.
  std::vector<double> times;
  for (int k = 0; k < 4; ++k) {
    const double lam = -1.0 + 0.6 * k;
    times.push_back(1.0 / (1.0 + std::exp(2 * lam)));  // sigma^2 under VP
  }
  const TimeGrid g(times);
  const LinearPredictor p(0.7);
  const oracle::Sched os{true};
  const Vector z3{0.9, -0.4};
  DpmHistory hist;
  const State z2 = dpmpp_2m_step({z3, 3}, hist, p, kVp, g);
  const oracle::Vec x3 = data_prediction(kVp, z3, p.epsilon(z3, g.time(3)), g.time(3));
  const oracle::Vec x2 = data_prediction(kVp, z2.z, p.epsilon(z2.z, g.time(2)), g.time(2));
  const State z1 = dpmpp_2m_step(z2, hist, p, kVp, g);
  const double h = 0.6;
  for (int k = 0; k < 2; ++k) {
    const double d = 1.5 * x2[k] - 0.5 * x3[k];
    const double ref = os.sigma(g.time(1)) / os.sigma(g.time(2)) * z2.z[k] -
                       os.alpha(g.time(1)) * std::expm1(-h) * d;
    EXPECT_NEAR(z1.z[k], ref, 1e-12);
  }
}

TEST(Dpm2m, ConstantDataEstimateIsReached) {
  const Vector c{1.5, -0.5};
  const ConstantDataPredictor p(c, kVp);
  const TimeGrid g = make_time_grid(GridKind::kUniform, 20, 1e-8, 0.99);
  const auto tr = dpmpp_2m_sample({Vector{0.3, 2.0}, 20}, p, kVp, g);
  EXPECT_LE(oracle::max_abs_diff(tr.final_state(), c), 1e-3);
  const TimeGrid closed = make_time_grid(GridKind::kUniform, 20, 0.0, 0.99);
  const auto tr0 = dpmpp_2m_sample({Vector{0.3, 2.0}, 20}, p, kVp, closed);
  EXPECT_LE(oracle::max_abs_diff(tr0.final_state(), c), 1e-14);
}

TEST(Dpm2m, SampleNfeAndHistoryChecks) {
  const MixturePredictor p(GaussianMixture::symmetric_pair(2, 2.0, 0.25), kVp);
  const TimeGrid g = vp_grid(10);
  const auto tr = dpmpp_2m_sample({Vector{0.2, 0.2}, 10}, p, kVp, g);
  EXPECT_EQ(tr.epsilon_calls, 10u);
  EXPECT_EQ(tr.entries.size(), 11u);
  DpmHistory stale{Vector{0.0, 0.0}, 7};
  EXPECT_THROW(dpmpp_2m_step({Vector{0.2, 0.2}, 5}, stale, p, kVp, g), IndexError);
}

TEST(BdiaDpm, GammaZeroEqualsDpm) {
  const MixturePredictor p(GaussianMixture::symmetric_pair(4, 2.0, 0.25), kVp);
  const TimeGrid g = vp_grid(15);
  std::mt19937_64 rng(2);
  const State top{oracle::normal_vec(4, 1.0, rng), 15};
  const auto a = bdia_dpmpp_sample(top, p, 0.0, kVp, g);
  const auto b = dpmpp_2m_sample(top, p, kVp, g);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    EXPECT_LE(oracle::max_abs_diff(a.entries[k].z, b.entries[k].z), 1e-14);
  }
  EXPECT_EQ(a.epsilon_calls, 15u);
}

TEST(BdiaDpm, StepMatchesDefinition) {
  const MixturePredictor p(GaussianMixture::symmetric_pair(3, 2.0, 0.25), kVp);
  const TimeGrid g = vp_grid(10);
  const oracle::Sched os{true};
  std::mt19937_64 rng(3);
  for (double gamma : {0.0, 0.5, 1.0}) {
    const Vector z_up = oracle::normal_vec(3, 1.0, rng), z = oracle::normal_vec(3, 1.0, rng);
    const Vector x_hist = oracle::normal_vec(3, 1.0, rng);
    DpmHistory h1{x_hist, 7}, h2{x_hist, 7};
    CountingPredictor counted(p);
    const State out = bdia_dpmpp_step({z_up, 7}, {z, 6}, h1, counted, gamma, kVp, g);
    EXPECT_EQ(counted.calls(), 1u);
    const State gam = dpmpp_2m_step({z, 6}, h2, p, kVp, g);
    const Vector eps = p.epsilon(z, g.time(6));
    const Vector bwd = oracle::delta(os, z, eps, g.time(6), g.time(7));
    for (std::size_t k = 0; k < 3; ++k) {
      const double ref = z_up[k] + (1 - gamma) * (z[k] - z_up[k]) - gamma * bwd[k] + (gam.z[k] - z[k]);
      EXPECT_NEAR(out.z[k], ref, 1e-13);
    }
    EXPECT_EQ(h1.prev_index, 6);
  }
}

TEST(BdiaDpm, ZeroScoreStructure) {
  const ZeroPredictor zero;
  const TimeGrid g = make_time_grid(GridKind::kUniform, 6, 0.1, 2.0);
  const Vector z_up{1.0, 2.0}, z{0.5, -1.0};
  DpmHistory h{z_up, 4};
  DpmHistory h2 = h;
  const State out = bdia_dpmpp_step({z_up, 4}, {z, 3}, h, zero, 0.4, kEdm, g);
  const Vector gam = dpmpp_2m_update(kEdm, g, z, 3, z, h2);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(out.z[k], z_up[k] + 0.6 * (z[k] - z_up[k]) + (gam[k] - z[k]), 1e-14);
  }
}

TEST(BdiaDpm, IndexAndGammaChecks) {
  const ZeroPredictor zero;
  const TimeGrid g = vp_grid(6);
  DpmHistory h;
  EXPECT_THROW(bdia_dpmpp_step({Vector{1.0}, 7}, {Vector{1.0}, 6}, h, zero, 0.5, kVp, g), IndexError);
  EXPECT_THROW(bdia_dpmpp_sample({Vector{1.0}, 6}, zero, 1.5, kVp, g), ConfigError);
}
