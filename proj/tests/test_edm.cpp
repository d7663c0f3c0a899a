#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bdia/analysis.hpp"
#include "bdia/edm.hpp"
#include "bdia/errors.hpp"
#include "oracles.hpp"

using namespace bdia;

namespace {

const NoiseSchedule kEdm = NoiseSchedule::edm();

MixturePredictor single(double s2, std::size_t d = 1) {
  return MixturePredictor(GaussianMixture::single_gaussian(d, s2), kEdm);
}

double terminal_error_edm(int n, double gamma) {
  const auto p = single(1.0);
  const TimeGrid g = make_time_grid(GridKind::kUniform, n, 0.01, 1.0);
  const auto tr = bdia_edm_sample({Vector{2.0}, n}, p, gamma, g);
  return std::fabs(tr.final_state()[0] - analytic_ode_solution(1.0, Vector{2.0}, 1.0, 0.01)[0]);
}

}  // namespace

TEST(EdmHeun, WorkedStep) {
  const auto p = single(1.0);
  const TimeGrid g({1.0, 0.5});
  const EdmStep s = edm_heun_step({Vector{2.0}, 1}, p, g);
  EXPECT_DOUBLE_EQ(s.entry.d[0], 1.0);
  EXPECT_DOUBLE_EQ(s.entry.z_tilde[0], 1.5);
  ASSERT_TRUE(s.entry.d_prime.has_value());
  EXPECT_DOUBLE_EQ((*s.entry.d_prime)[0], 0.6);
  EXPECT_DOUBLE_EQ(s.next.z[0], 1.6);
  EXPECT_EQ(s.next.index, 0);
  const double exact = analytic_ode_solution(1.0, Vector{2.0}, 1.0, 0.5)[0];
  EXPECT_NEAR(exact, 1.58114, 1e-5);
  EXPECT_NEAR(s.next.z[0] - exact, 0.019, 1e-3);
}

TEST(EdmHeun, ZeroFieldLeavesStateUnchanged) {
  const ZeroPredictor zero;
  const TimeGrid g = make_time_grid(GridKind::kUniform, 5, 0.1, 2.0);
  const auto tr = edm_heun_sample({Vector{1.0, -2.0}, 5}, zero, g);
  EXPECT_EQ(tr.final_state(), (Vector{1.0, -2.0}));
}

TEST(EdmHeun, TerminalStepIsEuler) {
  const auto p = single(1.0);
  const TimeGrid g({1.0, 0.5, 0.0});
  const EdmStep s = edm_heun_step({Vector{1.6}, 1}, p, g);
  EXPECT_FALSE(s.entry.d_prime.has_value());
  EXPECT_EQ(s.next.z, s.entry.z_tilde);
  EXPECT_DOUBLE_EQ(s.next.z[0], 1.6 - 0.5 * (0.5 * 1.6 / 1.25));
}

TEST(EdmHeun, NfeCounts) {
  const auto p = single(1.0);
  for (int n : {5, 10, 35}) {
    const TimeGrid open = make_time_grid(GridKind::kPowerLaw, n, 0.002, 80.0, 7.0);
    const TimeGrid closed = make_time_grid(GridKind::kUniform, n, 0.0, 1.0);
    EXPECT_EQ(edm_heun_sample({Vector{1.0}, n}, p, open).epsilon_calls, std::size_t(2 * n));
    EXPECT_EQ(edm_heun_sample({Vector{1.0}, n}, p, closed).epsilon_calls, std::size_t(2 * n - 1));
    for (double gamma : {0.0, 0.5, 1.0}) {
      EXPECT_EQ(bdia_edm_sample({Vector{1.0}, n}, p, gamma, open).epsilon_calls, std::size_t(2 * n));
      EXPECT_EQ(bdia_edm_sample({Vector{1.0}, n}, p, gamma, closed).epsilon_calls,
                std::size_t(2 * n - 1));
    }
  }
}

TEST(EdmHeun, CountingPredictorAgreesWithTrace) {
  const auto inner = single(0.5, 2);
  CountingPredictor p(inner);
  const TimeGrid g = make_time_grid(GridKind::kUniform, 12, 0.0, 1.0);
  const auto tr = bdia_edm_sample({Vector{1.0, 0.5}, 12}, p, 1.0, g);
  EXPECT_EQ(p.calls(), tr.epsilon_calls);
  EXPECT_EQ(p.calls(), 23u);
}

TEST(BdiaEdm, GammaZeroIsHeun) {
  const MixturePredictor p(GaussianMixture::symmetric_pair(3, 2.0, 0.25), kEdm);
  const TimeGrid g = make_time_grid(GridKind::kPowerLaw, 18, 0.002, 80.0, 7.0);
  std::mt19937_64 rng(1);
  const State top{oracle::normal_vec(3, 80.0, rng), 18};
  const auto a = bdia_edm_sample(top, p, 0.0, g);
  const auto b = edm_heun_sample(top, p, g);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    EXPECT_LE(oracle::max_abs_diff(a.entries[k].z, b.entries[k].z), 1e-14);
  }
}

TEST(BdiaEdm, ZeroFieldSkipsTwoBack) {
  const ZeroPredictor zero;
  const TimeGrid g = make_time_grid(GridKind::kUniform, 6, 0.1, 2.0);
  const auto tr = bdia_edm_sample({Vector{1.0}, 6}, zero, 1.0, g);
  for (int i = 5; i >= 1; --i) {
    EXPECT_EQ(tr.at_index(i).z_hat, tr.at_index(i + 1).z);
  }
}

TEST(BdiaEdm, RefinedEstimateMatchesDefinition) {
  const MixturePredictor p(GaussianMixture::symmetric_pair(2, 2.0, 0.25), kEdm);
  const TimeGrid g = make_time_grid(GridKind::kPowerLaw, 10, 0.01, 5.0, 7.0);
  const double gamma = 0.7;
  const auto tr = bdia_edm_sample({Vector{3.0, -1.0}, 10}, p, gamma, g);
  for (int i = 9; i >= 1; --i) {
    const auto& e = tr.at_index(i);
    const auto& up = tr.at_index(i + 1);
    const double dt = g.time(i) - g.time(i + 1);
    for (std::size_t k = 0; k < 2; ++k) {
      const double ref = up.z[k] + (1 - gamma) * (e.z[k] - up.z[k]) +
                         gamma * dt * (up.d[k] + e.d[k]) / 2;
      EXPECT_NEAR(e.z_hat[k], ref, 1e-13);
      // Gradient is evaluated at the un-refined state.
      EXPECT_EQ(e.d, p.gradient(e.z, g.time(i)));
      const double h = g.time(i - 1) - g.time(i);
      const double next = e.z_hat[k] + h * (e.d[k] + (*e.d_prime)[k]) / 2;
      EXPECT_NEAR(tr.at_index(i - 1).z[k], next, 1e-13);
    }
  }
}

TEST(BdiaEdm, TerminalStepIsEulerFromRefinedEstimate) {
  const auto p = single(1.0);
  const TimeGrid g = make_time_grid(GridKind::kUniform, 8, 0.0, 1.0);
  const auto tr = bdia_edm_sample({Vector{2.0}, 8}, p, 1.0, g);
  const auto& e = tr.at_index(1);
  EXPECT_FALSE(e.d_prime.has_value());
  EXPECT_EQ(tr.final_state(), e.z_tilde);
  EXPECT_NEAR(e.z_tilde[0], e.z_hat[0] - g.time(1) * e.d[0], 1e-15);
}

TEST(Rk4, MatchesClosedFormAtFineResolution) {
  const auto p = single(1.0);
  const State out = rk4_reference({Vector{2.0}, 1}, p, 1.0, 0.0, 100000, 0);
  EXPECT_NEAR(out.z[0], std::sqrt(2.0), 1e-10);
  const State mid = rk4_reference({Vector{2.0}, 1}, p, 1.0, 0.05, 100000, 0);
  EXPECT_NEAR(mid.z[0], analytic_ode_solution(1.0, Vector{2.0}, 1.0, 0.05)[0], 1e-12);
}

TEST(Rk4, ZeroSpanIsIdentity) {
  const auto p = single(1.0);
  EXPECT_EQ(rk4_reference({Vector{2.0, 3.0}, 4}, p, 0.7, 0.7, 10, 4).z, (Vector{2.0, 3.0}));
  EXPECT_THROW(rk4_reference({Vector{2.0}, 4}, p, 0.7, 0.5, 0, 3), ConfigError);
}

TEST(Rk4, FourthOrder) {
  const auto p = single(0.3);
  const double exact = analytic_ode_solution(0.3, Vector{2.0}, 2.0, 0.1)[0];
  std::vector<std::pair<double, double>> pts;
  for (int n : {10, 20, 40, 80}) {
    const double err = std::fabs(rk4_reference({Vector{2.0}, 1}, p, 2.0, 0.1, n, 0).z[0] - exact);
    pts.emplace_back(1.9 / n, err);
  }
  EXPECT_NEAR(convergence_order(pts), 4.0, 0.3);
}

TEST(Rk4, GeneralScheduleMatchesVpClosedForm) {
  // Single Gaussian under VP: the ODE keeps z / sqrt(alpha^2 s2 + sigma^2) constant.
  const double s2 = 0.4;
  const auto vp = NoiseSchedule::vp();
  const MixturePredictor p(GaussianMixture::single_gaussian(1, s2), vp);
  auto scale = [&](double t) { return std::sqrt((1 - t) * s2 + t); };
  const Vector out = rk4_reference(p, vp, Vector{1.3}, 0.95, 0.02, 4000);
  EXPECT_NEAR(out[0], 1.3 * scale(0.02) / scale(0.95), 1e-11);
}

TEST(Convergence, HeunAndBdiaEdmAreSecondOrder) {
  for (double gamma : {0.0, 1.0}) {
    std::vector<std::pair<double, double>> pts;
    for (int n : {10, 20, 40, 80}) pts.emplace_back(0.99 / n, terminal_error_edm(n, gamma));
    EXPECT_NEAR(convergence_order(pts), 2.0, 0.3) << "gamma=" << gamma;
  }
}
