#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "replidyn/errors.hpp"
#include "replidyn/stability.hpp"
#include "test_support.hpp"

using namespace replidyn;
using namespace replidyn::fixtures;

namespace {

const Distribution kHalf({0.5, 0.5});

// D_KL(ref || x(t)) by centered differences through the dense output.
double potential_rate(const Trajectory& tr, const Distribution& ref, double t, double h) {
  return (kl_divergence(ref, tr.state_at(t + h)) - kl_divergence(ref, tr.state_at(t - h))) / (2 * h);
}

}  // namespace

// --- interior_equilibrium --------------------------------------------------

TEST(InteriorEquilibrium, Examples) {
  const auto hd = interior_equilibrium(hawk_dove());
  EXPECT_NEAR(hd[0], 0.5, 1e-15);
  const auto rps = interior_equilibrium(zero_sum_rps());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(rps[i], 1.0 / 3, 1e-15);
  EXPECT_THROW(interior_equilibrium(Matrix::Zero(3, 3)), NoIsolatedEquilibriumError);
  // Type 1 strictly dominates: equalization needs x_2 < 0.
  EXPECT_THROW(interior_equilibrium(mat({{3, 2}, {1, 1.5}})), NoInteriorEquilibriumError);
  EXPECT_THROW(interior_equilibrium(Matrix::Zero(2, 3)), DimensionError);
}

TEST(InteriorEquilibrium, EqualizesPayoffsForRandomGames) {
  Gen g(31);
  int found = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = g.integer(2, 5);
    const Matrix A = g.matrix(n);
    try {
      const auto x = interior_equilibrium(A);
      ++found;
      const auto f = evaluate(FitnessLandscape::linear(A), x);
      const double fbar = weighted_mean(x.weights(), f);
      for (double fi : f) EXPECT_LT(std::abs(fi - fbar), 1e-10);
      EXPECT_TRUE(x.is_interior());
    } catch (const NoInteriorEquilibriumError&) {
    } catch (const NumericsError&) {
    }
  }
  EXPECT_GT(found, 20);
}

// --- ess_check -------------------------------------------------------------

TEST(EssCheck, HawkDoveIsEss) {
  const auto r = ess_check(kHalf, FitnessLandscape::linear(hawk_dove()));
  EXPECT_EQ(r.quadratic_form_verdict, QuadraticFormVerdict::NegativeDefinite);
  ASSERT_EQ(r.tangent_eigenvalues.size(), 1u);
  // u = (1,-1)/sqrt2: u.Au = -1.
  EXPECT_NEAR(r.tangent_eigenvalues[0], -1.0, 1e-14);
  EXPECT_TRUE(r.sampling_verdict);
  EXPECT_GT(r.min_margin, 0.0);
  EXPECT_EQ(r.sample_count, 200u);
  EXPECT_EQ(r.radius, 0.1);
}

TEST(EssCheck, ZeroSumRpsIsNotEss) {
  const auto r = ess_check(Distribution::uniform(3), FitnessLandscape::linear(zero_sum_rps()));
  EXPECT_EQ(r.quadratic_form_verdict, QuadraticFormVerdict::Degenerate);
  EXPECT_NEAR(r.min_margin, 0.0, 1e-12);
  EXPECT_FALSE(r.sampling_verdict);
}

TEST(EssCheck, ConstantLandscapeIsNotEss) {
  const auto r = ess_check(Distribution({0.2, 0.3, 0.5}), FitnessLandscape::constant(2.0));
  EXPECT_EQ(r.quadratic_form_verdict, QuadraticFormVerdict::NotApplicable);
  EXPECT_EQ(r.min_margin, 0.0);
  EXPECT_FALSE(r.sampling_verdict);
}

TEST(EssCheck, CoordinationGameIsIndefinite) {
  // Interior equilibrium of a coordination game is unstable.
  const Matrix A = mat({{2, 0}, {0, 1}});
  const auto r = ess_check(interior_equilibrium(A), FitnessLandscape::linear(A));
  EXPECT_EQ(r.quadratic_form_verdict, QuadraticFormVerdict::Indefinite);
  EXPECT_FALSE(r.sampling_verdict);
  EXPECT_LT(r.min_margin, 0.0);
}

TEST(EssCheck, DeterministicInSeed) {
  const auto L = FitnessLandscape::linear(hawk_dove());
  const auto a = ess_check(kHalf, L, 0.1, 50, 7);
  const auto b = ess_check(kHalf, L, 0.1, 50, 7);
  const auto c = ess_check(kHalf, L, 0.1, 50, 8);
  EXPECT_EQ(a.min_margin, b.min_margin);
  EXPECT_NE(a.min_margin, c.min_margin);
}

TEST(EssCheck, Errors) {
  const auto L = FitnessLandscape::linear(hawk_dove());
  EXPECT_THROW(ess_check(Distribution({0.05, 0.95}), L, 0.5), RadiusError);
  EXPECT_THROW(ess_check(kHalf, L, 0.0), RadiusError);
  EXPECT_THROW(ess_check(Distribution::vertex(2, 0), L), DomainError);
  EXPECT_THROW(ess_check(Distribution::uniform(3), L), DimensionError);
}

TEST(EssCheck, RandomNegativeDefiniteGamesPassSampling) {
  // A = -M M^T restricted to the tangent space is negative definite; every
  // interior equilibrium of such a game is an ESS.
  Gen g(32);
  int checked = 0;
  for (int trial = 0; trial < 100 && checked < 30; ++trial) {
    const std::size_t n = g.integer(2, 4);
    const Matrix M = g.matrix(n);
    const Matrix A = -(M * M.transpose()) - 0.1 * Matrix::Identity(static_cast<Eigen::Index>(n),
                                                                    static_cast<Eigen::Index>(n));
    Distribution x = Distribution::uniform(n);
    try {
      x = interior_equilibrium(A);
    } catch (const Error&) {
      continue;
    }
    if (*std::min_element(x.weights().begin(), x.weights().end()) < 0.05) continue;
    ++checked;
    const auto r = ess_check(x, FitnessLandscape::linear(A), 0.02, 200, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(r.quadratic_form_verdict, QuadraticFormVerdict::NegativeDefinite);
    EXPECT_TRUE(r.sampling_verdict);
  }
  EXPECT_GT(checked, 5);
}

TEST(CounterRng, UniformMoments) {
  CounterRng rng(99);
  double s = 0, s2 = 0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / N, 0.5, 5e-3);
  EXPECT_NEAR(s2 / N, 1.0 / 3, 5e-3);
  CounterRng a(5), b(5);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.counter(), 1u);
}

// --- lyapunov_derivative ---------------------------------------------------

TEST(LyapunovDerivative, Examples) {
  const auto hd = FitnessLandscape::linear(hawk_dove());
  EXPECT_EQ(lyapunov_derivative(kHalf, kHalf, hd), 0.0);
  EXPECT_NEAR(lyapunov_derivative(kHalf, Distribution({0.25, 0.75}), hd), -0.125, 1e-15);
  const auto rps = FitnessLandscape::linear(zero_sum_rps());
  Gen g(33);
  for (int k = 0; k < 100; ++k) {
    EXPECT_NEAR(lyapunov_derivative(Distribution::uniform(3), g.interior(3), rps), 0.0, 1e-14);
  }
  EXPECT_THROW(lyapunov_derivative(kHalf, Distribution::vertex(2, 1), hd), DomainError);
}

// --- lyapunov_trace --------------------------------------------------------

TEST(LyapunovTrace, StationaryTrajectory) {
  const Distribution x({0.3, 0.7});
  const auto L = FitnessLandscape::constant(1.0);
  const auto tr = integrate(x, L, 3.0);
  const auto trace = lyapunov_trace(tr, kHalf, L, TraceMode::Continuous);
  for (double d : trace.potential_series) EXPECT_EQ(d, trace.potential_series.front());
  EXPECT_TRUE(trace.monotone_decreasing);
  EXPECT_EQ(trace.max_increase, 0.0);
}

TEST(LyapunovTrace, DiscreteShiftedHawkDove) {
  const auto L = FitnessLandscape::linear(hawk_dove_shifted());
  const auto orbit = discrete_orbit(Distribution({0.25, 0.75}), L, 40);
  const auto trace = lyapunov_trace(orbit, kHalf, L, TraceMode::Discrete);
  // Oracle values (50-digit evaluation of the step, the divergence and the bound).
  EXPECT_NEAR(trace.potential_series[0], 0.143841036225890436, 1e-15);
  EXPECT_NEAR(trace.potential_series[1], 0.104765756465141205, 1e-15);
  EXPECT_NEAR(trace.potential_series[1] - trace.potential_series[0], -0.0390752797607492, 1e-14);
  ASSERT_FALSE(trace.bound_series.empty());
  EXPECT_NEAR(trace.bound_series[0], -0.0425596144187959, 1e-14);
  EXPECT_TRUE(trace.jensen_lower_bound_ok);
  EXPECT_TRUE(trace.strictly_decreasing);
  EXPECT_TRUE(trace.monotone_decreasing);
  EXPECT_LT(trace.max_increase, 0.0);
  EXPECT_EQ(trace.mode, TraceMode::Discrete);
}

TEST(LyapunovTrace, DiscreteRandomStartsDecreaseAndRespectBound) {
  const auto L = FitnessLandscape::linear(hawk_dove_shifted());
  Gen g(34);
  for (int k = 0; k < 50; ++k) {
    const auto orbit = discrete_orbit(g.interior(2, 1e-3), L, 200);
    const auto trace = lyapunov_trace(orbit, kHalf, L, TraceMode::Discrete);
    EXPECT_TRUE(trace.strictly_decreasing) << "start " << orbit.states[0][0];
    EXPECT_TRUE(trace.jensen_lower_bound_ok);
    for (std::size_t s = 0; s + 1 < trace.potential_series.size(); ++s) {
      EXPECT_GE(trace.potential_series[s + 1] - trace.potential_series[s], trace.bound_series[s] - 1e-12);
    }
  }
}

TEST(LyapunovTrace, JensenBoundOnRandomPositiveGames) {
  Gen g(35);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = g.integer(2, 5);
    const auto L = FitnessLandscape::linear(g.matrix(n, 0.5, 2.0));
    const auto orbit = discrete_orbit(g.interior(n), L, 10);
    const auto trace = lyapunov_trace(orbit, g.interior(n), L, TraceMode::Discrete);
    EXPECT_TRUE(trace.jensen_lower_bound_ok);
  }
}

TEST(LyapunovTrace, DiscreteNeedsPositiveLandscape) {
  const auto L = FitnessLandscape::linear(hawk_dove());
  Trajectory tr = make_trajectory({0.0, 1.0}, {Distribution({0.9, 0.1}), Distribution({0.8, 0.2})}, L);
  EXPECT_THROW(lyapunov_trace(tr, kHalf, L, TraceMode::Discrete), DomainError);
  Trajectory boundary = make_trajectory({0.0, 1.0}, {Distribution({0.9, 0.1}), Distribution({1.0, 0.0})}, L);
  EXPECT_THROW(lyapunov_trace(boundary, kHalf, L, TraceMode::Continuous), DomainError);
}

TEST(LyapunovTrace, ZeroSumRpsConservesPotential) {
  const auto L = FitnessLandscape::linear(zero_sum_rps());
  const auto tr = integrate(Distribution({0.5, 0.25, 0.25}), L, 50.0);
  const auto trace = lyapunov_trace(tr, Distribution::uniform(3), L, TraceMode::Continuous);
  double drift = 0.0;
  for (double d : trace.potential_series) drift = std::max(drift, std::abs(d - trace.potential_series[0]));
  EXPECT_LE(drift, 1e-8);
}

TEST(LyapunovTrace, HawkDoveStrictlyDecreasing) {
  const auto L = FitnessLandscape::linear(hawk_dove());
  const auto tr = integrate(Distribution({0.9, 0.1}), L, 30.0);
  const auto trace = lyapunov_trace(tr, kHalf, L, TraceMode::Continuous);
  EXPECT_TRUE(trace.strictly_decreasing);
  EXPECT_TRUE(trace.monotone_decreasing);
}

TEST(LyapunovTrace, AnalyticDerivativeMatchesFiniteDifferences) {
  const auto L = FitnessLandscape::linear(hawk_dove());
  const auto tr = integrate(Distribution({0.9, 0.1}), L, 30.0);
  // Sample times are the integrator's own steps; between steps the dense
  // interpolant's derivative is only good to a few 1e-6 once D < 1e-8.
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
    const double t = tr.times[k];
    const double h = std::min({1e-3, 0.5 * t, 0.5 * (30.0 - t)});
    const double analytic = lyapunov_derivative(kHalf, tr.states[k], L);
    const double numeric = potential_rate(tr, kHalf, t, h);
    worst = std::max(worst, std::abs(numeric - analytic) / std::abs(analytic));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(LyapunovTrace, EssBasinStartsConverge) {
  const auto L = FitnessLandscape::linear(hawk_dove());
  Gen g(36);
  for (int k = 0; k < 20; ++k) {
    const auto tr = integrate(g.interior(2, 0.01), L, 40.0);
    EXPECT_LE(max_abs_diff(tr.terminal().weights(), kHalf.weights()), 1e-6);
  }
}
