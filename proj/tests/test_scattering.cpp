#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <bicforge/reference.hpp>
#include <bicforge/scattering.hpp>

#include "common.hpp"
#include "yamaguchi.hpp"

using namespace bicforge;
using namespace testing_support;

namespace {

double mod_pi(double d) { return d - std::numbers::pi * std::round(d / std::numbers::pi); }

}  // namespace

TEST(KMatrix, ZeroKernelDoesNotScatter) {
  const auto z = zero_kernel(grid128());
  const auto s = solve_k_matrix(z, 1.7);
  EXPECT_EQ(s.delta, 0.0);
  EXPECT_EQ(s.half_on_shell_K.cwiseAbs().maxCoeff(), 0.0);
}

TEST(KMatrix, SeparableClosedFormOffAndOnNodes) {
  const auto& g = grid128();
  const double beta = 1.1, lambda = -2500.0;
  const auto v = yamaguchi::kernel(lambda, beta, g);
  for (double k : {0.05, 0.4, 1.0, 2.5, 7.0, 18.0}) {
    EXPECT_NEAR(mod_pi(solve_k_matrix(v, k).delta - yamaguchi::phase(lambda, beta, k, g.cutoff)), 0.0, 1e-8) << k;
  }
  for (int j : {0, 20, 60, 100, 120}) {
    const double k = g.nodes(j);
    EXPECT_NEAR(mod_pi(solve_k_matrix_at_node(v, j).delta - yamaguchi::phase(lambda, beta, k, g.cutoff)), 0.0, 1e-8)
        << k;
  }
}

TEST(KMatrix, SeedMatchesVariablePhase) {
  for (double k : {0.5, 1.0, 2.0}) {
    const double d = solve_k_matrix(seed(), k).delta;
    EXPECT_NEAR(mod_pi(d - local_phase_shift(seed_potential, k)), 0.0, 1e-6) << k;
  }
}

TEST(TMatrix, OnShellUnitarity) {
  const auto t = half_on_shell_T_matrix(seed());
  const auto& g = grid128();
  for (int j = 0; j < 128; j += 7) {
    const double rho = density_of_states(g.nodes(j));
    const std::complex<double> s = 1.0 - 2.0 * std::numbers::pi * std::complex<double>(0, 1) * rho * t(j, j);
    EXPECT_NEAR(std::abs(s), 1.0, 1e-12) << j;
  }
}

TEST(TMatrix, OnShellValueFromPhase) {
  for (double k : {0.3, 1.0, 5.0}) {
    const auto s = solve_k_matrix(seed(), k);
    const auto tp = t_from_phase(k, s.delta);
    EXPECT_LT(std::abs(s.on_shell_t - tp), 1e-10 * std::abs(tp)) << k;
  }
}

TEST(TMatrix, ColumnsAreNodeSolves) {
  const auto t = half_on_shell_T_matrix(seed());
  const auto s = solve_k_matrix_at_node(seed(), 40);
  EXPECT_LT((t.col(40) - s.half_on_shell_T).cwiseAbs().maxCoeff(), 1e-13 * t.cwiseAbs().maxCoeff());
}

TEST(KMatrix, Errors) {
  EXPECT_THROW(solve_k_matrix(seed(), 40.0), ConfigError);
  EXPECT_THROW(solve_k_matrix(seed(), -1.0), ConfigError);
  auto sampled = seed();
  sampled.continuation = {};
  EXPECT_THROW(solve_k_matrix(sampled, 1.2345), SolverError);
  EXPECT_NO_THROW(solve_k_matrix(sampled, grid128().nodes(10)));
}

TEST(PhaseCurve, SeedEndpoints) {
  const auto pc = phase_curve(seed());
  ASSERT_EQ(pc.momenta.size(), 64);
  EXPECT_NEAR(pc.momenta(0), 0.01, 1e-15);
  EXPECT_NEAR(pc.momenta(63), 30.0, 1e-12);
  EXPECT_NEAR(pc.delta0, std::numbers::pi, 1e-3);
  EXPECT_NEAR(pc.delta_inf, 0.0, 0.01);
  for (int i = 1; i < 64; ++i) EXPECT_LT(std::abs(pc.delta(i) - pc.delta(i - 1)), 0.5);
  EXPECT_THROW(phase_curve(seed(), 8), ConfigError);
}

TEST(PhaseCurve, SampleOnlyKernelUsesNodes) {
  auto sampled = seed();
  sampled.continuation = {};
  const auto pc = phase_curve(sampled);
  for (int i = 0; i < pc.momenta.size(); ++i) {
    bool on = false;
    for (int j = 0; j < 128; ++j) on = on || pc.momenta(i) == grid128().nodes(j);
    EXPECT_TRUE(on);
  }
  EXPECT_NEAR(pc.delta0 - pc.delta_inf, std::numbers::pi, 0.05);
}

TEST(OnShellQuadrature, IntegratesSmoothFunctions) {
  const auto q = on_shell_quadrature(grid128());
  EXPECT_GT(q.separation, 0);
  const double s = (q.weights.array() * q.momenta.array().square() * (-q.momenta.array().square()).exp()).sum();
  EXPECT_NEAR(s, std::sqrt(std::numbers::pi) / 4, 1e-12);
  // int_0^Lambda dp = Lambda, less the two end strips of width 1e-9 Lambda that carry no nodes
  EXPECT_NEAR(q.weights.sum(), 40.0, 2e-9 * 40.0);
}
