#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <bicforge/levinson.hpp>
#include <bicforge/reference.hpp>

#include "common.hpp"

using namespace bicforge;
using namespace testing_support;

namespace {

VnwPotential vnw(double k, double a) { return vnw_build(k, a, build_radial_grid(4000, 50 / k)); }

// V = -v0 e^{-r/a}: u = J_nu(z e^{-r/2a}) with nu = 2 a kappa, z = 2 a sqrt(v0), so bound
// states sit at the zeros of nu -> J_nu(z). Bisection on the bracket [lo, hi] in nu.
double exponential_well_energy(double v0, double a, double lo, double hi) {
  const double z = 2 * a * std::sqrt(v0);
  auto f = [&](double nu) { return std::cyl_bessel_j(nu, z); };
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo + hi) / 2;
    ((f(lo) < 0) == (f(mid) < 0) ? lo : hi) = mid;
  }
  const double kappa = (lo + hi) / 4 / a;
  return -kappa * kappa;
}

double mod_pi(double d) { return d - std::numbers::pi * std::round(d / std::numbers::pi); }

}  // namespace

TEST(Vnw, ResidualAtTheBicEnergy) {
  for (auto [k, a] : {std::pair{1.0, 10.0}, std::pair{2.0, 5.0}}) {
    const auto m = vnw(k, a);
    EXPECT_LT(vnw_verify(m), 1e-6) << k;
    EXPECT_GT(vnw_verify(m, m.energy() + 0.5), 0.4) << k;
    EXPECT_GT(m.norm, 0);
  }
}

TEST(Vnw, OriginScalingAndTail) {
  const double k = 1.0, a = 10.0;
  const double r1 = 1e-3, r2 = 1e-2;
  const double slope = std::log(vnw_potential(k, a, r2) / vnw_potential(k, a, r1)) / std::log(r2 / r1);
  EXPECT_NEAR(slope, 4.0, 0.1);
  for (double x = 20; x <= 50; x += 0.01) {
    const double s = std::sin(2 * x);
    if (std::abs(s) < 0.5) continue;
    const double ratio = vnw_potential(k, a, x) * 2 * x / (s * k * k);
    EXPECT_GT(ratio, -24) << x;
    EXPECT_LT(ratio, -8) << x;
  }
}

TEST(Vnw, SmallArgumentSeriesIsContinuous) {
  EXPECT_NEAR(detail::x_minus_sin(0.00999999), 0.00999999 - std::sin(0.00999999), 1e-18);
  EXPECT_NEAR(detail::x_minus_sin(0.01) / (0.01 - std::sin(0.01)), 1.0, 1e-9);
  EXPECT_THROW(vnw_build(0.0, 1.0, build_radial_grid(16, 1.0)), ConfigError);
  EXPECT_THROW(vnw_build(1.0, 0.0, build_radial_grid(16, 1.0)), ConfigError);
}

TEST(Separable, CriticalCouplingClosedForm) {
  // g = (1 - k^2) e^{-k^2}: int dmu g^2 / (1 - k^2) = int k^2 (1 - k^2) e^{-2k^2} dk / (2 pi)^3
  const double sp = std::sqrt(std::numbers::pi);
  const double integral = (sp / (4 * std::pow(2.0, 1.5)) - 3 * sp / (8 * std::pow(2.0, 2.5))) / std::pow(2 * std::numbers::pi, 3);
  const auto m = tuned_separable_model([](double k) { return std::exp(-k * k); }, 1.0, grid128());
  EXPECT_NEAR(m.lambda * integral, 1.0, 1e-10);
  EXPECT_NEAR(m.lambda, 6333.29393951, 1e-6);
  // the divided form agrees
  EXPECT_NEAR(separable_tune(m.g, 1.0, grid128()) / m.lambda, 1.0, 1e-8);
  // doubling g quarters the coupling
  EXPECT_NEAR(separable_tune(Eigen::VectorXd(2 * m.g), 1.0, grid128(), Eigen::VectorXd(2 * *m.h)), m.lambda / 4, 1e-9 * m.lambda);
}

TEST(Separable, TunedModelHasABic) {
  const auto m = tuned_separable_model([](double k) { return std::exp(-k * k); }, 1.0, grid128());
  const auto v = separable_kernel(m);
  const auto s = separable_bic(m);
  EXPECT_EQ(s.energy, 1.0);
  EXPECT_LT(schrodinger_residual(v, s), 1e-6);
  const auto c = bic_census(v);
  EXPECT_EQ(c.N_plus, 1);
  EXPECT_EQ(c.N_minus, 0);
}

TEST(Separable, Rejections) {
  auto m = tuned_separable_model([](double k) { return std::exp(-k * k); }, 1.0, grid128());
  m.lambda *= 1.001;
  EXPECT_THROW(separable_bic(m), NotABicError);
  Eigen::VectorXd g(128);
  for (int i = 0; i < 128; ++i) g(i) = std::exp(-grid128().nodes(i) * grid128().nodes(i));
  EXPECT_THROW(separable_tune(g, 1.0, grid128()), NormalizabilityError);
  EXPECT_THROW(separable_tune(g, 50.0, grid128()), ConfigError);
  EXPECT_THROW(separable_tune(Eigen::VectorXd::Zero(3), 1.0, grid128()), ShapeError);
}

TEST(LocalOracles, ExponentialWellBoundState) {
  // z = 2 sqrt 5 = 4.47 lies between the first zeros of J_1 (3.83) and J_2 (5.14)
  const auto e = local_bound_energy([](double r) { return -5.0 * std::exp(-r); }, 30.0, 60000);
  ASSERT_TRUE(e);
  EXPECT_NEAR(*e, exponential_well_energy(5.0, 1.0, 1.0, 2.0), 1e-6);
  EXPECT_FALSE(local_bound_energy([](double r) { return std::exp(-r); }));
}

TEST(LocalOracles, SquareWellPhaseShift) {
  const double v0 = 5.0, r0 = 1.0;
  auto well = [&](double r) { return r < r0 ? -v0 : 0.0; };
  for (double k : {0.3, 1.0, 2.5}) {
    const double q = std::sqrt(k * k + v0);
    const double exact = std::atan(k * std::tan(q * r0) / q) - k * r0;
    EXPECT_NEAR(mod_pi(local_phase_shift(well, k) - exact), 0.0, 1e-4) << k;
  }
  EXPECT_THROW(local_phase_shift(well, 0.0), ConfigError);
}
