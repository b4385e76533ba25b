#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/SVD>

#include <bicforge/coordinate.hpp>
#include <bicforge/sbdecomp.hpp>

#include "common.hpp"

using namespace bicforge;
using namespace testing_support;

namespace {

const RadialGrid& rgrid() {
  static const RadialGrid rg = build_radial_grid(400, 8.0);
  return rg;
}

const Eigen::VectorXd& phi_r() {
  static const Eigen::VectorXd p = wavefunction_to_coordinate(seed_state(), grid128(), rgrid());
  return p;
}

}  // namespace

TEST(FdWeights, ExactOnQuartics) {
  const std::array<double, 5> x{0.1, 0.25, 0.3, 0.55, 0.7};
  const auto c = detail::fd_weights(0.33, x);
  auto f = [](double t) { return 2 - t + 3 * t * t - t * t * t * t; };
  double d0 = 0, d1 = 0, d2 = 0;
  for (int s = 0; s < 5; ++s) {
    d0 += c[0][s] * f(x[s]);
    d1 += c[1][s] * f(x[s]);
    d2 += c[2][s] * f(x[s]);
  }
  const double t = 0.33;
  EXPECT_NEAR(d0, f(t), 1e-12);
  EXPECT_NEAR(d1, -1 + 6 * t - 4 * t * t * t, 1e-10);
  EXPECT_NEAR(d2, 6 - 12 * t * t, 1e-8);
}

TEST(RadialLaplacian, Gaussian) {
  const auto& rg = rgrid();
  Eigen::VectorXd f(rg.size()), exact(rg.size());
  for (int a = 0; a < rg.size(); ++a) {
    const double r = rg.nodes(a);
    f(a) = std::exp(-r * r);
    exact(a) = (4 * r * r - 6) * std::exp(-r * r);
  }
  EXPECT_LT((radial_laplacian(f, rg) - exact).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(WavefunctionToCoordinate, PreservesTheNorm) {
  EXPECT_NEAR(inner_product<double>(phi_r(), phi_r(), rgrid()), 1.0, 1e-6);
  // the grid-sum transform agrees where phi is sizeable
  const Eigen::VectorXd coarse = wavefunction_to_coordinate(seed_state().phi, grid128(), rgrid());
  for (int a = 0; a < 200; a += 20) EXPECT_NEAR(coarse(a), phi_r()(a), 1e-6 * phi_r().cwiseAbs().maxCoeff());
}

TEST(VbProfile, LocalPotentialGivesVPhiAtTheEigenenergy) {
  // (E0 + lap) phi = V0 phi for a local potential
  const auto& rg = rgrid();
  const Eigen::VectorXd p = vb_profile(phi_r(), rg, seed_state().energy);
  const double scale = p.cwiseAbs().maxCoeff();
  for (int a = 2; a < rg.size() - 2; a += 13)
    EXPECT_NEAR(p(a), seed_potential(rg.nodes(a)) * phi_r()(a), 1e-4 * scale) << rg.nodes(a);
}

TEST(VbProfile, Nodes) {
  const auto& rg = rgrid();
  const auto n0 = vb_profile_node(phi_r(), rg, 0.0);
  const auto n4 = vb_profile_node(phi_r(), rg, 4.0);
  ASSERT_TRUE(n0 && n4);
  EXPECT_NEAR(*n0, 0.67, 0.02);
  EXPECT_NEAR(*n4, 0.54, 0.02);
  EXPECT_LT(*n4, *n0);
  EXPECT_FALSE(vb_profile_node(phi_r(), rg, seed_state().energy));
}

TEST(CoordinateResidual, SeedAsLocalKernel) {
  CoordinateKernel v;
  v.grid = rgrid();
  v.values = Eigen::MatrixXd::Zero(rgrid().size(), rgrid().size());
  v.local = seed_potential;
  const double res = coordinate_residual(v, phi_r(), seed_state().energy);
  EXPECT_LT(res, 1e-4);
  EXPECT_GT(coordinate_residual(v, phi_r(), seed_state().energy + 0.5), 0.1);
}

TEST(CoordinateToMomentum, LocalPartReproducesTheGaussianKernel) {
  CoordinateKernel v;
  v.grid = build_radial_grid(200, 6.0);
  v.values = Eigen::MatrixXd::Zero(200, 200);
  v.local = seed_potential;
  const auto k = coordinate_to_momentum(v, grid128());
  EXPECT_EQ(k.symmetry, Symmetry::symmetric);
  EXPECT_LT((k.values - seed().values).cwiseAbs().maxCoeff(), 1e-9 * seed().values.cwiseAbs().maxCoeff());
}

TEST(MomentumToCoordinate, EnergyShiftIsRankOne) {
  const auto& s = seed_state();
  const auto dv = build_v_b({s}, grid128());
  Kernel delta = dv;
  delta.values = (4.0 - s.energy) * s.phi * s.phi.transpose();
  const auto c = momentum_to_coordinate(delta, rgrid());
  const Eigen::VectorXd w = rgrid().measure.cwiseSqrt();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w.asDiagonal() * c.values * w.asDiagonal());
  const auto sv = svd.singularValues();
  EXPECT_LT(sv(1) / sv(0), 1e-6);
  // the profile form of the same kernel
  const Eigen::VectorXd phi_grid = wavefunction_to_coordinate(s.phi, grid128(), rgrid());
  EXPECT_NEAR(c.values(50, 80), (4.0 - s.energy) * phi_grid(50) * phi_grid(80), 1e-10 * c.values.cwiseAbs().maxCoeff());
}

TEST(CoordinateResidual, ShapeChecks) {
  CoordinateKernel v;
  v.grid = rgrid();
  v.values = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(coordinate_residual(v, phi_r(), 0.0), ShapeError);
  EXPECT_THROW(radial_laplacian(Eigen::VectorXd::Ones(3), rgrid()), ShapeError);
}
