#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"

namespace bicforge {

template <class Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <class Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <class Real>
inline Real pi_v() {
  using std::acos;
  return acos(Real(-1));
}

// (2 pi)^3, the plane-wave normalization carried by every momentum integral
template <class Real>
inline Real two_pi_cubed() {
  Real t = 2 * pi_v<Real>();
  return t * t * t;
}

template <class Real>
struct GaussLegendre {
  Vec<Real> x;  // ascending on (-1, 1)
  Vec<Real> w;
  // barycentric interpolation weights of the nodes, up to a common factor
  Vec<Real> bary;
};

template <class Real>
GaussLegendre<Real> gauss_legendre(int n) {
  using std::abs;
  using std::sqrt;
  GaussLegendre<Real> gl;
  gl.x.resize(n);
  gl.w.resize(n);
  gl.bary.resize(n);
  const Real eps = Eigen::NumTraits<Real>::epsilon();
  for (int i = 0; i < n; ++i) {
    // root i counted from x = -1
    Real z(-std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5)));
    Real dp(0);
    for (int it = 0; it < 100; ++it) {
      Real p0(1), p1 = z;
      for (int l = 2; l <= n; ++l) {
        Real p2 = ((2 * l - 1) * z * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      Real dz = p1 / dp;
      z -= dz;
      if (abs(dz) <= 4 * eps) break;
    }
    // derivative at the converged root
    Real p0(1), p1 = z;
    for (int l = 2; l <= n; ++l) {
      Real p2 = ((2 * l - 1) * z * p1 - (l - 1) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1);
    gl.x(i) = z;
    gl.w(i) = 2 / ((1 - z * z) * dp * dp);
  }
  for (int i = 0; i < n; ++i) {
    Real s = sqrt((1 - gl.x(i) * gl.x(i)) * gl.w(i));
    gl.bary(i) = (i % 2 == 0) ? s : Real(-s);
  }
  return gl;
}

template <class Real>
struct basic_momentum_grid {
  Vec<Real> nodes;    // k_i, fm^-1
  Vec<Real> weights;  // dk weights, fm^-1
  Vec<Real> measure;  // w_i k_i^2 / (2 pi)^3, fm^-3
  Real cutoff{};      // Lambda
  Real map_scale{};   // c
  // Gauss-Legendre data behind the map, used by the principal-value rule
  Vec<Real> x, wx, bary, jacobian;

  std::ptrdiff_t size() const { return nodes.size(); }

  template <class Other>
  basic_momentum_grid<Other> cast() const {
    basic_momentum_grid<Other> g;
    g.nodes = nodes.template cast<Other>();
    g.weights = weights.template cast<Other>();
    g.measure = measure.template cast<Other>();
    g.cutoff = static_cast<Other>(cutoff);
    g.map_scale = static_cast<Other>(map_scale);
    g.x = x.template cast<Other>();
    g.wx = wx.template cast<Other>();
    g.bary = bary.template cast<Other>();
    g.jacobian = jacobian.template cast<Other>();
    return g;
  }
};

using MomentumGrid = basic_momentum_grid<double>;

// k = c (1 + x) / (1 - x + a) with a = 2c / Lambda maps [-1, 1] onto [0, Lambda]
// and puts half of the nodes below k = c
template <class Real = double>
basic_momentum_grid<Real> build_momentum_grid(int n, Real map_scale, Real cutoff) {
  if (n < 8) throw ConfigError("momentum grid needs n >= 8, got " + std::to_string(n));
  if (!(map_scale > 0) || !(map_scale < cutoff))
    throw ConfigError("momentum grid needs 0 < map_scale < cutoff");
  auto gl = gauss_legendre<Real>(n);
  basic_momentum_grid<Real> g;
  g.cutoff = cutoff;
  g.map_scale = map_scale;
  g.x = gl.x;
  g.wx = gl.w;
  g.bary = gl.bary;
  g.nodes.resize(n);
  g.weights.resize(n);
  g.measure.resize(n);
  g.jacobian.resize(n);
  const Real a = 2 * map_scale / cutoff;
  const Real norm = two_pi_cubed<Real>();
  for (int i = 0; i < n; ++i) {
    Real d = 1 - gl.x(i) + a;
    g.nodes(i) = map_scale * (1 + gl.x(i)) / d;
    g.jacobian(i) = map_scale * (2 + a) / (d * d);
    g.weights(i) = gl.w(i) * g.jacobian(i);
    g.measure(i) = g.weights(i) * g.nodes(i) * g.nodes(i) / norm;
  }
  return g;
}

// barycentric interpolation of grid samples at an arbitrary momentum in (0, Lambda), carried out in
// the Gauss-Legendre variable
template <class Real>
Real interpolate(const basic_momentum_grid<Real>& g, const Vec<Real>& f, Real k) {
  if (f.size() != g.size()) throw ShapeError("interpolate: samples do not match the grid size");
  const Real a = 2 * g.map_scale / g.cutoff;
  const Real x = (k * (1 + a) - g.map_scale) / (k + g.map_scale);
  Real num(0), den(0);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const Real d = x - g.x(i);
    if (d == 0) return f(i);
    num += g.bary(i) / d * f(i);
    den += g.bary(i) / d;
  }
  return num / den;
}

template <class Real>
struct basic_radial_grid {
  Vec<Real> nodes;    // r_i, fm
  Vec<Real> weights;  // dr weights, fm
  Vec<Real> measure;  // w_i r_i^2, fm^3
  Real r_max{};

  std::ptrdiff_t size() const { return nodes.size(); }
};

using RadialGrid = basic_radial_grid<double>;

template <class Real = double>
basic_radial_grid<Real> build_radial_grid(int n, Real r_max) {
  if (n < 8) throw ConfigError("radial grid needs n >= 8, got " + std::to_string(n));
  if (!(r_max > 0)) throw ConfigError("radial grid needs r_max > 0");
  auto gl = gauss_legendre<Real>(n);
  basic_radial_grid<Real> g;
  g.r_max = r_max;
  g.nodes = (gl.x.array() + 1) * (r_max / 2);
  g.weights = gl.w * (r_max / 2);
  g.measure = g.weights.array() * g.nodes.array().square();
  return g;
}

template <class Real>
Real inner_product(const Vec<Real>& f, const Vec<Real>& g, const basic_momentum_grid<Real>& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    throw ShapeError("inner_product: samples do not match the grid size");
  return (grid.measure.array() * f.array() * g.array()).sum();
}

template <class Real>
Real inner_product(const Vec<Real>& f, const Vec<Real>& g, const basic_radial_grid<Real>& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    throw ShapeError("inner_product: samples do not match the grid size");
  return (grid.measure.array() * f.array() * g.array()).sum();
}

}  // namespace bicforge
