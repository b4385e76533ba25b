#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>

#include "errors.hpp"
#include "grid.hpp"

namespace bicforge {

// hbar^2 / 2m for the proton-neutron reduced mass, MeV fm^2; reporting only
inline constexpr double mev_per_inverse_fm2 = 41.47;

enum class Symmetry { symmetric, general };

template <class Real>
using KernelFn = std::function<Real(Real, Real)>;
template <class Real>
using RadialFn = std::function<Real(Real)>;

// values == left * right^T
template <class Real>
struct LowRank {
  Mat<Real> left;
  Mat<Real> right;
};

template <class Real>
struct basic_kernel {
  basic_momentum_grid<Real> grid;
  Mat<Real> values;  // values(i, j) = <k_i|V|k_j>, fm
  Symmetry symmetry = Symmetry::symmetric;
  // <k'|V|k> at arbitrary momenta; empty when only the grid samples are known
  KernelFn<Real> continuation;
  std::optional<LowRank<Real>> factors;

  std::ptrdiff_t size() const { return values.rows(); }
  bool has_continuation() const { return static_cast<bool>(continuation); }
};

using Kernel = basic_kernel<double>;

template <class Real>
Real max_asymmetry(const Mat<Real>& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

template <class Real>
bool is_numerically_symmetric(const Mat<Real>& m, Real rel = Real(1e-10)) {
  if (m.size() == 0) return true;
  Real scale = m.cwiseAbs().maxCoeff();
  return max_asymmetry(m) <= rel * scale;
}

template <class Real>
void require_finite(const Mat<Real>& m, const char* what) {
  using std::isfinite;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!isfinite(m(i, j))) throw SolverError(std::string(what) + ": non-finite kernel entry");
}

template <class Real>
basic_kernel<Real> zero_kernel(const basic_momentum_grid<Real>& grid) {
  basic_kernel<Real> v;
  v.grid = grid;
  v.values = Mat<Real>::Zero(grid.size(), grid.size());
  v.continuation = [](Real, Real) { return Real(0); };
  return v;
}

template <class Real>
Real sph_j0(Real x) {
  using std::abs;
  using std::sin;
  if (abs(x) < Real(1e-4)) {
    Real x2 = x * x;
    return 1 - x2 / 6 * (1 - x2 / 20);
  }
  return sin(x) / x;
}

// 4 pi lambda (b sqrt(pi))^3 exp(-(k^2 + k'^2) b^2 / 4) sinh(k k' b^2 / 2) / (k k' b^2 / 2),
// the plane-wave matrix element of V(r) = lambda exp(-r^2 / b^2)
template <class Real>
Real gaussian_kernel_value(Real lambda, Real b, Real kp, Real k) {
  using std::exp;
  using std::sqrt;
  const Real pi = pi_v<Real>();
  const Real bs = b * sqrt(pi);
  const Real pref = 4 * pi * lambda * bs * bs * bs;
  const Real b2 = b * b;
  const Real prod = k * kp * b2;
  if (prod < Real(1e-6)) {
    Real z = prod / 2;
    return pref * exp(-(k * k + kp * kp) * b2 / 4) * (1 + z * z / 6);
  }
  Real dm = k - kp, dp = k + kp;
  return pref * (exp(-dm * dm * b2 / 4) - exp(-dp * dp * b2 / 4)) / prod;
}

template <class Real>
basic_kernel<Real> gaussian_momentum_kernel(Real lambda, Real b, const basic_momentum_grid<Real>& grid) {
  if (!(b > 0)) throw ConfigError("gaussian kernel needs b > 0");
  const auto n = grid.size();
  basic_kernel<Real> v;
  v.grid = grid;
  v.values.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i <= j; ++i) {
      Real x = gaussian_kernel_value(lambda, b, grid.nodes(i), grid.nodes(j));
      v.values(i, j) = x;
      v.values(j, i) = x;
    }
  v.continuation = [lambda, b](Real kp, Real k) { return gaussian_kernel_value(lambda, b, kp, k); };
  return v;
}

// <k'|V|k> = 16 pi^2 int r^2 dr j0(k'r) V(r) j0(kr)
template <class Real>
basic_kernel<Real> local_to_momentum(const Vec<Real>& v_r, const basic_radial_grid<Real>& rgrid,
                                     const basic_momentum_grid<Real>& kgrid) {
  if (v_r.size() != rgrid.size()) throw ShapeError("local_to_momentum: potential samples do not match the radial grid");
  const Real pi = pi_v<Real>();
  const Vec<Real> wv = (16 * pi * pi) * rgrid.measure.cwiseProduct(v_r);
  const Vec<Real> r = rgrid.nodes;
  const auto n = kgrid.size();
  Mat<Real> jb(rgrid.size(), n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < rgrid.size(); ++a) jb(a, i) = sph_j0(kgrid.nodes(i) * r(a));
  basic_kernel<Real> v;
  v.grid = kgrid;
  v.values = jb.transpose() * wv.asDiagonal() * jb;
  v.values = (v.values + v.values.transpose()).eval() / 2;
  v.continuation = [wv, r](Real kp, Real k) {
    Real s(0);
    for (Eigen::Index a = 0; a < r.size(); ++a) s += wv(a) * sph_j0(kp * r(a)) * sph_j0(k * r(a));
    return s;
  };
  return v;
}

// V'(k', k) = V(k', k) + coefficient * left(k') * right(k). The continuation survives when the
// base kernel has one and both factors come with callables.
template <class Real>
basic_kernel<Real> rank_one_update(const basic_kernel<Real>& base, const Vec<Real>& left, const Vec<Real>& right,
                                   Real coefficient, RadialFn<Real> left_fn = {}, RadialFn<Real> right_fn = {}) {
  const auto n = base.size();
  if (left.size() != n || right.size() != n) throw ShapeError("rank_one_update: factor length does not match the kernel");
  basic_kernel<Real> out = base;
  out.factors.reset();
  if (coefficient == 0) return out;
  out.values.noalias() += coefficient * left * right.transpose();
  const bool same = (left - right).cwiseAbs().maxCoeff() == 0;
  out.symmetry = (same && base.symmetry == Symmetry::symmetric) ? Symmetry::symmetric : Symmetry::general;
  if (out.symmetry == Symmetry::symmetric) out.values = (out.values + out.values.transpose()).eval() / 2;
  if (base.continuation && left_fn && right_fn) {
    auto bc = base.continuation;
    out.continuation = [bc, left_fn, right_fn, coefficient](Real kp, Real k) {
      return bc(kp, k) + coefficient * left_fn(kp) * right_fn(k);
    };
  } else {
    out.continuation = {};
  }
  return out;
}

}  // namespace bicforge
