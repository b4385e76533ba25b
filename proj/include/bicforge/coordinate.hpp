#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

#include "kernels.hpp"
#include "spectral.hpp"

namespace bicforge {

// V(r', r) on a radial grid; the optional local part stands for local(r) delta(r - r') / r^2
struct CoordinateKernel {
  RadialGrid grid;
  Eigen::MatrixXd values;
  RadialFn<double> local;

  std::ptrdiff_t size() const { return values.rows(); }
};

namespace detail {

// B(a, i) = <r_a|k_i> mu_i = 4 pi j0(k_i r_a) mu_i
inline Eigen::MatrixXd to_coordinate_map(const MomentumGrid& kg, const RadialGrid& rg) {
  Eigen::MatrixXd b(rg.size(), kg.size());
  const double fp = 4 * std::numbers::pi;
  for (Eigen::Index i = 0; i < kg.size(); ++i)
    for (Eigen::Index a = 0; a < rg.size(); ++a) b(a, i) = fp * sph_j0(kg.nodes(i) * rg.nodes(a)) * kg.measure(i);
  return b;
}

// C(i, a) = <k_i|r_a> w_a r_a^2
inline Eigen::MatrixXd to_momentum_map(const RadialGrid& rg, const MomentumGrid& kg) {
  Eigen::MatrixXd c(kg.size(), rg.size());
  const double fp = 4 * std::numbers::pi;
  for (Eigen::Index a = 0; a < rg.size(); ++a)
    for (Eigen::Index i = 0; i < kg.size(); ++i) c(i, a) = fp * sph_j0(kg.nodes(i) * rg.nodes(a)) * rg.measure(a);
  return c;
}

// Fornberg's recursion for the weights of derivatives 0..2 at x0 on the stencil x
template <std::size_t M>
std::array<std::array<double, M>, 3> fd_weights(double x0, const std::array<double, M>& x) {
  std::array<std::array<double, M>, 3> c{};
  double c1 = 1, c4 = x[0] - x0;
  c[0][0] = 1;
  for (std::size_t i = 1; i < M; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 2);
    double c2 = 1;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace detail

inline CoordinateKernel momentum_to_coordinate(const Kernel& v, const RadialGrid& rg) {
  const Eigen::MatrixXd b = detail::to_coordinate_map(v.grid, rg);
  CoordinateKernel c;
  c.grid = rg;
  c.values = b * v.values * b.transpose();
  return c;
}

// local part included through the plane-wave matrix element of local(r)
inline Kernel coordinate_to_momentum(const CoordinateKernel& c, const MomentumGrid& kg) {
  const Eigen::MatrixXd m = detail::to_momentum_map(c.grid, kg);
  Kernel v;
  v.grid = kg;
  v.values = m * c.values * m.transpose();
  if (c.local) {
    Eigen::VectorXd loc(c.grid.size());
    for (Eigen::Index a = 0; a < c.grid.size(); ++a) loc(a) = c.local(c.grid.nodes(a));
    v.values += local_to_momentum(loc, c.grid, kg).values;
  }
  v.symmetry = is_numerically_symmetric<double>(v.values) ? Symmetry::symmetric : Symmetry::general;
  if (v.symmetry == Symmetry::symmetric) v.values = (v.values + v.values.transpose()).eval() / 2;
  return v;
}

// phi(r) = int dmu(k) 4 pi j0(kr) phi(k)
inline Eigen::VectorXd wavefunction_to_coordinate(const Eigen::VectorXd& phi, const MomentumGrid& kg,
                                                  const RadialGrid& rg) {
  if (phi.size() != kg.size()) throw ShapeError("wavefunction_to_coordinate: state does not match the momentum grid");
  return detail::to_coordinate_map(kg, rg) * phi;
}

// With a continuation the transform runs on 8-point Gauss-Legendre panels short enough that
// j0(k r_max) turns by at most a quarter period across one panel.
inline Eigen::VectorXd wavefunction_to_coordinate(const BoundState& s, const MomentumGrid& kg, const RadialGrid& rg) {
  if (!s.continuation) return wavefunction_to_coordinate(s.phi, kg, rg);
  const auto gl = gauss_legendre<double>(8);
  const double lam = kg.cutoff;
  const int panels = static_cast<int>(std::ceil(lam / (std::numbers::pi / (2 * rg.r_max))));
  const double h = lam / panels;
  const double pref = 4 * std::numbers::pi / two_pi_cubed<double>();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rg.size());
  for (int p = 0; p < panels; ++p)
    for (int q = 0; q < 8; ++q) {
      const double k = h * (p + (gl.x(q) + 1) / 2);
      const double wk = pref * h / 2 * gl.w(q) * k * k * s.continuation(k);
      for (Eigen::Index a = 0; a < rg.size(); ++a) out(a) += wk * sph_j0(k * rg.nodes(a));
    }
  return out;
}

// f'' + (2/r) f' from five-point stencils, centred where possible
inline Eigen::VectorXd radial_laplacian(const Eigen::VectorXd& f, const RadialGrid& rg) {
  const auto n = rg.size();
  if (f.size() != n) throw ShapeError("radial_laplacian: samples do not match the radial grid");
  if (n < 5) throw ShapeError("radial_laplacian: needs at least 5 nodes");
  Eigen::VectorXd out(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index lo = std::clamp<Eigen::Index>(a - 2, 0, n - 5);
    std::array<double, 5> x{};
    for (int s = 0; s < 5; ++s) x[s] = rg.nodes(lo + s);
    const auto c = detail::fd_weights(rg.nodes(a), x);
    double d1 = 0, d2 = 0;
    for (int s = 0; s < 5; ++s) {
      d1 += c[1][s] * f(lo + s);
      d2 += c[2][s] * f(lo + s);
    }
    out(a) = d2 + 2 * d1 / rg.nodes(a);
  }
  return out;
}

// (E + laplacian) phi(r), the r' profile of <r'|V_B|r>
inline Eigen::VectorXd vb_profile(const Eigen::VectorXd& phi_r, const RadialGrid& rg, double energy) {
  return radial_laplacian(phi_r, rg) + energy * phi_r;
}

// first sign change of (E + laplacian) phi; samples below floor * max are not trusted
inline std::optional<double> vb_profile_node(const Eigen::VectorXd& phi_r, const RadialGrid& rg, double energy,
                                             double floor = 1e-6) {
  const Eigen::VectorXd p = vb_profile(phi_r, rg, energy);
  const double cut = floor * p.cwiseAbs().maxCoeff();
  Eigen::Index last = -1;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    if (std::abs(p(a)) <= cut) continue;
    if (last >= 0 && (p(a) > 0) != (p(last) > 0)) {
      // linear between the bracketing samples, refined by the quadratic through a third
      const double r0 = rg.nodes(last), r1 = rg.nodes(a);
      double r = r0 - p(last) * (r1 - r0) / (p(a) - p(last));
      const Eigen::Index c = a + 1 < p.size() ? a + 1 : last - 1;
      if (c >= 0 && c < p.size()) {
        const double x0 = r0, x1 = r1, x2 = rg.nodes(c);
        const double y0 = p(last), y1 = p(a), y2 = p(c);
        // Newton steps on the interpolating quadratic, kept inside the bracket
        for (int it = 0; it < 20; ++it) {
          const double l0 = (r - x1) * (r - x2) / ((x0 - x1) * (x0 - x2));
          const double l1 = (r - x0) * (r - x2) / ((x1 - x0) * (x1 - x2));
          const double l2 = (r - x0) * (r - x1) / ((x2 - x0) * (x2 - x1));
          const double d0 = (2 * r - x1 - x2) / ((x0 - x1) * (x0 - x2));
          const double d1 = (2 * r - x0 - x2) / ((x1 - x0) * (x1 - x2));
          const double d2 = (2 * r - x0 - x1) / ((x2 - x0) * (x2 - x1));
          const double q = y0 * l0 + y1 * l1 + y2 * l2, dq = y0 * d0 + y1 * d1 + y2 * d2;
          if (dq == 0) break;
          const double next = std::clamp(r - q / dq, r0, r1);
          if (std::abs(next - r) <= 1e-14 * r1) {
            r = next;
            break;
          }
          r = next;
        }
      }
      return r;
    }
    last = a;
  }
  return std::nullopt;
}

// measure norm of -lap phi + int r'^2 dr' V(r, r') phi(r') + local(r) phi(r) - E phi(r),
// with the two edge nodes at each end left out of the norm
inline double coordinate_residual(const CoordinateKernel& v, const Eigen::VectorXd& phi_r, double energy) {
  const auto& rg = v.grid;
  if (phi_r.size() != rg.size() || v.values.rows() != rg.size() || v.values.cols() != rg.size())
    throw ShapeError("coordinate_residual: kernel and state grids differ");
  Eigen::VectorXd r = -radial_laplacian(phi_r, rg) - energy * phi_r;
  r.noalias() += v.values * rg.measure.cwiseProduct(phi_r);
  if (v.local)
    for (Eigen::Index a = 0; a < rg.size(); ++a) r(a) += v.local(rg.nodes(a)) * phi_r(a);
  const auto n = rg.size();
  double s = 0;
  for (Eigen::Index a = 2; a < n - 2; ++a) s += rg.measure(a) * r(a) * r(a);
  return std::sqrt(s);
}

}  // namespace bicforge
