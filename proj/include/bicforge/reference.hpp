#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "coordinate.hpp"
#include "kernels.hpp"
#include "spectral.hpp"

namespace bicforge {

// ---- von Neumann-Wigner ------------------------------------------------------------------

namespace detail {

// x - sin x without cancellation for small x
inline double x_minus_sin(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return x * x2 / 6 * (1 - x2 / 20 * (1 - x2 / 42 * (1 - x2 / 72)));
  }
  return x - std::sin(x);
}

}  // namespace detail

inline double vnw_potential(double k, double a, double r) {
  const double s = std::sin(k * r);
  const double s4 = s * s * s * s;
  const double rr = detail::x_minus_sin(2 * k * r);
  const double u = a * a + rr * rr;
  const double k2 = k * k;
  return -128 * a * a * k2 * s4 / (u * u) + (96 * k2 * s4 - 16 * k2 * rr * std::sin(2 * k * r)) / u;
}

// j0(kr) / (A^2 + R^2), R = 2kr - sin 2kr
inline double vnw_wavefunction(double k, double a, double r) {
  const double rr = detail::x_minus_sin(2 * k * r);
  return sph_j0(k * r) / (a * a + rr * rr);
}

struct VnwPotential {
  double k = 0;
  double A = 0;
  RadialGrid grid;
  Eigen::VectorXd v;    // V(r_a), fm^-2
  Eigen::VectorXd phi;  // unnormalized
  double norm = 0;      // sqrt(int r^2 dr phi^2) on the grid

  double energy() const { return k * k; }
  double potential(double r) const { return vnw_potential(k, A, r); }
  double wavefunction(double r) const { return vnw_wavefunction(k, A, r); }
};

inline VnwPotential vnw_build(double k, double a, const RadialGrid& rg) {
  if (!(k > 0)) throw ConfigError("vnw_build needs k > 0");
  if (a == 0 || !std::isfinite(a)) throw ConfigError("vnw_build needs a finite A != 0");
  VnwPotential m;
  m.k = k;
  m.A = a;
  m.grid = rg;
  m.v.resize(rg.size());
  m.phi.resize(rg.size());
  for (Eigen::Index i = 0; i < rg.size(); ++i) {
    m.v(i) = vnw_potential(k, a, rg.nodes(i));
    m.phi(i) = vnw_wavefunction(k, a, rg.nodes(i));
  }
  m.norm = std::sqrt(inner_product<double>(m.phi, m.phi, rg));
  return m;
}

// || -lap phi + V phi - E phi || / || phi || over the grid, two edge nodes dropped at each end
inline double vnw_verify(const VnwPotential& m, std::optional<double> energy = std::nullopt) {
  const double e = energy.value_or(m.energy());
  const auto& rg = m.grid;
  const Eigen::VectorXd r = -radial_laplacian(m.phi, rg) + m.v.cwiseProduct(m.phi) - e * m.phi;
  double num = 0, den = 0;
  for (Eigen::Index i = 2; i < rg.size() - 2; ++i) {
    num += rg.measure(i) * r(i) * r(i);
    den += rg.measure(i) * m.phi(i) * m.phi(i);
  }
  return std::sqrt(num / den);
}

// ---- separable model ---------------------------------------------------------------------

struct SeparableModel {
  MomentumGrid grid;
  Eigen::VectorXd g;                // form factor on the grid
  std::optional<Eigen::VectorXd> h;  // g = (K^2 - k^2) h when supplied in that form
  RadialFn<double> g_fn;             // g off the grid, when known
  double K = 0;
  double lambda = 0;
};

namespace detail {

// f / (K^2 - k^2) on the grid for f vanishing at K. Division is exact away from K;
// nodes with |K^2 - k^2| below 1e-6 K^2, where the zero of f is lost to roundoff, are filled
// from a least-squares quadratic through the two nearest nodes on each side.
inline Eigen::VectorXd divide_guarded(const Eigen::VectorXd& f, double kk, const MomentumGrid& grid) {
  const auto n = grid.size();
  const auto& p = grid.nodes;
  Eigen::VectorXd out(n);
  std::vector<Eigen::Index> inside, fit;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(kk * kk - p(i) * p(i)) < 1e-6 * kk * kk) {
      inside.push_back(i);
      continue;
    }
    out(i) = f(i) / (kk * kk - p(i) * p(i));
  }
  if (inside.empty()) return out;
  const Eigen::Index lo = inside.front(), hi = inside.back();
  for (Eigen::Index s = 1; s <= 2; ++s) {
    if (lo - s >= 0) fit.push_back(lo - s);
    if (hi + s < n) fit.push_back(hi + s);
  }
  if (fit.size() < 3) throw NormalizabilityError("separable model: too few nodes around K for the guard band");
  Eigen::MatrixXd a(fit.size(), 3);
  Eigen::VectorXd y(fit.size());
  for (std::size_t m = 0; m < fit.size(); ++m) {
    const double d = p(fit[m]) - kk;
    a(m, 0) = 1;
    a(m, 1) = d;
    a(m, 2) = d * d;
    y(m) = out(fit[m]);
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(y);
  for (auto i : inside) {
    const double d = p(i) - kk;
    out(i) = coef(0) + coef(1) * d + coef(2) * d * d;
  }
  return out;
}

inline void require_node_at_K(const Eigen::VectorXd& g, double kk, const MomentumGrid& grid) {
  const double gk = interpolate(grid, g, kk);
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if (!(std::abs(gk) <= 1e-8 * scale))
    throw NormalizabilityError("separable model: g(K) = " + std::to_string(gk) + " does not vanish");
}

}  // namespace detail

// lambda_c = 1 / int dmu(p) g(p)^2 / (K^2 - p^2)
inline double separable_tune(const Eigen::VectorXd& g, double kk, const MomentumGrid& grid,
                             const std::optional<Eigen::VectorXd>& h = std::nullopt) {
  if (g.size() != grid.size()) throw ShapeError("separable_tune: form factor does not match the grid");
  if (!(kk > 0) || !(kk < grid.cutoff)) throw ConfigError("separable_tune: K must lie in (0, cutoff)");
  detail::require_node_at_K(g, kk, grid);
  Eigen::VectorXd ratio;
  if (h) {
    if (h->size() != grid.size()) throw ShapeError("separable_tune: factored form does not match the grid");
    ratio = (kk * kk - grid.nodes.array().square()) * h->array().square();
  } else {
    ratio = detail::divide_guarded(g.cwiseProduct(g), kk, grid);
  }
  const double integral = grid.measure.dot(ratio);
  if (integral == 0 || !std::isfinite(integral)) throw NormalizabilityError("separable_tune: tuning integral vanishes");
  return 1 / integral;
}

// g(k) = (K^2 - k^2) h(k), tuned to the critical coupling
inline SeparableModel tuned_separable_model(const RadialFn<double>& h_fn, double kk, const MomentumGrid& grid) {
  SeparableModel m;
  m.grid = grid;
  m.K = kk;
  Eigen::VectorXd h(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) h(i) = h_fn(grid.nodes(i));
  m.g = (kk * kk - grid.nodes.array().square()) * h.array();
  m.h = h;
  m.g_fn = [h_fn, kk](double k) { return (kk * kk - k * k) * h_fn(k); };
  m.lambda = separable_tune(m.g, kk, grid, m.h);
  return m;
}

inline Kernel separable_kernel(const SeparableModel& m) {
  Kernel v;
  v.grid = m.grid;
  v.values = m.lambda * m.g * m.g.transpose();
  v.symmetry = Symmetry::symmetric;
  v.factors = LowRank<double>{m.lambda * m.g, m.g};
  if (m.g_fn) {
    auto g = m.g_fn;
    const double lam = m.lambda;
    v.continuation = [g, lam](double kp, double k) { return lam * g(kp) * g(k); };
  }
  return v;
}

// phi(p) = N g(p) / (K^2 - p^2) at E = K^2
inline BoundState separable_bic(const SeparableModel& m) {
  const double lc = separable_tune(m.g, m.K, m.grid, m.h);
  if (!(std::abs(m.lambda / lc - 1) <= 1e-6))
    throw NotABicError("separable_bic: coupling " + std::to_string(m.lambda) + " is not the critical value " +
                       std::to_string(lc));
  BoundState s;
  s.energy = m.K * m.K;
  s.phi = m.h ? *m.h : detail::divide_guarded(m.g, m.K, m.grid);
  normalize(s.phi, m.grid);
  s.normalized = true;
  return s;
}

// ---- local-potential oracles -------------------------------------------------------------

namespace detail {

// Numerov for u = r phi, u'' = (V - E) u from u(0) = 0; the number of sign changes of u and
// its final value
struct Shot {
  int nodes = 0;
  double last = 0;
};

inline Shot numerov_shot(const RadialFn<double>& v, double e, double r_max, int steps) {
  const double h = r_max / steps;
  const double h12 = h * h / 12;
  auto q = [&](double r) { return e - v(r); };
  double u0 = 0, u1 = h;
  double f0 = 1 + h12 * q(0), f1 = 1 + h12 * q(h);
  Shot s;
  for (int i = 1; i < steps; ++i) {
    const double r2 = (i + 1) * h;
    const double f2 = 1 + h12 * q(r2);
    const double u2 = (2 * u1 * (1 - 5 * h12 * q(i * h)) - f0 * u0) / f2;
    if ((u2 > 0) != (u1 > 0) && u2 != 0) ++s.nodes;
    u0 = u1;
    u1 = u2;
    f0 = f1;
    f1 = f2;
    // rescale to stay finite; only signs are used
    if (std::abs(u1) > 1e100) {
      u0 *= 1e-100;
      u1 *= 1e-100;
    }
  }
  s.last = u1;
  return s;
}

}  // namespace detail

// lowest E < 0 of -u'' + V u = E u by node-count bisection; empty when none exists
inline std::optional<double> local_bound_energy(const RadialFn<double>& v, double r_max = 10.0, int steps = 20000) {
  double lo = 0;
  for (int i = 0; i <= steps; ++i) lo = std::min(lo, v(r_max * i / steps));
  if (!(lo < 0)) return std::nullopt;
  double hi = -1e-12;
  if (detail::numerov_shot(v, hi, r_max, steps).nodes == 0) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = (lo + hi) / 2;
    if (detail::numerov_shot(v, mid, r_max, steps).nodes == 0)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2;
}

// variable-phase equation delta' = -V(r) sin^2(kr + delta) / k, RK4 from delta(0) = 0; the
// result is continuous in k with delta -> 0 at high momentum
inline double local_phase_shift(const RadialFn<double>& v, double k, double r_max = 10.0, int steps = 20000) {
  if (!(k > 0)) throw ConfigError("local_phase_shift needs k > 0");
  const double h = r_max / steps;
  auto rhs = [&](double r, double d) {
    const double s = std::sin(k * r + d);
    return -v(r) * s * s / k;
  };
  double d = 0;
  for (int i = 0; i < steps; ++i) {
    const double r = i * h;
    const double k1 = rhs(r, d);
    const double k2 = rhs(r + h / 2, d + h / 2 * k1);
    const double k3 = rhs(r + h / 2, d + h / 2 * k2);
    const double k4 = rhs(r + h, d + h * k3);
    d += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return d;
}

}  // namespace bicforge
