#pragma once

#include <cmath>
#include <algorithm>
#include <complex>
#include <numbers>
#include <sstream>
#include <type_traits>
#include <vector>

#include <Eigen/LU>

#include "kernels.hpp"

namespace bicforge {

// density of states k / (2 (2 pi)^3)
template <class Real>
Real density_of_states(Real k) {
  return k / (2 * two_pi_cubed<Real>());
}

// P int_0^Lambda dp / (k^2 - p^2)
template <class Real>
Real pv_log_term(Real k, Real cutoff) {
  using std::log;
  return log((cutoff + k) / (cutoff - k)) / (2 * k);
}

// Weights a_i with P int_0^Lambda dp f(p) / (k_j^2 - p^2) ~ sum_i a_i f(p_i) for an on-shell
// momentum sitting on node j. Off the diagonal, the Gauss weight is corrected by the barycentric
// weight ratio so that the rule integrates the subtracted integrand without knowing f between nodes.
template <class Real>
Vec<Real> pv_node_weights(const basic_momentum_grid<Real>& g, Eigen::Index j) {
  const auto n = g.size();
  Vec<Real> a(n);
  const Real kj2 = g.nodes(j) * g.nodes(j);
  Real sum(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == j) continue;
    a(i) = (g.wx(i) - g.wx(j) * g.bary(i) / g.bary(j)) * g.jacobian(i) / (kj2 - g.nodes(i) * g.nodes(i));
    sum += a(i);
  }
  a(j) = pv_log_term(g.nodes(j), g.cutoff) - sum;
  return a;
}

template <class Real>
struct basic_scattering_solution {
  Real k{};                    // on-shell momentum
  Vec<Real> half_on_shell_K;   // K(k_i, k) on the grid nodes
  Real on_shell_K{};           // K(k, k)
  Eigen::VectorXcd half_on_shell_T;
  std::complex<double> on_shell_t;
  Real delta{};                // principal branch, (-pi/2, pi/2)
  Real rho{};
};

using ScatteringSolution = basic_scattering_solution<double>;

template <class Real>
struct basic_phase_shift_curve {
  Vec<Real> momenta;
  Vec<Real> delta;  // unwrapped, continuous down from the largest momentum
  Real delta0{};
  Real delta_inf{};
};

using PhaseShiftCurve = basic_phase_shift_curve<double>;

namespace detail {

template <class Real>
std::string k_label(Real k) {
  std::ostringstream os;
  os.precision(17);
  os << static_cast<double>(k);
  return os.str();
}

template <class Real>
Vec<Real> solve_standing_wave(const Mat<Real>& v, const Vec<Real>& q, Eigen::Index on, Real k_on) {
  using std::abs;
  using std::isfinite;
  const auto m = v.rows();
  Mat<Real> a = -(v * q.asDiagonal());
  a.diagonal().array() += Real(1);
  const Vec<Real> b = v.col(on);
  Vec<Real> x;
  if constexpr (std::is_same_v<Real, double>) {
    Eigen::PartialPivLU<Mat<Real>> lu(a);
    if (!(lu.rcond() > 16 * Eigen::NumTraits<double>::epsilon()))
      throw SolverError("solve_k_matrix: singular system at k_on = " + k_label(k_on));
    x = lu.solve(b);
  } else {
    // double factorization, residuals in Real
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a.template cast<double>());
    if (!(lu.rcond() > 16 * Eigen::NumTraits<double>::epsilon()))
      throw SolverError("solve_k_matrix: singular system at k_on = " + k_label(k_on));
    x = lu.solve(b.template cast<double>()).template cast<Real>();
    const Real tol = 64 * Eigen::NumTraits<Real>::epsilon();
    bool converged = false;
    Real last = Eigen::NumTraits<Real>::highest();
    for (int it = 0; it < 40 && !converged; ++it) {
      Vec<Real> r = b - a * x;
      Vec<Real> dx = lu.solve(r.template cast<double>()).template cast<Real>();
      x += dx;
      Real step = dx.cwiseAbs().maxCoeff();
      // stop at the working-precision floor or once corrections stop shrinking
      converged = step <= tol * x.cwiseAbs().maxCoeff() || (it > 0 && step > last / 4 && step < Real(1e-20) * x.cwiseAbs().maxCoeff());
      last = step;
    }
    if (!converged) x = Eigen::PartialPivLU<Mat<Real>>(a).solve(b);
  }
  for (Eigen::Index i = 0; i < m; ++i)
    if (!isfinite(x(i))) throw SolverError("solve_k_matrix: non-finite solution at k_on = " + k_label(k_on));
  return x;
}

template <class Real>
void fill_on_shell(basic_scattering_solution<Real>& s) {
  using std::atan;
  const Real pi = pi_v<Real>();
  s.rho = density_of_states(s.k);
  const Real x = pi * s.rho * s.on_shell_K;
  s.delta = atan(-x);
  // T = K / (1 + i x), formed in Real before narrowing
  const Real den = 1 + x * x;
  s.half_on_shell_T.resize(s.half_on_shell_K.size());
  for (Eigen::Index i = 0; i < s.half_on_shell_K.size(); ++i) {
    Real re = s.half_on_shell_K(i) / den;
    Real im = -s.half_on_shell_K(i) * x / den;
    s.half_on_shell_T(i) = {static_cast<double>(re), static_cast<double>(im)};
  }
  s.on_shell_t = {static_cast<double>(s.on_shell_K / den), static_cast<double>(-s.on_shell_K * x / den)};
}

template <class Real>
Eigen::Index matching_node(const basic_momentum_grid<Real>& g, Real k_on) {
  using std::abs;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (abs(k_on - g.nodes(i)) <= Real(1e-6) * g.nodes(i)) return i;
  return -1;
}

}  // namespace detail

// Column of the real half-on-shell K-matrix with the on-shell point on grid node j.
template <class Real>
basic_scattering_solution<Real> solve_k_matrix_at_node(const basic_kernel<Real>& v, Eigen::Index j) {
  const auto& g = v.grid;
  const Vec<Real> a = pv_node_weights(g, j);
  const Vec<Real> q = g.nodes.array().square() * a.array() / two_pi_cubed<Real>();
  basic_scattering_solution<Real> s;
  s.k = g.nodes(j);
  s.half_on_shell_K = detail::solve_standing_wave(v.values, q, j, s.k);
  s.on_shell_K = s.half_on_shell_K(j);
  detail::fill_on_shell(s);
  return s;
}

// Standing-wave Lippmann-Schwinger solve with the on-shell momentum appended to the grid as an
// extra node. Needs the kernel continuation for the appended row and column; an on-shell
// momentum that coincides with a node uses the node rule instead.
template <class Real>
basic_scattering_solution<Real> solve_k_matrix(const basic_kernel<Real>& v, Real k_on) {
  const auto& g = v.grid;
  if (!(k_on > 0) || !(k_on < g.cutoff))
    throw ConfigError("solve_k_matrix: k_on must lie in (0, cutoff), got " + detail::k_label(k_on));
  if (auto j = detail::matching_node(g, k_on); j >= 0) return solve_k_matrix_at_node(v, j);
  if (!v.continuation)
    throw SolverError("solve_k_matrix: kernel has no off-grid continuation, k_on = " + detail::k_label(k_on) +
                      " is not a grid node");
  const auto n = g.size();
  Mat<Real> va(n + 1, n + 1);
  va.topLeftCorner(n, n) = v.values;
  for (Eigen::Index i = 0; i < n; ++i) {
    va(i, n) = v.continuation(g.nodes(i), k_on);
    va(n, i) = v.continuation(k_on, g.nodes(i));
  }
  va(n, n) = v.continuation(k_on, k_on);
  Vec<Real> q(n + 1);
  const Real k2 = k_on * k_on;
  const Real norm = two_pi_cubed<Real>();
  Real sum(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Real p2 = g.nodes(i) * g.nodes(i);
    Real ai = g.weights(i) / (k2 - p2);
    sum += ai;
    q(i) = p2 * ai / norm;
  }
  q(n) = k2 * (pv_log_term(k_on, g.cutoff) - sum) / norm;
  Vec<Real> x = detail::solve_standing_wave(va, q, n, k_on);
  basic_scattering_solution<Real> s;
  s.k = k_on;
  s.half_on_shell_K = x.head(n);
  s.on_shell_K = x(n);
  detail::fill_on_shell(s);
  return s;
}

// K(k_i, k_j), column j solved with k_j on shell
template <class Real>
Mat<Real> half_on_shell_K_matrix(const basic_kernel<Real>& v) {
  if (!is_numerically_symmetric<Real>(v.values)) throw ContractError("half_on_shell_K_matrix: kernel is not symmetric");
  const auto n = v.size();
  Mat<Real> k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) k.col(j) = solve_k_matrix_at_node(v, j).half_on_shell_K;
  return k;
}

// Heitler conversion T = K / (1 + i pi rho_k K(k, k)) column by column, in Real before narrowing
template <class Real>
Eigen::MatrixXcd k_to_t_matrix(const Mat<Real>& k, const basic_momentum_grid<Real>& g) {
  const auto n = k.rows();
  const Real pi = pi_v<Real>();
  Eigen::MatrixXcd t(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Real x = pi * density_of_states(g.nodes(j)) * k(j, j);
    Real den = 1 + x * x;
    for (Eigen::Index i = 0; i < n; ++i)
      t(i, j) = {static_cast<double>(k(i, j) / den), static_cast<double>(-k(i, j) * x / den)};
  }
  return t;
}

template <class Real>
Eigen::MatrixXcd half_on_shell_T_matrix(const basic_kernel<Real>& v) {
  return k_to_t_matrix(half_on_shell_K_matrix(v), v.grid);
}

// -(1 / pi rho_k) e^{i delta} sin delta
inline std::complex<double> t_from_phase(double k, double delta) {
  const double rho = density_of_states(k);
  return -std::polar(1.0, delta) * std::sin(delta) / (std::numbers::pi * rho);
}

template <class Real>
Vec<Real> phase_sample_momenta(const basic_kernel<Real>& v, int samples) {
  using std::exp;
  using std::log;
  const auto& g = v.grid;
  const Real lo(0.01), hi = Real(0.75) * g.cutoff;
  Vec<Real> k(samples);
  for (int i = 0; i < samples; ++i) k(i) = exp(log(lo) + (log(hi) - log(lo)) * Real(i) / Real(samples - 1));
  if (v.continuation) return k;
  // sample-only kernels: nearest distinct grid nodes
  std::vector<Real> picked;
  for (int i = 0; i < samples; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < g.size(); ++j) {
      using std::abs;
      if (abs(log(g.nodes(j) / k(i))) < abs(log(g.nodes(best) / k(i)))) best = j;
    }
    if (picked.empty() || picked.back() != g.nodes(best)) picked.push_back(g.nodes(best));
  }
  return Eigen::Map<Vec<Real>>(picked.data(), static_cast<Eigen::Index>(picked.size()));
}

template <class Real>
basic_phase_shift_curve<Real> unwrap_phase(Vec<Real> momenta, Vec<Real> delta) {
  const Real pi = pi_v<Real>();
  const auto m = delta.size();
  for (Eigen::Index i = m - 2; i >= 0; --i) {
    while (delta(i) - delta(i + 1) > pi / 2) delta(i) -= pi;
    while (delta(i) - delta(i + 1) < -pi / 2) delta(i) += pi;
  }
  basic_phase_shift_curve<Real> c;
  // quadratic through the three smallest momenta, evaluated at k = 0
  const Real k0 = momenta(0), k1 = momenta(1), k2 = momenta(2);
  c.delta0 = delta(0) * k1 * k2 / ((k0 - k1) * (k0 - k2)) + delta(1) * k0 * k2 / ((k1 - k0) * (k1 - k2)) +
             delta(2) * k0 * k1 / ((k2 - k0) * (k2 - k1));
  // the high-momentum tail falls off like 1/k: quadratic in u = 1/k through the three largest
  // momenta, evaluated at u = 0
  const Real u0 = 1 / momenta(m - 1), u1 = 1 / momenta(m - 2), u2 = 1 / momenta(m - 3);
  c.delta_inf = delta(m - 1) * u1 * u2 / ((u0 - u1) * (u0 - u2)) +
                delta(m - 2) * u0 * u2 / ((u1 - u0) * (u1 - u2)) + delta(m - 3) * u0 * u1 / ((u2 - u0) * (u2 - u1));
  c.momenta = std::move(momenta);
  c.delta = std::move(delta);
  return c;
}

template <class Real>
basic_phase_shift_curve<Real> phase_curve(const basic_kernel<Real>& v, int samples = 64) {
  if (samples < 16) throw ConfigError("phase_curve needs at least 16 samples");
  Vec<Real> k = phase_sample_momenta(v, samples);
  if (k.size() < 3) throw ConfigError("phase_curve: too few distinct sample momenta");
  Vec<Real> d(k.size());
  for (Eigen::Index i = 0; i < k.size(); ++i) d(i) = solve_k_matrix(v, k(i)).delta;
  return unwrap_phase(std::move(k), std::move(d));
}

// Double-exponential rule for integrals over the on-shell label of T(k', p), run in the
// Gauss-Legendre variable x of the grid map so that nodes follow the grid's clustering. T inherits
// a ln(Lambda - p) dependence from the principal-value log term, which the endpoint clustering
// resolves. The offset is chosen to keep the nodes away from grid nodes, where the subtracted
// integrand cancels.
struct OnShellQuadrature {
  Eigen::VectorXd momenta;
  Eigen::VectorXd weights;
  double separation = 0;  // min |p_m - k_i| / k_i over label and grid nodes
};

inline OnShellQuadrature on_shell_quadrature(const MomentumGrid& g, double h = 0.0125) {
  const double lam = g.cutoff, c = g.map_scale;
  const double a = 2 * c / lam;
  const double hp = std::numbers::pi / 2;
  const int m_max = static_cast<int>(std::ceil(4.0 / h));
  OnShellQuadrature best;
  best.separation = -1;
  for (int s = 0; s < 8; ++s) {
    OnShellQuadrature q;
    q.separation = 1;
    std::vector<double> p, w;
    const double off = h * s / 8.0;
    for (int m = -m_max; m <= m_max; ++m) {
      const double t = m * h + off;
      const double u = hp * std::sinh(t);
      const double cu = std::cosh(u);
      const double wx = hp * std::cosh(t) / (cu * cu) * h;
      // distance of x to the nearer end of [-1, 1], formed without cancellation
      const double gap = 2 / (1 + std::exp(2 * std::abs(u)));
      double pm, jac, ends;
      if (u > 0) {
        pm = c * (2 - gap) / (gap + a);
        jac = c * (2 + a) / ((gap + a) * (gap + a));
        ends = c * gap * (2 + a) / (a * (gap + a));  // Lambda - p
      } else {
        pm = c * gap / (2 - gap + a);
        jac = c * (2 + a) / ((2 - gap + a) * (2 - gap + a));
        ends = pm;
      }
      const double wt = wx * jac;
      if (ends < 1e-9 * lam || !(wt > 0)) continue;
      p.push_back(pm);
      w.push_back(wt);
      for (Eigen::Index i = 0; i < g.size(); ++i)
        q.separation = std::min(q.separation, std::abs(pm - g.nodes(i)) / g.nodes(i));
    }
    if (q.separation > best.separation) {
      q.momenta = Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
      q.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      best = std::move(q);
    }
  }
  return best;
}

// T(k_i, p_m) with each label momentum p_m on shell. Columns far below the smallest grid node
// are left zero: the p^2 measure suppresses them, and a zero-energy state makes their
// equations singular.
struct OnShellSamples {
  OnShellQuadrature quadrature;
  Eigen::MatrixXcd t;
};

inline OnShellSamples on_shell_samples(const Kernel& v, double h = 0.0125) {
  if (!v.continuation) throw SolverError("on_shell_samples: kernel has no off-grid continuation");
  OnShellSamples s;
  s.quadrature = on_shell_quadrature(v.grid, h);
  const auto m = s.quadrature.momenta.size();
  s.t.resize(v.size(), m);
  const double floor = 1e-3 * v.grid.nodes(0);
  for (Eigen::Index j = 0; j < m; ++j)
    s.t.col(j) = s.quadrature.momenta(j) < floor ? Eigen::VectorXcd::Zero(v.size())
                                                 : solve_k_matrix(v, s.quadrature.momenta(j)).half_on_shell_T;
  return s;
}

}  // namespace bicforge
