#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kernels.hpp"

namespace bicforge {

template <class Real>
struct basic_bound_state {
  Real energy{};  // fm^-2, any sign
  Vec<Real> phi;  // phi(k_i)
  bool normalized = false;
  // phi(k) at arbitrary momenta; empty when unavailable
  RadialFn<Real> continuation;
};

using BoundState = basic_bound_state<double>;

// eigenvalues above this are treated as continuum in the negative-energy spectrum
template <class Real>
inline Real bound_energy_threshold() {
  return Real(-1e-9);
}

template <class Real>
void fix_sign(Vec<Real>& phi) {
  using std::abs;
  if (phi.size() == 0) return;
  Real big = phi.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < phi.size(); ++i)
    if (abs(phi(i)) > Real(1e-8) * big) {
      if (phi(i) < 0) phi = -phi;
      return;
    }
}

template <class Real>
Real measure_norm(const Vec<Real>& f, const basic_momentum_grid<Real>& grid) {
  using std::sqrt;
  return sqrt(inner_product(f, f, grid));
}

template <class Real>
void normalize(Vec<Real>& phi, const basic_momentum_grid<Real>& grid) {
  phi /= measure_norm(phi, grid);
  fix_sign(phi);
}

// (k^2 + V - E) phi in the grid measure
template <class Real>
Real schrodinger_residual(const basic_kernel<Real>& v, const Vec<Real>& phi, Real energy) {
  if (phi.size() != v.size()) throw ShapeError("schrodinger_residual: state does not match the kernel grid");
  const auto& g = v.grid;
  Vec<Real> r = g.nodes.array().square() * phi.array() - energy * phi.array();
  r.noalias() += v.values * g.measure.cwiseProduct(phi);
  return measure_norm(r, g);
}

template <class Real>
Real schrodinger_residual(const basic_kernel<Real>& v, const basic_bound_state<Real>& s) {
  return schrodinger_residual(v, s.phi, s.energy);
}

// phi(k) = int dmu(p) V(k, p) phi(p) / (E - k^2), valid off the grid for E < 0
template <class Real>
RadialFn<Real> nystrom_continuation(const basic_kernel<Real>& v, const Vec<Real>& phi, Real energy) {
  if (!v.continuation || !(energy < 0)) return {};
  auto fv = v.continuation;
  Vec<Real> p = v.grid.nodes;
  Vec<Real> mphi = v.grid.measure.cwiseProduct(phi);
  return [fv, p, mphi, energy](Real k) {
    Real s(0);
    for (Eigen::Index j = 0; j < p.size(); ++j) s += fv(k, p(j)) * mphi(j);
    return s / (energy - k * k);
  };
}

template <class Real>
std::vector<basic_bound_state<Real>> negative_energy_states(const basic_kernel<Real>& v) {
  using std::sqrt;
  const auto& g = v.grid;
  const auto n = v.size();
  if (v.symmetry != Symmetry::symmetric || !is_numerically_symmetric<Real>(v.values))
    throw ContractError("negative_energy_states: kernel is not symmetric");
  const Vec<Real> s = g.measure.cwiseSqrt();
  Mat<Real> h = s.asDiagonal() * v.values * s.asDiagonal();
  h.diagonal() += g.nodes.array().square().matrix();
  h = (h + h.transpose()).eval() / 2;
  Eigen::SelfAdjointEigenSolver<Mat<Real>> es(h);
  if (es.info() != Eigen::Success) throw SolverError("negative_energy_states: eigensolver failed");
  std::vector<basic_bound_state<Real>> out;
  const Vec<Real> k2 = g.nodes.array().square();
  for (Eigen::Index m = 0; m < n; ++m) {
    Real e = es.eigenvalues()(m);
    if (!(e < bound_energy_threshold<Real>())) break;
    Vec<Real> phi = es.eigenvectors().col(m).cwiseQuotient(s);
    normalize(phi, g);
    // Nystrom back-substitution restores relative accuracy where phi is tiny
    for (int it = 0; it < 2; ++it) {
      Vec<Real> t = v.values * g.measure.cwiseProduct(phi);
      phi = t.array() / (e - k2.array());
      normalize(phi, g);
      Vec<Real> hp = k2.cwiseProduct(phi) + v.values * g.measure.cwiseProduct(phi);
      e = inner_product(phi, hp, g);
    }
    basic_bound_state<Real> st;
    st.energy = e;
    st.phi = phi;
    st.normalized = true;
    st.continuation = nystrom_continuation(v, phi, e);
    out.push_back(std::move(st));
  }
  return out;
}

// |E| below this counts as a threshold state
inline constexpr double threshold_state_band = 1e-9;

template <class Real>
bool has_threshold_state(const basic_kernel<Real>& v) {
  const auto& g = v.grid;
  const Vec<Real> s = g.measure.cwiseSqrt();
  Mat<Real> h = s.asDiagonal() * v.values * s.asDiagonal();
  h.diagonal() += g.nodes.array().square().matrix();
  h = (h + h.transpose()).eval() / 2;
  Eigen::SelfAdjointEigenSolver<Mat<Real>> es(h, Eigen::EigenvaluesOnly);
  return (es.eigenvalues().array().abs() <= threshold_state_band).any();
}

}  // namespace bicforge
