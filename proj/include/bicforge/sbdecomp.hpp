#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "scattering.hpp"
#include "spectral.hpp"

namespace bicforge {

struct SBDecomposition {
  Kernel V_S;
  Kernel V_B;
  std::vector<BoundState> bound_list;  // negative-energy states first, then BICs
};

struct BicSignature {
  int origin_sign = 0;  // sign of V_B(0, 0), 0 when it vanishes to tolerance
  double origin_value = 0;
  std::vector<double> node_momenta;  // sign changes of k' -> V_B(k', k_min)
};

struct BicExtraction {
  std::vector<BoundState> states;  // energy = K^2
  Eigen::VectorXd singular_values;  // of the weighted V_B+ remainder
  int rank = 0;
  double residual = 0;  // relative Hilbert-Schmidt error of the rank-r factorization
};

struct ABResiduals {
  double a = 0;
  double b = 0;
};

inline Eigen::MatrixXd gram_matrix(const std::vector<BoundState>& states, const MomentumGrid& g) {
  const auto m = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd gm(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) gm(i, j) = inner_product(states[i].phi, states[j].phi, g);
  return gm;
}

// modified Gram-Schmidt in the grid measure; energies are kept
inline std::vector<BoundState> orthonormalize(std::vector<BoundState> states, const MomentumGrid& g) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) states[i].phi -= inner_product(states[j].phi, states[i].phi, g) * states[j].phi;
    double nrm = measure_norm(states[i].phi, g);
    if (!(nrm > 1e-12)) throw ContractError("orthonormalize: linearly dependent states");
    states[i].phi /= nrm;
    states[i].normalized = true;
    if (i > 0) states[i].continuation = {};
  }
  return states;
}

// V_B(k', k) = sum_i (E_i - k'^2) phi_i(k') phi_i(k)
inline Kernel build_v_b(const std::vector<BoundState>& states, const MomentumGrid& g) {
  const auto n = g.size();
  const auto m = static_cast<Eigen::Index>(states.size());
  for (const auto& s : states)
    if (s.phi.size() != n) throw ShapeError("build_v_b: state does not match the grid");
  if (m > 0) {
    Eigen::MatrixXd gm = gram_matrix(states, g);
    if ((gm - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-8)
      throw ContractError("build_v_b: states are not orthonormal to 1e-8");
  }
  LowRank<double> f;
  f.left.resize(n, m);
  f.right.resize(n, m);
  const Eigen::VectorXd k2 = g.nodes.array().square();
  for (Eigen::Index i = 0; i < m; ++i) {
    f.left.col(i) = (states[i].energy - k2.array()) * states[i].phi.array();
    f.right.col(i) = states[i].phi;
  }
  Kernel v;
  v.grid = g;
  v.values = m > 0 ? Eigen::MatrixXd(f.left * f.right.transpose()) : Eigen::MatrixXd::Zero(n, n);
  v.symmetry = Symmetry::general;
  v.factors = std::move(f);
  return v;
}

namespace detail {

// T(k', k) + int p^2 dp/(2pi)^3 T(k', p) T*(k, p) [P/(p^2 - k^2) + i pi delta(p^2 - k^2)],
// on-shell label integral by the grid node rule
inline Eigen::MatrixXcd v_s_complex(const Eigen::MatrixXcd& t, const MomentumGrid& g) {
  const auto n = g.size();
  if (t.rows() != n || t.cols() != n) throw ShapeError("v_s_from_T: T does not match the grid");
  const double pi = std::numbers::pi;
  const Eigen::VectorXd p2w = g.nodes.array().square() / two_pi_cubed<double>();
  Eigen::MatrixXcd vs(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd a = pv_node_weights(g, j).cwiseProduct(p2w);
    Eigen::VectorXcd c = a.cast<std::complex<double>>().cwiseProduct(t.row(j).conjugate().transpose());
    const std::complex<double> onshell(0, pi * density_of_states(g.nodes(j)));
    vs.col(j) = t.col(j) - t * c + onshell * std::conj(t(j, j)) * t.col(j);
  }
  return vs;
}

// same, with the label integral on a dedicated rule and the on-shell value subtracted
inline Eigen::MatrixXcd v_s_complex(const Eigen::MatrixXcd& t, const OnShellSamples& s, const MomentumGrid& g) {
  const auto n = g.size();
  if (t.rows() != n || t.cols() != n || s.t.rows() != n) throw ShapeError("v_s_from_T: T does not match the grid");
  const double pi = std::numbers::pi;
  const double norm = two_pi_cubed<double>();
  const auto& p = s.quadrature.momenta;
  const auto& w = s.quadrature.weights;
  const Eigen::ArrayXd p2 = p.array().square();
  Eigen::MatrixXcd vs(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double k = g.nodes(j), k2 = k * k;
    const Eigen::ArrayXd d = w.array() / (k2 - p2);
    Eigen::VectorXcd c = (p2 * d).cast<std::complex<double>>().matrix().cwiseProduct(s.t.row(j).conjugate().transpose());
    const std::complex<double> fk = k2 * std::conj(t(j, j));
    const double sub = pv_log_term(k, g.cutoff) - d.sum();
    Eigen::VectorXcd pv = s.t * c + (sub * fk) * t.col(j);
    const std::complex<double> onshell(0, pi * density_of_states(k));
    vs.col(j) = t.col(j) - pv / norm + onshell * std::conj(t(j, j)) * t.col(j);
  }
  return vs;
}

// X = Omega_+^dagger T with the resolvent pole at the row momentum
inline Eigen::MatrixXcd omega_dagger_t(const Eigen::MatrixXcd& t, const MomentumGrid& g) {
  const auto n = g.size();
  const double pi = std::numbers::pi;
  const Eigen::VectorXd p2w = g.nodes.array().square() / two_pi_cubed<double>();
  Eigen::MatrixXcd x(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd a = pv_node_weights(g, i).cwiseProduct(p2w);
    Eigen::RowVectorXcd c = (a.cast<std::complex<double>>().cwiseProduct(t.col(i).conjugate())).transpose();
    const std::complex<double> onshell(0, pi * density_of_states(g.nodes(i)));
    x.row(i) = t.row(i) + c * t + onshell * std::conj(t(i, i)) * t.row(i);
  }
  return x;
}

inline double weighted_hs_norm(const Eigen::MatrixXcd& m, const MomentumGrid& g) {
  const Eigen::VectorXd s = g.measure.cwiseSqrt();
  return (s.asDiagonal() * m * s.asDiagonal()).norm();
}

}  // namespace detail

namespace detail {

inline Kernel real_v_s(const Eigen::MatrixXcd& vs, const Eigen::MatrixXcd& t, const MomentumGrid& g) {
  Kernel out;
  out.grid = g;
  out.symmetry = Symmetry::general;
  out.values = vs.real();
  const double scale = t.size() ? t.cwiseAbs().maxCoeff() : 0.0;
  const double im = vs.size() ? vs.imag().cwiseAbs().maxCoeff() : 0.0;
  if (im > 1e-8 * std::max(scale, 1.0))
    throw ConsistencyError("v_s_from_T: imaginary residue " + std::to_string(im) + " exceeds tolerance");
  return out;
}

}  // namespace detail

// V_S from T on the grid columns alone. Loses accuracy in the last columns before the cutoff;
// prefer the overload with on-shell samples when the kernel has a continuation.
inline Kernel v_s_from_T(const Eigen::MatrixXcd& t, const MomentumGrid& g) {
  return detail::real_v_s(detail::v_s_complex(t, g), t, g);
}

inline Kernel v_s_from_T(const Eigen::MatrixXcd& t, const OnShellSamples& s, const MomentumGrid& g) {
  return detail::real_v_s(detail::v_s_complex(t, s, g), t, g);
}

// V0 + (E_new - E0) |phi><phi|
inline Kernel energy_shift(const Kernel& v0, const BoundState& phi, double e_new) {
  if (!(schrodinger_residual(v0, phi) <= 1e-6))
    throw ContractError("energy_shift: state is not an eigenstate of the base kernel");
  return rank_one_update(v0, phi.phi, phi.phi, e_new - phi.energy, phi.continuation, phi.continuation);
}

// V0 + P_S (strength A) P_S with P_S = 1 - |phi><phi|
inline Kernel s_space_perturb(const Kernel& v0, const BoundState& phi, const Kernel& a, double strength) {
  const auto& g = v0.grid;
  if (a.size() != v0.size() || phi.phi.size() != v0.size()) throw ShapeError("s_space_perturb: grid mismatch");
  if (strength == 0) return v0;
  const Eigen::VectorXd& f = phi.phi;
  const Eigen::VectorXd mf = g.measure.cwiseProduct(f);
  const Eigen::VectorXd af = a.values * mf;  // (A phi)(k)
  const double faf = mf.dot(af);
  Eigen::MatrixXd p = a.values - f * af.transpose() - af * f.transpose() + faf * f * f.transpose();
  Kernel out = v0;
  out.factors.reset();
  out.values = v0.values + strength * p;
  out.values = (out.values + out.values.transpose()).eval() / 2;
  out.symmetry = (v0.symmetry == Symmetry::symmetric && a.symmetry == Symmetry::symmetric) ? Symmetry::symmetric
                                                                                          : Symmetry::general;
  if (v0.continuation && a.continuation && phi.continuation) {
    auto fv = v0.continuation, fa = a.continuation;
    auto fp = phi.continuation;
    Eigen::VectorXd nodes = g.nodes;
    auto a_phi = [fa, nodes, mf](double k) {
      double s = 0;
      for (Eigen::Index j = 0; j < nodes.size(); ++j) s += fa(k, nodes(j)) * mf(j);
      return s;
    };
    out.continuation = [fv, fa, fp, a_phi, faf, strength](double kp, double k) {
      double pp = fp(kp), pk = fp(k);
      return fv(kp, k) + strength * (fa(kp, k) - pp * a_phi(k) - a_phi(kp) * pk + faf * pp * pk);
    };
  } else {
    out.continuation = {};
  }
  return out;
}

namespace detail {

inline double quadratic_at(double x, const double* xs, const double* ys) {
  double s = 0;
  for (int a = 0; a < 3; ++a) {
    double l = 1;
    for (int b = 0; b < 3; ++b)
      if (b != a) l *= (x - xs[b]) / (xs[a] - xs[b]);
    s += ys[a] * l;
  }
  return s;
}

// zero of the quadratic through three samples inside [lo, hi], linear fallback
inline double bracketed_zero(const double* xs, const double* ys, double lo, double hi, double ylo, double yhi) {
  double x = lo - ylo * (hi - lo) / (yhi - ylo);
  for (int it = 0; it < 60; ++it) {
    double fx = quadratic_at(x, xs, ys);
    if ((fx < 0) == (ylo < 0)) {
      lo = x;
      ylo = fx;
    } else {
      hi = x;
      yhi = fx;
    }
    x = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * hi) break;
  }
  return x;
}

}  // namespace detail

// Significant sign changes of a sampled profile: samples below floor * max|y| do not count.
inline std::vector<double> profile_zeros(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double floor = 1e-6) {
  std::vector<double> zeros;
  const auto n = y.size();
  if (n < 3) return zeros;
  const double cut = floor * y.cwiseAbs().maxCoeff();
  Eigen::Index prev = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(y(i)) < cut) continue;
    if (prev >= 0 && (y(i) < 0) != (y(prev) < 0)) {
      // the raw flip between prev and i
      Eigen::Index a = prev;
      while (a + 1 < i && (y(a + 1) < 0) == (y(prev) < 0)) ++a;
      // three nodes a, a+1, a+2 or a-1, a, a+1, whichever is tighter
      Eigen::Index s = a;
      if (a + 2 >= n || (a > 0 && x(a + 1) - x(a - 1) < x(a + 2) - x(a))) s = a - 1;
      double xs[3] = {x(s), x(s + 1), x(s + 2)}, ys[3] = {y(s), y(s + 1), y(s + 2)};
      zeros.push_back(detail::bracketed_zero(xs, ys, x(a), x(a + 1), y(a), y(a + 1)));
    }
    prev = i;
  }
  return zeros;
}

inline BicSignature detect_bic_signature(const Kernel& vb) {
  const auto& g = vb.grid;
  BicSignature sig;
  if (vb.size() < 3) return sig;
  // V_B(0, k_c) for the three smallest k by quadratic extrapolation in k', then in k
  double x0[3] = {g.nodes(0), g.nodes(1), g.nodes(2)};
  double cols[3];
  for (int c = 0; c < 3; ++c) {
    double ys[3] = {vb.values(0, c), vb.values(1, c), vb.values(2, c)};
    cols[c] = detail::quadratic_at(0.0, x0, ys);
  }
  sig.origin_value = detail::quadratic_at(0.0, x0, cols);
  const double scale = vb.values.cwiseAbs().maxCoeff();
  if (std::abs(sig.origin_value) > 1e-8 * scale) sig.origin_sign = sig.origin_value > 0 ? 1 : -1;
  sig.node_momenta = profile_zeros(g.nodes, vb.values.col(0));
  return sig;
}

// Factor V_B - V_B- = sum_i (K_i^2 - k'^2) phi_i(k') phi_i(k). The right singular vectors span the
// phi_i; K_i^2 and phi_i are the eigenpairs of the remainder projected onto that span.
inline BicExtraction extract_bics(const Kernel& vb, const std::vector<BoundState>& negatives, int expected = -1,
                                  double threshold = 1e-6, int max_rank = 8) {
  const auto& g = vb.grid;
  const auto n = g.size();
  BicExtraction out;
  Eigen::MatrixXd r = vb.values;
  if (!negatives.empty()) r -= build_v_b(negatives, g).values;
  const Eigen::VectorXd s = g.measure.cwiseSqrt();
  Eigen::MatrixXd rt = s.asDiagonal() * r * s.asDiagonal();
  const double scale = (s.asDiagonal() * vb.values * s.asDiagonal()).norm();
  // the remainder counts only when it stands out against V_B itself
  Eigen::BDCSVD<Eigen::MatrixXd> svd(rt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  const double s0 = out.singular_values.size() ? out.singular_values(0) : 0.0;
  if (!(s0 > threshold * scale)) {
    if (expected > 0) throw ExtractionError("extract_bics: remainder vanishes, expected " + std::to_string(expected));
    return out;
  }
  int rank = 0;
  while (rank < out.singular_values.size() && out.singular_values(rank) > threshold * s0) ++rank;
  if (rank > max_rank)
    throw ExtractionError("extract_bics: remainder is not numerically low-rank (rank " + std::to_string(rank) + ")");
  if (expected >= 0 && rank != expected)
    throw ExtractionError("extract_bics: remainder rank " + std::to_string(rank) + " differs from expected " +
                          std::to_string(expected));
  out.rank = rank;
  const Eigen::MatrixXd vr = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd k2 = g.nodes.array().square();
  Eigen::MatrixXd m = vr.transpose() * (rt * vr + k2.asDiagonal() * vr);
  m = (m + m.transpose()).eval() / 2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::MatrixXd psi = vr * es.eigenvectors();
  Eigen::MatrixXd model = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < rank; ++i) {
    const double kk = es.eigenvalues()(i);
    model += ((kk - k2.array()) * psi.col(i).array()).matrix() * psi.col(i).transpose();
    BoundState st;
    st.energy = kk;
    st.phi = psi.col(i).cwiseQuotient(s);
    normalize(st.phi, g);
    st.normalized = true;
    out.states.push_back(std::move(st));
  }
  out.residual = (rt - model).norm() / rt.norm();
  return out;
}

// Noise in V_S adds directions to the remainder that no eigenstate of V backs; a BIC must have
// |(H - K^2) phi| <= tol (1 + |K^2|).
inline std::vector<BoundState> confirmed_bics(const Kernel& v, std::vector<BoundState> candidates, double tol = 1e-3) {
  std::vector<BoundState> out;
  for (auto& c : candidates)
    if (schrodinger_residual(v, c) <= tol * (1 + std::abs(c.energy))) out.push_back(std::move(c));
  return out;
}

inline SBDecomposition sb_decompose(const Kernel& v) {
  if (v.symmetry != Symmetry::symmetric) throw ContractError("sb_decompose: kernel is not symmetric");
  SBDecomposition d;
  const Eigen::MatrixXcd t = half_on_shell_T_matrix(v);
  // a threshold state makes the low-momentum label solves singular; the node rule needs none
  const bool label = v.continuation && !has_threshold_state(v);
  d.V_S = label ? v_s_from_T(t, on_shell_samples(v), v.grid) : v_s_from_T(t, v.grid);
  d.V_B = v;
  d.V_B.values = v.values - d.V_S.values;
  d.V_B.symmetry = Symmetry::general;
  d.V_B.continuation = {};
  d.V_B.factors.reset();
  auto negatives = negative_energy_states(v);
  auto bics = confirmed_bics(v, extract_bics(d.V_B, negatives).states);
  d.bound_list = negatives;
  for (auto& b : bics) d.bound_list.push_back(std::move(b));
  return d;
}

namespace detail {

inline ABResiduals ab_residuals(const Eigen::MatrixXcd& t, const Eigen::MatrixXcd& vs,
                                const std::vector<BoundState>& states, const MomentumGrid& g) {
  ABResiduals res;
  const auto n = g.size();
  const double tn = weighted_hs_norm(t, g);
  Eigen::MatrixXd pb = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : states) {
    if (s.phi.size() != n) throw ShapeError("verify_conditions_AB: state does not match the grid");
    pb += s.phi * s.phi.transpose();
  }
  const Eigen::VectorXd k2 = g.nodes.array().square();
  Eigen::MatrixXd comm = k2.asDiagonal() * pb - pb * k2.asDiagonal();
  Eigen::MatrixXcd a = vs - vs.adjoint() - comm.cast<std::complex<double>>();
  Eigen::MatrixXcd x = omega_dagger_t(t, g);
  Eigen::MatrixXcd b = x - x.adjoint();
  const double an = weighted_hs_norm(a, g), bn = weighted_hs_norm(b, g);
  res.a = tn > 0 ? an / tn : an;
  res.b = tn > 0 ? bn / tn : bn;
  return res;
}

}  // namespace detail

// (A): T Omega+^dagger - H0 P_B - Omega+ T^dagger + P_B H0 and (B): Omega+^dagger T - T^dagger Omega+,
// Hilbert-Schmidt norms in the measure-symmetrized representation relative to that of T.
// T Omega+^dagger integrates over the on-shell label; Omega+^dagger T only over off-shell momenta.
inline ABResiduals verify_conditions_AB(const Eigen::MatrixXcd& t, const std::vector<BoundState>& states,
                                        const MomentumGrid& g) {
  return detail::ab_residuals(t, detail::v_s_complex(t, g), states, g);
}

inline ABResiduals verify_conditions_AB(const Eigen::MatrixXcd& t, const OnShellSamples& s,
                                        const std::vector<BoundState>& states, const MomentumGrid& g) {
  return detail::ab_residuals(t, detail::v_s_complex(t, s, g), states, g);
}

// normalized vector orthogonal to the given states, deterministic in the seed
inline BoundState orthogonal_probe_state(const std::vector<BoundState>& states, const MomentumGrid& g,
                                         unsigned seed = 12345) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  BoundState probe;
  probe.phi.resize(g.size());
  // smooth in k so the probe lives where the grid resolves
  for (Eigen::Index i = 0; i < g.size(); ++i) probe.phi(i) = nd(rng) * std::exp(-g.nodes(i) * g.nodes(i) / 8);
  for (const auto& s : states) probe.phi -= inner_product(s.phi, probe.phi, g) * s.phi;
  normalize(probe.phi, g);
  probe.normalized = true;
  return probe;
}

}  // namespace bicforge
