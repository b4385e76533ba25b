#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/SVD>

#include "coordinate.hpp"
#include "io.hpp"
#include "levinson.hpp"
#include "reference.hpp"
#include "sbdecomp.hpp"

namespace bicforge::cli {

namespace fs = std::filesystem;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* out_env = "BICFORGE_OUT";

struct RunConfig {
  std::string command;
  int n = 128;
  double map_scale = 4.0;
  double cutoff = 40.0;
  double lambda = -30.0;  // seed strength, fm^-2
  double b = 0.5;         // seed range, fm
  std::vector<double> energies{-4.0, -1.0, 0.0, 1.0, 4.0};
  fs::path out_dir = "bicforge-out";
  CurveFormat format = CurveFormat::csv;
  bool mev = false;

  std::string in;  // kernel file; the Gaussian seed when empty
  std::optional<double> target;
  int samples = 64;
  int expected = -1;
  // S-space perturbation by a Gaussian kernel
  double strength = 1.0;
  double a_lambda = 5.0;
  double a_b = 0.5;
  int radial_n = 400;
  double r_max = 8.0;
  double vnw_k = 1.0;
  double vnw_a = 10.0;
  int vnw_n = 4000;
  double vnw_rmax = 0;  // 50 / k when zero
  double sep_k = 1.0;
  double sep_beta = 1.0;
};

inline void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError(what);
  };
  need(c.n >= 8, "--n must be at least 8");
  need(c.map_scale > 0 && c.map_scale < c.cutoff, "--c must lie in (0, cutoff)");
  need(std::isfinite(c.cutoff), "--cutoff must be finite");
  need(std::isfinite(c.lambda), "--lambda must be finite");
  need(c.b > 0 && std::isfinite(c.b), "--b must be positive");
  need(!c.energies.empty(), "--energies must not be empty");
  for (double e : c.energies) need(std::isfinite(e) && e < c.cutoff * c.cutoff, "--energies must lie below cutoff^2");
  need(c.samples >= 16, "--samples must be at least 16");
  need(c.radial_n >= 8 && c.r_max > 0, "--rn must be at least 8 and --rmax positive");
  need(c.vnw_k > 0 && c.vnw_a != 0 && c.vnw_n >= 8 && c.vnw_rmax >= 0, "vnw needs --k > 0, --A != 0, --rn >= 8");
  need(c.sep_k > 0 && c.sep_k < c.cutoff && c.sep_beta > 0, "separable needs 0 < --K < cutoff and --beta > 0");
  need(c.a_b > 0, "--a-b must be positive");
  if (c.target) need(std::isfinite(*c.target) && *c.target < c.cutoff * c.cutoff, "--E must lie below cutoff^2");
  if (!c.in.empty()) need(fs::exists(c.in), "--in: no such file " + c.in);
}

// key: value lines, fixed precision
class Report {
 public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void add(const std::string& key, double value) {
    std::ostringstream os;
    os << std::setprecision(12) << value;
    add(key, os.str());
  }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, value ? "yes" : "no"); }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : lines_) os << k << ": " << v << '\n';
  }
  void save(const fs::path& p) const {
    auto os = detail::open_out(p);
    write(os);
  }
  const std::vector<std::pair<std::string, std::string>>& lines() const { return lines_; }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

// ---- shared pieces -------------------------------------------------------------------------

inline std::string energy_label(double e) {
  std::ostringstream os;
  os << std::setprecision(6) << e;
  return os.str();
}

inline MomentumGrid momentum_grid(const RunConfig& c) { return build_momentum_grid(c.n, c.map_scale, c.cutoff); }

inline Kernel seed_kernel(const RunConfig& c) {
  auto v = gaussian_momentum_kernel(c.lambda, c.b, momentum_grid(c));
  return v;
}

inline Kernel input_kernel(const RunConfig& c) { return c.in.empty() ? seed_kernel(c) : read_kernel(c.in); }

inline RadialFn<double> seed_local(const RunConfig& c) {
  const double lam = c.lambda, b = c.b;
  return [lam, b](double r) { return lam * std::exp(-r * r / (b * b)); };
}

inline BoundState ground_state(const Kernel& v) {
  auto states = negative_energy_states(v);
  if (states.empty()) throw SolverError("kernel has no negative-energy state");
  return states.front();
}

// the state to move: the lowest negative-energy state, or the first recovered BIC
inline BoundState state_to_shift(const Kernel& v) {
  auto states = negative_energy_states(v);
  if (!states.empty()) return states.front();
  auto d = sb_decompose(v);
  if (d.bound_list.empty()) throw SolverError("kernel has no bound state to shift");
  return d.bound_list.front();
}

inline Kernel gaussian_perturbation(const RunConfig& c, const MomentumGrid& g) {
  return gaussian_momentum_kernel(c.a_lambda, c.a_b, g);
}

inline Curve phase_table(const PhaseShiftCurve& pc, bool mev) {
  Curve t{{"k", "delta_rad"}, {pc.momenta, pc.delta}};
  if (mev) {
    t.columns.push_back("E_MeV");
    t.data.push_back(pc.momenta.array().square() * mev_per_inverse_fm2);
  }
  return t;
}

inline Curve momentum_state_table(const MomentumGrid& g, const Eigen::VectorXd& phi) {
  return {{"k", "phi"}, {g.nodes, phi}};
}

inline Curve radial_table(const RadialGrid& rg, const Eigen::VectorXd& f, const char* name = "phi") {
  return {{"r", name}, {rg.nodes, f}};
}

inline Kernel matrix_kernel(const MomentumGrid& g, Eigen::MatrixXd values) {
  Kernel k;
  k.grid = g;
  k.values = std::move(values);
  k.symmetry = is_numerically_symmetric<double>(k.values) ? Symmetry::symmetric : Symmetry::general;
  return k;
}

inline CoordinateKernel outer_kernel(const RadialGrid& rg, const Eigen::VectorXd& left, const Eigen::VectorXd& right,
                                     double coefficient = 1.0) {
  CoordinateKernel k;
  k.grid = rg;
  k.values = coefficient * left * right.transpose();
  return k;
}

inline void add_energy(Report& r, const std::string& key, double e, bool mev) {
  r.add(key, e);
  if (mev) r.add(key + "_MeV", e * mev_per_inverse_fm2);
}

inline void add_census(Report& r, const BicCensus& c) {
  r.add("N", c.N_total);
  r.add("N_minus", c.N_minus);
  r.add("N_plus", c.N_plus);
  r.add("delta0", c.delta0);
  r.add("delta_inf", c.deltaInf);
  r.add("indeterminate", c.indeterminate);
}

inline void add_signature(Report& r, const BicSignature& s) {
  r.add("vb_origin", s.origin_value);
  r.add("vb_origin_sign", s.origin_sign);
  std::ostringstream os;
  os << std::setprecision(12);
  for (std::size_t i = 0; i < s.node_momenta.size(); ++i) os << (i ? " " : "") << s.node_momenta[i];
  r.add("vb_nodes", s.node_momenta.empty() ? std::string("none") : os.str());
}

// ---- subcommands ---------------------------------------------------------------------------

inline void cmd_seed(const RunConfig& c, Report& r) {
  const auto v = seed_kernel(c);
  write_kernel(c.out_dir / "seed.bk", v);
  r.add("n", c.n);
  r.add("lambda", c.lambda);
  r.add("b", c.b);
  r.add("v_k0k0", v.values(0, 0));
  r.add("file", (c.out_dir / "seed.bk").string());
}

inline void cmd_bound(const RunConfig& c, Report& r) {
  const auto v = input_kernel(c);
  const auto states = negative_energy_states(v);
  const auto rg = build_radial_grid(c.radial_n, c.r_max);
  Eigen::VectorXd e(states.size()), res(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    e(i) = s.energy;
    res(i) = schrodinger_residual(v, s);
    const std::string tag = std::to_string(i);
    write_curve(c.out_dir / ("phi_k_" + tag), momentum_state_table(v.grid, s.phi), c.format);
    write_curve(c.out_dir / ("phi_r_" + tag), radial_table(rg, wavefunction_to_coordinate(s, v.grid, rg)), c.format);
    add_energy(r, "E" + tag, s.energy, c.mev);
  }
  Curve t{{"index", "E", "residual"}, {Eigen::VectorXd::LinSpaced(e.size(), 0, e.size() - 1), e, res}};
  if (c.mev) {
    t.columns.push_back("E_MeV");
    t.data.push_back(e * mev_per_inverse_fm2);
  }
  write_curve(c.out_dir / "bound", t, c.format);
  r.add("states", static_cast<int>(states.size()));
  if (c.in.empty() && !states.empty())
    if (auto shoot = local_bound_energy(seed_local(c))) add_energy(r, "E0_shooting", *shoot, c.mev);
}

inline void cmd_phase(const RunConfig& c, Report& r) {
  const auto v = input_kernel(c);
  const auto pc = phase_curve(v, c.samples);
  write_curve(c.out_dir / "phase", phase_table(pc, c.mev), c.format);
  r.add("samples", static_cast<int>(pc.momenta.size()));
  r.add("delta0", pc.delta0);
  r.add("delta_inf", pc.delta_inf);
  r.add("levinson_count", (pc.delta0 - pc.delta_inf) / std::numbers::pi);
}

inline void cmd_tmatrix(const RunConfig& c, Report& r) {
  const auto v = input_kernel(c);
  const Eigen::MatrixXcd t = half_on_shell_T_matrix(v);
  write_kernel(c.out_dir / "t_re.bk", matrix_kernel(v.grid, t.real()));
  write_kernel(c.out_dir / "t_im.bk", matrix_kernel(v.grid, t.imag()));
  const auto n = v.size();
  Eigen::VectorXd re(n), im(n), d(n);
  double worst = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto s = solve_k_matrix_at_node(v, j);
    re(j) = t(j, j).real();
    im(j) = t(j, j).imag();
    d(j) = s.delta;
    const auto tp = t_from_phase(s.k, s.delta);
    worst = std::max(worst, std::abs(t(j, j) - tp) / std::max(1e-300, std::abs(tp)));
  }
  write_curve(c.out_dir / "t_on_shell", {{"k", "re_t", "im_t", "delta_rad"}, {v.grid.nodes, re, im, d}}, c.format);
  r.add("on_shell_vs_phase", worst);
  r.add("t_max_abs", t.cwiseAbs().maxCoeff());
}

inline void cmd_sbdecomp(const RunConfig& c, Report& r) {
  const auto v = input_kernel(c);
  const auto d = sb_decompose(v);
  write_kernel(c.out_dir / "v_s.bk", d.V_S);
  write_kernel(c.out_dir / "v_b.bk", d.V_B);
  r.add("bound_states", static_cast<int>(d.bound_list.size()));
  for (std::size_t i = 0; i < d.bound_list.size(); ++i)
    add_energy(r, "E" + std::to_string(i), d.bound_list[i].energy, c.mev);
  add_signature(r, detect_bic_signature(d.V_B));
}

inline void add_shifted_report(const Kernel& shifted, Report& r) {
  try {
    add_census(r, bic_census(shifted));
  } catch (const AmbiguousCensusError& e) {
    r.add("census", std::string("ambiguous: ") + e.what());
  }
}

inline void cmd_shift(const RunConfig& c, Report& r) {
  if (!c.target) throw UsageError("shift needs --E");
  const auto v = input_kernel(c);
  const auto s = state_to_shift(v);
  const auto shifted = energy_shift(v, s, *c.target);
  write_kernel(c.out_dir / "shifted.bk", shifted);
  add_energy(r, "E_from", s.energy, c.mev);
  add_energy(r, "E_to", *c.target, c.mev);
  r.add("residual", schrodinger_residual(shifted, s.phi, *c.target));
  add_shifted_report(shifted, r);
}

inline void cmd_perturb(const RunConfig& c, Report& r) {
  const auto v = seed_kernel(c);
  const auto s = ground_state(v);
  const auto p = s_space_perturb(v, s, gaussian_perturbation(c, v.grid), c.strength);
  write_kernel(c.out_dir / "perturbed.bk", p);
  const auto pc0 = phase_curve(v, c.samples), pc = phase_curve(p, c.samples);
  write_curve(c.out_dir / "phase", phase_table(pc, c.mev), c.format);
  r.add("residual", schrodinger_residual(p, s));
  r.add("max_phase_change", (pc.delta - pc0.delta).cwiseAbs().maxCoeff());
  if (c.target) {
    const auto shifted = energy_shift(p, s, *c.target);
    write_kernel(c.out_dir / "shifted.bk", shifted);
    add_energy(r, "E_to", *c.target, c.mev);
    add_shifted_report(shifted, r);
  }
}

inline void cmd_census(const RunConfig& c, Report& r) { add_census(r, bic_census(input_kernel(c))); }

inline void cmd_extract(const RunConfig& c, Report& r) {
  const auto v = input_kernel(c);
  const auto d = sb_decompose(v);
  const auto negatives = negative_energy_states(v);
  const auto x = extract_bics(d.V_B, negatives);
  const auto bics = confirmed_bics(v, x.states);
  if (c.expected >= 0 && static_cast<int>(bics.size()) != c.expected)
    throw ExtractionError("extract: found " + std::to_string(bics.size()) + " BICs, expected " +
                          std::to_string(c.expected));
  Eigen::VectorXd e(bics.size());
  for (std::size_t i = 0; i < bics.size(); ++i) {
    e(i) = bics[i].energy;
    write_curve(c.out_dir / ("bic_phi_k_" + std::to_string(i)), momentum_state_table(v.grid, bics[i].phi), c.format);
    add_energy(r, "K2_" + std::to_string(i), e(i), c.mev);
  }
  Curve t{{"index", "K2"}, {Eigen::VectorXd::LinSpaced(e.size(), 0, e.size() - 1), e}};
  if (c.mev) {
    t.columns.push_back("E_MeV");
    t.data.push_back(e * mev_per_inverse_fm2);
  }
  write_curve(c.out_dir / "extracted", t, c.format);
  r.add("negative_states", static_cast<int>(negatives.size()));
  r.add("candidates", x.rank);
  r.add("bics", static_cast<int>(bics.size()));
  r.add("factorization_residual", x.residual);
}

// <r'|V_B|r> = (E + lap') phi(r') phi(r) on the seed state, one kernel per energy, and the node report
inline void cmd_coord(const RunConfig& c, Report& r) {
  const auto v = input_kernel(c);
  const auto s = ground_state(v);
  const auto rg = build_radial_grid(c.radial_n, c.r_max);
  const Eigen::VectorXd phi_r = wavefunction_to_coordinate(s, v.grid, rg);
  write_curve(c.out_dir / "phi_r", radial_table(rg, phi_r), c.format);
  Eigen::VectorXd es(c.energies.size()), nodes(c.energies.size());
  for (std::size_t i = 0; i < c.energies.size(); ++i) {
    const double e = c.energies[i];
    const Eigen::VectorXd prof = vb_profile(phi_r, rg, e);
    write_kernel(c.out_dir / ("v_b_r_E" + energy_label(e) + ".bk"), outer_kernel(rg, prof, phi_r));
    const auto node = vb_profile_node(phi_r, rg, e);
    es(i) = e;
    nodes(i) = node.value_or(std::numeric_limits<double>::quiet_NaN());
    r.add("node_E" + energy_label(e), node ? std::to_string(*node) : std::string("none"));
  }
  write_curve(c.out_dir / "nodes", {{"E", "node_r"}, {es, nodes}}, c.format);
  const auto own = vb_profile_node(phi_r, rg, s.energy);
  r.add("node_at_E0", own ? std::to_string(*own) : std::string("none"));
}

struct VnwChecks {
  double residual = 0;
  double slope = 0;
  double tail_min = 0, tail_max = 0;  // V 2kr / (k^2 sin 2kr) where |sin 2kr| >= 1/2
};

inline VnwChecks vnw_checks(const VnwPotential& m) {
  VnwChecks out;
  out.residual = vnw_verify(m);
  const double r1 = 1e-3 / m.k, r2 = 1e-2 / m.k;
  out.slope = std::log(std::abs(m.potential(r2) / m.potential(r1))) / std::log(r2 / r1);
  out.tail_min = std::numeric_limits<double>::infinity();
  out.tail_max = -out.tail_min;
  for (int i = 0; i <= 3000; ++i) {
    const double x = 20 + 30.0 * i / 3000;  // k r
    const double s = std::sin(2 * x);
    if (std::abs(s) < 0.5) continue;
    const double ratio = m.potential(x / m.k) * 2 * x / (s * m.k * m.k);
    out.tail_min = std::min(out.tail_min, ratio);
    out.tail_max = std::max(out.tail_max, ratio);
  }
  return out;
}

inline VnwPotential vnw_model(const RunConfig& c) {
  const double rmax = c.vnw_rmax > 0 ? c.vnw_rmax : 50 / c.vnw_k;
  return vnw_build(c.vnw_k, c.vnw_a, build_radial_grid(c.vnw_n, rmax));
}

inline void vnw_outputs(const RunConfig& c, const fs::path& dir, Report& r) {
  const auto m = vnw_model(c);
  write_curve(dir / "vnw_V", radial_table(m.grid, m.v, "V"), c.format);
  write_curve(dir / "vnw_phi", radial_table(m.grid, m.phi), c.format);
  const auto chk = vnw_checks(m);
  r.add("k", m.k);
  r.add("A", m.A);
  add_energy(r, "E", m.energy(), c.mev);
  r.add("norm", m.norm);
  r.add("residual", chk.residual);
  r.add("origin_slope", chk.slope);
  r.add("tail_ratio_min", chk.tail_min);
  r.add("tail_ratio_max", chk.tail_max);
}

inline void cmd_vnw(const RunConfig& c, Report& r) { vnw_outputs(c, c.out_dir, r); }

inline SeparableModel separable_model(const RunConfig& c) {
  const double beta = c.sep_beta;
  return tuned_separable_model([beta](double k) { return std::exp(-k * k / (beta * beta)); }, c.sep_k,
                               momentum_grid(c));
}

inline void separable_outputs(const RunConfig& c, const fs::path& dir, Report& r) {
  const auto m = separable_model(c);
  const auto v = separable_kernel(m);
  const auto s = separable_bic(m);
  write_curve(dir / "separable_g", {{"k", "g"}, {m.grid.nodes, m.g}}, c.format);
  write_curve(dir / "separable_phi_k", momentum_state_table(m.grid, s.phi), c.format);
  const auto pc = phase_curve(v, c.samples);
  write_curve(dir / "separable_phase", phase_table(pc, c.mev), c.format);
  r.add("K", m.K);
  r.add("lambda_c", m.lambda);
  r.add("residual", schrodinger_residual(v, s));
  auto detuned = m;
  detuned.lambda *= 1 + 1e-3;
  bool rejected = false;
  try {
    separable_bic(detuned);
  } catch (const NotABicError&) {
    rejected = true;
  }
  r.add("detuned_rejected", rejected);
  add_census(r, bic_census(v));
}

inline void cmd_separable(const RunConfig& c, Report& r) { separable_outputs(c, c.out_dir, r); }

inline void cmd_verify_ab(const RunConfig& c, Report& r) {
  const auto v = input_kernel(c);
  const auto states = negative_energy_states(v);
  const Eigen::MatrixXcd t = half_on_shell_T_matrix(v);
  const auto probe = orthogonal_probe_state(states, v.grid);
  ABResiduals good, wrong;
  if (v.continuation) {
    const auto samples = on_shell_samples(v);
    good = verify_conditions_AB(t, samples, states, v.grid);
    wrong = verify_conditions_AB(t, samples, {probe}, v.grid);
  } else {
    good = verify_conditions_AB(t, states, v.grid);
    wrong = verify_conditions_AB(t, {probe}, v.grid);
  }
  r.add("states", static_cast<int>(states.size()));
  r.add("residual_A", good.a);
  r.add("residual_B", good.b);
  r.add("wrong_residual_A", wrong.a);
  r.add("wrong_residual_B", wrong.b);
}

// ---- reproduce-paper -----------------------------------------------------------------------

inline std::string fig_dir(int number, const std::string& name) {
  std::ostringstream os;
  os << "fig" << std::setw(2) << std::setfill('0') << number << '_' << name;
  return os.str();
}

inline void reproduce_paper(const RunConfig& c, Report& top) {
  const fs::path root = c.out_dir;
  const auto v0 = seed_kernel(c);
  const auto& g = v0.grid;
  const auto s0 = ground_state(v0);
  const auto rg = build_radial_grid(c.radial_n, c.r_max);
  // kernels on a coarser radial grid keep the files small
  const auto rg_out = build_radial_grid(120, 4.0);
  const Eigen::VectorXd phi_r = wavefunction_to_coordinate(s0, g, rg);
  const Eigen::VectorXd phi_out = wavefunction_to_coordinate(s0, g, rg_out);
  int fig = 1;

  {
    const fs::path d = root / fig_dir(fig++, "bound_state");
    write_curve(d / "phi_r", radial_table(rg, phi_r), c.format);
    write_curve(d / "phi_k", momentum_state_table(g, s0.phi), c.format);
    Report r;
    add_energy(r, "E0", s0.energy, c.mev);
    if (auto shoot = local_bound_energy(seed_local(c))) add_energy(r, "E0_shooting", *shoot, c.mev);
    r.add("residual", schrodinger_residual(v0, s0));
    r.save(d / "summary.txt");
    add_energy(top, "E0", s0.energy, c.mev);
  }

  const Eigen::MatrixXcd t0 = half_on_shell_T_matrix(v0);
  const auto pc0 = phase_curve(v0, c.samples);
  {
    const fs::path d = root / fig_dir(fig++, "seed_t_phase");
    write_kernel(d / "t_re.bk", matrix_kernel(g, t0.real()));
    write_curve(d / "phase", phase_table(pc0, c.mev), c.format);
    Report r;
    add_census(r, bic_census(v0));
    r.save(d / "summary.txt");
  }

  const auto sb0 = sb_decompose(v0);
  auto sweep_dir = [&](const std::string& name, const Kernel& v, const Kernel& vs, const Kernel& vb) {
    const fs::path d = root / fig_dir(fig++, name);
    write_kernel(d / "v.bk", v);
    write_kernel(d / "v_s.bk", vs);
    write_kernel(d / "v_b.bk", vb);
    Report r;
    add_signature(r, detect_bic_signature(vb));
    r.save(d / "summary.txt");
  };
  sweep_dir("sb_seed", v0, sb0.V_S, sb0.V_B);
  std::vector<Kernel> shifted;
  for (double e : c.energies) {
    shifted.push_back(energy_shift(v0, s0, e));
    Kernel vb = shifted.back();
    vb.values -= sb0.V_S.values;
    vb.symmetry = Symmetry::general;
    sweep_dir("sb_E" + energy_label(e), shifted.back(), sb0.V_S, vb);
  }

  // coordinate space: V_S = V0 delta - V_B0, V_B(E) = (E + lap') phi(r') phi(r)
  auto coord_dir = [&](const std::string& name, double e) {
    const fs::path d = root / fig_dir(fig++, name);
    const Eigen::VectorXd prof = vb_profile(phi_out, rg_out, e);
    const Eigen::VectorXd prof0 = vb_profile(phi_out, rg_out, s0.energy);
    Eigen::VectorXd local(rg_out.size());
    for (Eigen::Index a = 0; a < rg_out.size(); ++a) local(a) = seed_local(c)(rg_out.nodes(a));
    write_curve(d / "v_local", radial_table(rg_out, local, "V"), c.format);
    write_kernel(d / "v_s_nonlocal.bk", outer_kernel(rg_out, prof0, phi_out, -1.0));
    write_kernel(d / "v_b.bk", outer_kernel(rg_out, prof, phi_out));
    write_kernel(d / "v_nonlocal.bk", outer_kernel(rg_out, phi_out, phi_out, e - s0.energy));
    Report r;
    add_energy(r, "E", e, c.mev);
    const auto node = vb_profile_node(phi_r, rg, e);
    r.add("node_r", node ? std::to_string(*node) : std::string("none"));
    r.save(d / "summary.txt");
  };
  coord_dir("coord_seed", s0.energy);
  for (double e : c.energies) coord_dir("coord_E" + energy_label(e), e);

  {
    const fs::path d = root / fig_dir(fig++, "coord_profiles");
    Curve prof{{"r", "phi"}, {rg.nodes, phi_r}};
    Eigen::VectorXd es(c.energies.size()), nodes(c.energies.size());
    for (std::size_t i = 0; i < c.energies.size(); ++i) {
      const double e = c.energies[i];
      prof.columns.push_back("vb_E" + energy_label(e));
      prof.data.push_back(vb_profile(phi_r, rg, e));
      es(i) = e;
      nodes(i) = vb_profile_node(phi_r, rg, e).value_or(std::numeric_limits<double>::quiet_NaN());
    }
    write_curve(d / "profiles", prof, c.format);
    write_curve(d / "nodes", {{"E", "node_r"}, {es, nodes}}, c.format);
    Report r;
    const auto own = vb_profile_node(phi_r, rg, s0.energy);
    r.add("node_at_E0", own ? std::to_string(*own) : std::string("none"));
    for (std::size_t i = 0; i < c.energies.size(); ++i)
      r.add("node_E" + energy_label(c.energies[i]), std::isnan(nodes(i)) ? std::string("none") : std::to_string(nodes(i)));
    r.save(d / "summary.txt");
  }

  // general method: T from an S-space perturbation, V_B from the sweep above
  const auto vp = s_space_perturb(v0, s0, gaussian_perturbation(c, g), c.strength);
  const auto sbp = sb_decompose(vp);
  {
    const fs::path d = root / fig_dir(fig++, "general_t_phase");
    const Eigen::MatrixXcd tp = half_on_shell_T_matrix(vp);
    const auto pcp = phase_curve(vp, c.samples);
    write_kernel(d / "t_re.bk", matrix_kernel(g, tp.real()));
    write_curve(d / "phase", phase_table(pcp, c.mev), c.format);
    Report r;
    r.add("residual", schrodinger_residual(vp, s0));
    r.add("max_phase_change", (pcp.delta - pc0.delta).cwiseAbs().maxCoeff());
    r.save(d / "summary.txt");
  }
  for (std::size_t i = 0; i < c.energies.size(); ++i) {
    Kernel vb = shifted[i];
    vb.values -= sb0.V_S.values;
    vb.symmetry = Symmetry::general;
    Kernel v = sbp.V_S;
    v.values += vb.values;
    v.symmetry = Symmetry::symmetric;
    v.values = (v.values + v.values.transpose()).eval() / 2;
    sweep_dir("general_E" + energy_label(c.energies[i]), v, sbp.V_S, vb);
  }

  {
    const fs::path d = root / "appendix_a1_vnw";
    Report r;
    vnw_outputs(c, d, r);
    r.save(d / "summary.txt");
  }
  {
    const fs::path d = root / "appendix_a2_separable";
    Report r;
    separable_outputs(c, d, r);
    r.save(d / "summary.txt");
  }
  top.add("figures", fig - 1);
  top.add("root", root.string());
}

inline void cmd_reproduce(const RunConfig& c, Report& r) { reproduce_paper(c, r); }

// ---- dispatch ------------------------------------------------------------------------------

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"bic-forge: BIC construction, SB-decomposition and scattering on a momentum grid"};
  app.name("bic-forge");
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_opt, format = "csv";
  app.add_option("--n", cfg.n, "momentum grid size")->capture_default_str();
  app.add_option("--c", cfg.map_scale, "grid map scale, fm^-1")->capture_default_str();
  app.add_option("--cutoff", cfg.cutoff, "momentum cutoff, fm^-1")->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "seed strength, fm^-2")->capture_default_str();
  app.add_option("--b", cfg.b, "seed range, fm")->capture_default_str();
  app.add_option("--energies", cfg.energies, "target energies, fm^-2")->delimiter(',')->capture_default_str();
  app.add_option("--out", out_opt, std::string("output directory (else $") + out_env + ", else bicforge-out)");
  app.add_option("--format", format, "curve format")->check(CLI::IsMember({"csv", "text"}))->capture_default_str();
  app.add_flag("--mev", cfg.mev, "add MeV reporting columns");
  app.add_option("--samples", cfg.samples, "phase-curve samples")->capture_default_str();
  app.add_option("--rn", cfg.radial_n, "radial grid size")->capture_default_str();
  app.add_option("--rmax", cfg.r_max, "radial grid extent, fm")->capture_default_str();

  using Runner = void (*)(const RunConfig&, Report&);
  std::vector<std::pair<CLI::App*, Runner>> subs;
  auto sub = [&](const char* name, const char* help, Runner run) {
    auto* s = app.add_subcommand(name, help);
    subs.emplace_back(s, run);
    return s;
  };
  auto with_in = [&](CLI::App* s) { s->add_option("--in", cfg.in, "kernel file (.bk); the seed when omitted"); };

  sub("seed", "build the Gaussian seed kernel", cmd_seed);
  with_in(sub("bound", "negative-energy spectrum and wave functions", cmd_bound));
  with_in(sub("phase", "phase-shift curve", cmd_phase));
  with_in(sub("tmatrix", "half-on-shell T-matrix", cmd_tmatrix));
  with_in(sub("sbdecomp", "split V into V_S + V_B", cmd_sbdecomp));
  auto* shift = sub("shift", "move the bound state to energy E", cmd_shift);
  with_in(shift);
  shift->add_option("--E", cfg.target, "new energy, fm^-2")->required();
  auto* perturb = sub("perturb", "S-space perturbation of the seed", cmd_perturb);
  perturb->add_option("--strength", cfg.strength)->capture_default_str();
  perturb->add_option("--a-lambda", cfg.a_lambda, "perturbing Gaussian strength, fm^-2")->capture_default_str();
  perturb->add_option("--a-b", cfg.a_b, "perturbing Gaussian range, fm")->capture_default_str();
  perturb->add_option("--E", cfg.target, "shift the state afterwards, fm^-2");
  with_in(sub("census", "Levinson count of negative-energy states and BICs", cmd_census));
  auto* extract = sub("extract", "recover BICs from V_B", cmd_extract);
  with_in(extract);
  extract->add_option("--expected", cfg.expected, "required BIC count");
  with_in(sub("coord", "coordinate-space V_B kernels and node report", cmd_coord));
  auto* vnw = sub("vnw", "von Neumann-Wigner potential", cmd_vnw);
  vnw->add_option("--k", cfg.vnw_k, "BIC momentum, fm^-1")->capture_default_str();
  vnw->add_option("--A", cfg.vnw_a)->capture_default_str();
  vnw->add_option("--vnw-rn", cfg.vnw_n, "radial grid size")->capture_default_str();
  vnw->add_option("--vnw-rmax", cfg.vnw_rmax, "radial extent, fm (50/k when 0)")->capture_default_str();
  auto* sep = sub("separable", "tuned rank-one separable BIC", cmd_separable);
  sep->add_option("--K", cfg.sep_k, "BIC momentum, fm^-1")->capture_default_str();
  sep->add_option("--beta", cfg.sep_beta, "form-factor range, fm^-1")->capture_default_str();
  with_in(sub("verify-ab", "check conditions (A)/(B) for T and the bound space", cmd_verify_ab));
  sub("reproduce-paper", "full sweep, one directory per figure", cmd_reproduce);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Runner run = nullptr;
  for (auto& [s, r] : subs)
    if (s->parsed()) {
      cfg.command = s->get_name();
      run = r;
    }
  if (!out_opt.empty())
    cfg.out_dir = out_opt;
  else if (const char* env = std::getenv(out_env); env && *env)
    cfg.out_dir = env;
  cfg.format = format == "text" ? CurveFormat::text : CurveFormat::csv;

  try {
    validate(cfg);
  } catch (const UsageError& e) {
    err << "bic-forge: " << e.what() << '\n';
    return 2;
  }
  try {
    Report r;
    r.add("command", cfg.command);
    run(cfg, r);
    r.write(out);
  } catch (const UsageError& e) {
    err << "bic-forge: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "bic-forge: " << cfg.command << " failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace bicforge::cli
