// One line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include <bicforge/cli.hpp>
#include <bicforge/quad.hpp>

using namespace bicforge;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

struct Detail {
  std::ostringstream os;
  Detail() { os.precision(4); }
  template <class T>
  Detail& operator()(const std::string& key, const T& v) {
    if (os.tellp() > 0) os << ' ';
    os << key << '=' << v;
    return *this;
  }
  std::string str() const { return os.str(); }
};

const std::vector<double> sweep = {-4, -1, 0, 1, 4};

const MomentumGrid& grid() {
  static const MomentumGrid g = build_momentum_grid(128, 4.0, 40.0);
  return g;
}

double mod_pi(double d) { return std::abs(d - std::numbers::pi * std::round(d / std::numbers::pi)); }

// spacing of the grid cell around k
double local_spacing(double k) {
  const auto& p = grid().nodes;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p(i) >= k) return p(i) - p(i - 1);
  return p(p.size() - 1) - p(p.size() - 2);
}

std::vector<BoundState> bics_of(const SBDecomposition& d) {
  std::vector<BoundState> out;
  for (const auto& s : d.bound_list)
    if (s.energy > 0) out.push_back(s);
  return out;
}

double overlap2(const BoundState& a, const BoundState& b) {
  const double o = inner_product(a.phi, b.phi, grid());
  return o * o;
}

// criterion 4 on the family base + (E - E0)|phi><phi|
bool signature_checks(const Kernel& base, const BoundState& s, Detail& d) {
  bool ok = true;
  for (double e : sweep) {
    const auto sig = detect_bic_signature(sb_decompose(energy_shift(base, s, e)).V_B);
    ok = ok && ((sig.origin_sign > 0) == (e > 0));
    d("sign(E=" + cli::energy_label(e) + ")", sig.origin_sign);
    if (e == 1) {
      const double h = local_spacing(1.0);
      const bool node_ok = sig.node_momenta.size() == 1 && std::abs(sig.node_momenta[0] - 1.0) <= h;
      ok = ok && node_ok;
      d("node", sig.node_momenta.empty() ? std::nan("") : sig.node_momenta[0])("spacing", h);
    }
  }
  return ok;
}

// criterion 5: K^2 = 4 recovered from base shifted to 4
bool extraction_checks(const Kernel& base, const BoundState& s, Detail& d) {
  const auto bics = bics_of(sb_decompose(energy_shift(base, s, 4.0)));
  if (bics.size() != 1) {
    d("bics", bics.size());
    return false;
  }
  const double rel = std::abs(bics[0].energy / 4.0 - 1);
  const double ov = overlap2(bics[0], s);
  d("K2", bics[0].energy)("rel", rel)("overlap", ov);
  return rel <= 1e-3 && ov >= 0.999;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// relative paths and bytes of every file under root
std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).string(), slurp(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main() {
  const auto& g = grid();
  const auto v0 = gaussian_momentum_kernel(-30.0, 0.5, g);
  const auto s0 = negative_energy_states(v0).front();
  const double e_ref = -5.373;

  {  // 1
    const double shoot = *local_bound_energy([](double r) { return -30.0 * std::exp(-r * r / 0.25); });
    const double rel_m = std::abs(s0.energy / e_ref - 1), rel_s = std::abs(shoot / e_ref - 1);
    const double agree = std::abs(s0.energy - shoot);
    Detail d;
    d.os.precision(10);
    d("E0", s0.energy)("E0_shooting", shoot)("rel", rel_m)("rel_shooting", rel_s)("diff", agree);
    report(1, rel_m <= 5e-3 && rel_s <= 5e-3 && agree <= 1e-3, d.str());
  }

  std::vector<Kernel> family;
  for (double e : sweep) family.push_back(energy_shift(v0, s0, e));

  {  // 2
    const auto gq = build_momentum_grid<quad>(128, quad(4), quad(40));
    const auto vq = gaussian_momentum_kernel<quad>(quad(-30), quad(0.5), gq);
    const auto sq = negative_energy_states(vq).front();
    const Eigen::MatrixXcd tq0 = half_on_shell_T_matrix(vq);
    const auto pc0 = phase_curve(v0);
    double res = 0, dt = 0, dphase = 0;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      res = std::max(res, schrodinger_residual(family[i], s0.phi, sweep[i]));
      const auto shifted = rank_one_update(vq, sq.phi, sq.phi, quad(sweep[i]) - sq.energy);
      dt = std::max(dt, (half_on_shell_T_matrix(shifted) - tq0).cwiseAbs().maxCoeff());
      const auto pc = phase_curve(family[i]);
      for (Eigen::Index j = 0; j < pc.delta.size(); ++j) dphase = std::max(dphase, mod_pi(pc.delta(j) - pc0.delta(j)));
    }
    Detail d;
    d("residual", res)("dT_quad", dt)("dphase", dphase);
    report(2, res <= 1e-8 && dt <= 1e-8 && dphase <= 1e-6, d.str());
  }

  {  // 3
    const auto c0 = bic_census(v0);
    const auto c1 = bic_census(family[3]);
    const auto cz = bic_census(family[2]);
    const double l0 = std::abs(c0.delta0 - c0.deltaInf - std::numbers::pi);
    const double l1 = std::abs(c1.delta0 - c1.deltaInf - std::numbers::pi);
    const bool ok = c0.N_total == 1 && c0.N_minus == 1 && c0.N_plus == 0 && c1.N_total == 1 && c1.N_minus == 0 &&
                    c1.N_plus == 1 && l0 <= 0.05 && l1 <= 0.05 && cz.indeterminate;
    Detail d;
    d("seed", std::to_string(c0.N_total) + "," + std::to_string(c0.N_minus) + "," + std::to_string(c0.N_plus));
    d("E=1", std::to_string(c1.N_total) + "," + std::to_string(c1.N_minus) + "," + std::to_string(c1.N_plus));
    d("levinson_err_seed", l0)("levinson_err_E1", l1)("E=0_indeterminate", cz.indeterminate ? "yes" : "no");
    report(3, ok, d.str());
  }

  {  // 4
    Detail d;
    const bool ok = signature_checks(v0, s0, d);
    report(4, ok, d.str());
  }

  {  // 5
    Detail d;
    const bool ok = extraction_checks(v0, s0, d);
    const auto vp = s_space_perturb(v0, s0, gaussian_momentum_kernel(-40.0, 0.5, g), 1.0);
    const auto v4 = energy_shift(vp, s0, 4.0);
    const auto negatives = negative_energy_states(v4).size();
    const auto bics = bics_of(sb_decompose(v4));
    const bool two_ok = negatives == 1 && bics.size() == 1 && std::abs(bics[0].energy / 4 - 1) <= 1e-3;
    d("extra_negatives", negatives)("bics_with_extra", bics.size());
    report(5, ok && two_ok, d.str());
  }

  {  // 6
    const auto rg = build_radial_grid(400, 8.0);
    const Eigen::VectorXd phi_r = wavefunction_to_coordinate(s0, g, rg);
    const auto n0 = vb_profile_node(phi_r, rg, 0.0);
    const auto n4 = vb_profile_node(phi_r, rg, 4.0);
    const auto own = vb_profile_node(phi_r, rg, s0.energy);
    const auto literal = vb_profile_node(phi_r, rg, e_ref);
    const auto rg_k = build_radial_grid(120, 4.0);
    Kernel dv = family[4];
    dv.values -= v0.values;
    const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(momentum_to_coordinate(dv, rg_k).values).singularValues();
    const double ratio = sv(1) / sv(0);
    const bool ok = n0 && std::abs(*n0 - 0.67) <= 0.02 && n4 && std::abs(*n4 - 0.54) <= 0.02 && !own && ratio <= 1e-6;
    Detail d;
    d("node_E0", n0.value_or(std::nan("")))("node_E4", n4.value_or(std::nan("")));
    d("node_at_" + std::to_string(s0.energy), own ? std::to_string(*own) : "none");
    d("node_at_-5.373", literal ? std::to_string(*literal) : "none")("sv_ratio", ratio);
    report(6, ok, d.str());
  }

  {  // 7
    const Eigen::MatrixXcd t = half_on_shell_T_matrix(v0);
    const auto samples = on_shell_samples(v0);
    const auto states = negative_energy_states(v0);
    const auto good = verify_conditions_AB(t, samples, states, g);
    const auto bad = verify_conditions_AB(t, samples, {orthogonal_probe_state(states, g)}, g);
    const double worst = std::max(good.a, good.b), wrong = std::max(bad.a, bad.b);
    Detail d;
    d("A", good.a)("B", good.b)("wrong", wrong)("factor", wrong / worst);
    report(7, worst <= 1e-5 && wrong >= 100 * worst, d.str());
  }

  {  // 8
    const auto vp = s_space_perturb(v0, s0, gaussian_momentum_kernel(5.0, 0.5, g), 1.0);
    const double res = schrodinger_residual(vp, s0);
    const double dd = (phase_curve(vp).delta - phase_curve(v0).delta).cwiseAbs().maxCoeff();
    Detail d;
    d("residual", res)("max_dphase", dd);
    const bool sig = signature_checks(vp, s0, d);
    const bool ext = extraction_checks(vp, s0, d);
    report(8, res <= 1e-8 && dd > 1e-2 && sig && ext, d.str());
  }

  {  // 9
    bool ok = true;
    Detail d;
    for (auto [k, a] : {std::pair{1.0, 10.0}, std::pair{2.0, 5.0}}) {
      const auto c = cli::vnw_checks(vnw_build(k, a, build_radial_grid(4000, 50 / k)));
      ok = ok && c.residual <= 1e-6 && std::abs(c.slope - 4) <= 0.1 && c.tail_min >= -24 && c.tail_max <= -8;
      const std::string tag = "(k=" + cli::energy_label(k) + ")";
      d("residual" + tag, c.residual)("slope" + tag, c.slope)("tail" + tag,
                                                             cli::energy_label(c.tail_min) + ".." + cli::energy_label(c.tail_max));
    }
    report(9, ok, d.str());
  }

  {  // 10
    const auto m = tuned_separable_model([](double k) { return std::exp(-k * k); }, 1.0, g);
    const auto v = separable_kernel(m);
    const double res = schrodinger_residual(v, separable_bic(m));
    auto detuned = m;
    detuned.lambda *= 1 + 1e-3;
    bool rejected = false;
    try {
      separable_bic(detuned);
    } catch (const NotABicError&) {
      rejected = true;
    }
    const auto c = bic_census(v);
    Detail d;
    d("lambda_c", m.lambda)("residual", res)("detuned_rejected", rejected ? "yes" : "no")("N_plus", c.N_plus);
    report(10, res <= 1e-6 && rejected && c.N_plus == 1, d.str());
  }

  {  // 11
    const auto root = fs::temp_directory_path() / "bicforge_acceptance";
    fs::remove_all(root);
    bool ran = true;
    for (const char* run : {"a", "b"}) {
      const std::string out = (root / run).string();
      const char* argv[] = {"bic-forge", "--out", out.c_str(), "reproduce-paper"};
      std::ostringstream so, se;
      ran = ran && cli::dispatch(4, argv, so, se) == 0;
    }
    const auto a = tree(root / "a"), b = tree(root / "b");
    Detail d;
    d("files", a.size());
    report(11, ran && !a.empty() && a == b, d.str());
    fs::remove_all(root);
  }

  return failures ? 1 : 0;
}
