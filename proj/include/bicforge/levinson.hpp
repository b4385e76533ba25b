#pragma once

#include <cmath>
#include <string>

#include "scattering.hpp"
#include "spectral.hpp"

namespace bicforge {

struct StateCount {
  int n = 0;
  double residual = 0;  // |(delta0 - delta_inf) / pi - n|, in units of pi
};

struct BicCensus {
  int N_total = 0;
  int N_minus = 0;
  int N_plus = 0;
  double delta0 = 0;
  double deltaInf = 0;
  // a state sits at threshold; Levinson's counting does not cover that case
  bool indeterminate = false;
};

inline StateCount count_states(const PhaseShiftCurve& curve) {
  const double x = (curve.delta0 - curve.delta_inf) / std::numbers::pi;
  StateCount c;
  c.n = static_cast<int>(std::lround(x));
  c.residual = std::abs(x - c.n);
  if (c.residual > 0.25)
    throw AmbiguousCensusError("count_states: phase difference " + std::to_string(x) + " pi is not near an integer");
  return c;
}

inline BicCensus bic_census(const Kernel& v) {
  if (v.symmetry != Symmetry::symmetric) throw ContractError("bic_census: kernel is not symmetric");
  BicCensus c;
  const auto curve = phase_curve(v);
  c.delta0 = curve.delta0;
  c.deltaInf = curve.delta_inf;
  c.N_minus = static_cast<int>(negative_energy_states(v).size());
  if (has_threshold_state(v)) {
    c.indeterminate = true;
    c.N_total = static_cast<int>(std::lround((c.delta0 - c.deltaInf) / std::numbers::pi));
    c.N_plus = 0;
    return c;
  }
  c.N_total = count_states(curve).n;
  c.N_plus = c.N_total - c.N_minus;
  if (c.N_plus < 0)
    throw AmbiguousCensusError("bic_census: phase count " + std::to_string(c.N_total) + " is below the " +
                               std::to_string(c.N_minus) + " negative-energy states");
  return c;
}

}  // namespace bicforge
