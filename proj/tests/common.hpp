#pragma once

#include <bicforge/sbdecomp.hpp>

namespace testing_support {

using namespace bicforge;

inline const MomentumGrid& grid128() {
  static const MomentumGrid g = build_momentum_grid(128, 4.0, 40.0);
  return g;
}

inline const Kernel& seed() {
  static const Kernel v = gaussian_momentum_kernel(-30.0, 0.5, grid128());
  return v;
}

inline const BoundState& seed_state() {
  static const BoundState s = negative_energy_states(seed()).front();
  return s;
}

inline double seed_potential(double r) { return -30.0 * std::exp(-r * r / 0.25); }

}  // namespace testing_support
