#pragma once

// Quad-precision scalar for the core solvers. Needs GNU extensions
// (-std=gnu++20 -fext-numeric-literals) and libquadmath.

#include <limits>

#include <boost/multiprecision/float128.hpp>
#include <Eigen/Core>

namespace bicforge {
using quad = boost::multiprecision::float128;
}

namespace Eigen {
template <>
struct NumTraits<bicforge::quad> : GenericNumTraits<bicforge::quad> {
  using q = bicforge::quad;
  typedef q Real;
  typedef q NonInteger;
  typedef q Nested;
  typedef q Literal;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 4,
    MulCost = 8
  };
  static inline q epsilon() { return std::numeric_limits<q>::epsilon(); }
  static inline q dummy_precision() { return q(1e-28); }
  static inline q highest() { return (std::numeric_limits<q>::max)(); }
  static inline q lowest() { return -(std::numeric_limits<q>::max)(); }
  static inline q infinity() { return std::numeric_limits<q>::infinity(); }
  static inline q quiet_NaN() { return std::numeric_limits<q>::quiet_NaN(); }
  static inline int digits10() { return 33; }
};
}  // namespace Eigen
