#pragma once

#include <stdexcept>
#include <string>

namespace bicforge {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// a documented precondition of an operation does not hold
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExtractionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AmbiguousCensusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NormalizabilityError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotABicError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bicforge
