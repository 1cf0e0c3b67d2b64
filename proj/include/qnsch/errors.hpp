#pragma once

#include <stdexcept>
#include <string>

namespace qnsch {

/// Invalid or inconsistent configuration (bad BC combination, bad grid, bad JSON).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A constitutive function or norm was evaluated outside its domain.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN/Inf appeared in the solver.
struct DivergenceError : std::runtime_error {
  int cycle;
  DivergenceError(const std::string& what, int cycle_index)
      : std::runtime_error(what), cycle(cycle_index) {}
};

/// The cycle cap was reached before the residual tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A conservation or stability guard failed during a run.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A scenario observable could not be extracted (e.g. no interface crossing in a column).
struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qnsch
