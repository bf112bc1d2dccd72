#pragma once

#include <stdexcept>
#include <string>

namespace gmsurf {

// Invalid user input: CLI arguments, config files, parameter guards.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken geometry: degenerate triangles, non-closed meshes.
struct MeshError : std::runtime_error {
  explicit MeshError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative solver failed to reach the requested tolerance.
struct SolverError : std::runtime_error {
  SolverError(const std::string& msg, double residual_, int iterations_)
      : std::runtime_error(msg), residual(residual_), iterations(iterations_) {}
  double residual;
  int iterations;
};

// A quantity that must be nonnegative/positive came out negative (or a nodal
// inhibitor value fell below the evaluation floor). Signals a scheme or mesh
// precondition failure; never silently repaired.
struct PositivityError : std::runtime_error {
  PositivityError(const std::string& msg, long node_, double value_)
      : std::runtime_error(msg), node(node_), value(value_) {}
  long node;
  double value;
};

// Internal cross-check failed (e.g. flux reconstruction identity): the inputs
// fed to an algorithm were mutually inconsistent.
struct ConsistencyError : std::runtime_error {
  explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Simulation-level failure: a state invariant broke at a given step.
struct SimError : std::runtime_error {
  SimError(const std::string& msg, long step_, long node_)
      : std::runtime_error(msg), step(step_), node(node_) {}
  long step;
  long node;
};

}  // namespace gmsurf
