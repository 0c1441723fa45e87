#pragma once

#include <stdexcept>
#include <string>

namespace sharedspace {

// Scenario file cannot be parsed or violates a validation rule.
class ScenarioError : public std::runtime_error {
  public:
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

// Path planning failed (endpoint inside an obstacle, unreachable goal).
class PlanningError : public std::runtime_error {
  public:
    explicit PlanningError(const std::string& what) : std::runtime_error(what) {}
};

// The simulation produced an invalid state (non-finite values).
class SimulationError : public std::runtime_error {
  public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

// Trajectory comparison is impossible (no overlapping time range, unknown ids).
class ComparisonError : public std::runtime_error {
  public:
    explicit ComparisonError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sharedspace
