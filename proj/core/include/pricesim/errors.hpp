#pragma once

#include <stdexcept>
#include <string>

namespace pricesim {

// Invalid scenario/agent/state configuration. Surfaces before any step runs.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical fault, e.g. a non-finite gradient from a misconfigured
// learning rate. Carries the offending step index when raised inside a run.
class SimulationFault : public std::runtime_error {
public:
    explicit SimulationFault(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pricesim
