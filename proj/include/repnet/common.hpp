#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace repnet {

using PointId = std::uint32_t;

// A construction could not be completed (search budget exhausted, schedule
// infeasible, level beyond the materialized window).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input or configuration rejected before any work started.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace repnet
