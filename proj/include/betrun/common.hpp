#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace betrun {

// All budget arithmetic is integer milliseconds; optimizer work time is
// tracked in integer microseconds so step costs stay exact.
using Millis = std::chrono::milliseconds;
using Micros = std::chrono::microseconds;

using SubjectId = std::string;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// No budget split exists: n * t_k would exceed t_total.
class InfeasibleSplitError : public Error {
 public:
  using Error::Error;
};

// The evaluation window rounds to zero milliseconds.
class DegenerateEvaluationError : public Error {
 public:
  using Error::Error;
};

// The adapter could not start an instance (unknown subject, unwritable
// checkpoint location, resource exhaustion).
class SpawnError : public Error {
 public:
  using Error::Error;
};

// reference_optimum refuses subjects too large for exhaustive search.
class SubjectTooLargeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace betrun
