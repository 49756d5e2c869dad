#pragma once

#include <stdexcept>
#include <string>

namespace adgda {

// Invalid configuration or inconsistent parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable, truncated or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite iterate or loss during a run.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long round, const std::string& what)
      : std::runtime_error("diverged at round " + std::to_string(round) + ": " + what),
        round_(round) {}
  long round() const noexcept { return round_; }

 private:
  long round_;
};

// Numerical routine did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adgda
