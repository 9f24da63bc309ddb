#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace linqrl {

// Caller passed arguments that violate a documented precondition.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A maintained numerical quantity drifted out of its contract
// (e.g. a covariance lost positive definiteness).
class NumericalIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data parsed fine but violates a model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; the message carries line/field diagnostics.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Environment generation ran out of redraws before meeting the gap target.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, double best_gap)
      : std::runtime_error(what), best_gap_(best_gap) {}

  // Largest finite gap observed over all rejected draws (-inf if none).
  double best_gap() const noexcept { return best_gap_; }

 private:
  double best_gap_ = -std::numeric_limits<double>::infinity();
};

}  // namespace linqrl
