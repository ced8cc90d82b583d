#pragma once

#include <stdexcept>
#include <string>

namespace cks {

/// Invalid arguments: unknown catalog names, out-of-range parameters,
/// malformed grids or specs.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A stated precondition of a numerical routine does not hold.
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An infimum/supremum search ran off the expanded bracket.
class DivergentTransform : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A series could not be certified within its term budget.
class TruncationFailure : public std::runtime_error {
 public:
  TruncationFailure(const std::string& what, double partial_log_value, int degree)
      : std::runtime_error(what), partial_log_value_(partial_log_value), degree_(degree) {}

  double partial_log_value() const noexcept { return partial_log_value_; }
  int degree() const noexcept { return degree_; }

 private:
  double partial_log_value_;
  int degree_;
};

}  // namespace cks
