#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mlr {

/// Malformed or inconsistent input (bad shapes, non-finite values, parse errors).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operand shapes disagree (d, n or N mismatch).
class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

/// A combinatorial enumeration would exceed its configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, double count, double budget)
      : std::runtime_error(what + ": " + std::to_string(static_cast<std::uint64_t>(count)) +
                           " exceeds budget " + std::to_string(static_cast<std::uint64_t>(budget))),
        count_(count),
        budget_(budget) {}

  double count() const { return count_; }
  double budget() const { return budget_; }

 private:
  double count_;
  double budget_;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw InputError(message);
}

inline void require_dims(bool ok, const std::string& message) {
  if (!ok) throw DimensionMismatch(message);
}

}  // namespace mlr
