#pragma once

#include <stdexcept>
#include <string>

namespace qsep {

// ---------------------------------------------------------------------------
// Error taxonomy.  InvalidInput covers malformed user-facing data (maps to
// CLI exit code 1); NumericError and its children cover runtime numerical
// failures (exit code 2).
// ---------------------------------------------------------------------------

class InvalidInputError : public std::runtime_error {
public:
  explicit InvalidInputError(const std::string& what)
      : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Evaluation was requested too close to a pole of the rest-space resolvent.
class PoleProximityError : public NumericError {
public:
  PoleProximityError(const std::string& what, double pole)
      : NumericError(what), pole_(pole) {}
  double pole() const { return pole_; }

private:
  double pole_;
};

// Analytic and finite-difference results disagree beyond tolerance.
class ConsistencyError : public NumericError {
public:
  explicit ConsistencyError(const std::string& what) : NumericError(what) {}
};

// The coupling block vanishes: the coupling kernel is undefined.
class DegenerateKernelError : public NumericError {
public:
  explicit DegenerateKernelError(const std::string& what)
      : NumericError(what) {}
};

class ConvergenceError : public NumericError {
public:
  explicit ConvergenceError(const std::string& what) : NumericError(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qsep
