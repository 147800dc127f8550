#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rlk {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

// argument outside the supported interval [lo, hi]
struct RangeError : Error {
  RangeError(const std::string& what, double lo, double hi)
      : Error(what), lo(lo), hi(hi) {}
  double lo;
  double hi;
};

struct NonConvergence : Error {
  NonConvergence(const std::string& what, double residual, int iterations)
      : Error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

struct CoincidentMomenta : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct NotOrthogonal : Error {
  NotOrthogonal(const std::string& what, double ratio) : Error(what), ratio(ratio) {}
  double ratio;
};

struct CflViolation : Error {
  using Error::Error;
};

struct InadmissibleState : Error {
  InadmissibleState(const std::string& what, std::size_t cell) : Error(what), cell(cell) {}
  std::size_t cell;
};

// run-time monitor failures: boundary leak, NaN, positivity, Gauss residual
struct MonitorFailure : Error {
  MonitorFailure(const std::string& what, long step) : Error(what), step(step) {}
  long step;
};

struct ConfigError : Error {
  ConfigError(const std::string& field, const std::string& msg)
      : Error(field + ": " + msg), field(field) {}
  std::string field;
};

}  // namespace rlk
