#pragma once

#include <stdexcept>
#include <string>

namespace mtgw {

/// Base of every domain error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpecError : Error {
  SpecError(const std::string& what, int law = -1) : Error(what), law_index(law) {}
  /// 0-based index of the offending law, -1 when not law-specific.
  int law_index;
};

struct NotPrimitive : Error { using Error::Error; };
struct NotCritical : Error { using Error::Error; };
struct NotAperiodic : Error { using Error::Error; };
struct ZeroMass : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct CapExceeded : Error { using Error::Error; };
struct DimensionTooLarge : Error { using Error::Error; };
struct NotInteriorPoint : Error { using Error::Error; };
struct ZeroDenominator : Error { using Error::Error; };
struct InvalidPartition : Error { using Error::Error; };
struct NoRoot : Error { using Error::Error; };
struct PreconditionFailed : Error { using Error::Error; };
struct InexactSpectralData : Error { using Error::Error; };

struct NoConvergence : Error {
  NoConvergence(const std::string& what, double r) : Error(what), residual(r) {}
  double residual;
};

struct Exhausted : Error {
  Exhausted(const std::string& what, double rate) : Error(what), acceptance_rate(rate) {}
  double acceptance_rate;
};

}  // namespace mtgw
