#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cauchyflow {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Field contains NaN/Inf entries, or values violate a basic precondition.
class InvalidFieldError : public Error {
  public:
    using Error::Error;
};

/// Two operands live on different grids or have incompatible dimension.
class GridMismatchError : public Error {
  public:
    using Error::Error;
};

/// Curl/divergence inversion was fed a curl source with nonzero divergence.
class InconsistentSourceError : public Error {
  public:
    using Error::Error;
};

/// The Lagrangian map folded over: det(grad x) <= 0 somewhere.
class MapDegenerateError : public Error {
  public:
    MapDegenerateError(std::string what, std::int64_t flat_index, double det)
        : Error(std::move(what)), flat_index(flat_index), det(det) {}
    std::int64_t flat_index;  ///< worst grid point (flattened index)
    double det;               ///< determinant value there
};

/// Unit-determinant (or similar) constraint violated beyond tolerance.
class ConstraintViolatedError : public Error {
  public:
    ConstraintViolatedError(std::string what, double measured, double tolerance)
        : Error(std::move(what)), measured(measured), tolerance(tolerance) {}
    double measured;
    double tolerance;
};

/// Required optional data (e.g. pressure history) is missing from a state.
class MissingDataError : public Error {
  public:
    using Error::Error;
};

/// Series evaluated outside its trust region.
class ExtrapolationError : public Error {
  public:
    using Error::Error;
};

/// Time series of states is not uniformly spaced.
class NonUniformSpacingError : public Error {
  public:
    using Error::Error;
};

/// ODE integrator could not reach the requested tolerance in budget.
class IntegrationError : public Error {
  public:
    using Error::Error;
};

/// Malformed geometry (open contour, inconsistent surface orientation, ...).
class GeometryError : public Error {
  public:
    using Error::Error;
};

/// Run configuration failed schema validation. CLI maps this to exit code 2.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// File could not be read/written or has a malformed layout.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace cauchyflow
