#ifndef TURNPIKE_ERRORS_HPP
#define TURNPIKE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace turnpike {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- linear algebra / Riccati ---

class NotStabilizable : public Error {
public:
  using Error::Error;
};

class NotDetectable : public Error {
public:
  using Error::Error;
};

class NotHurwitz : public Error {
public:
  using Error::Error;
};

class NumericalFailure : public Error {
public:
  using Error::Error;
};

// --- ODE integration ---

class IntegrationError : public Error {
public:
  using Error::Error;
};

/// Step control drove the step below the representable minimum, typically
/// because the state is blowing up.
class StepSizeUnderflow : public IntegrationError {
public:
  using IntegrationError::IntegrationError;
};

class NonFiniteDerivative : public IntegrationError {
public:
  using IntegrationError::IntegrationError;
};

// --- manifolds / certification ---

class InvalidBaseline : public Error {
public:
  using Error::Error;
};

class InsufficientHorizons : public Error {
public:
  using Error::Error;
};

// --- CLI / configuration ---

class UnknownSystem : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace turnpike

#endif
