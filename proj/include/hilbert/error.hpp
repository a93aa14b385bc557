#pragma once

#include <stdexcept>
#include <string>

namespace hilbert {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Positivity loss, CFL violation, solver stagnation.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

} // namespace hilbert
