#pragma once

#include <stdexcept>
#include <string>

namespace magnonlink {

/// Bad user input: out-of-range parameters, malformed scenarios, unknown names.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// All of g, J and Gamma vanish (or the amplitude ratio is identically zero).
class DecoupledError : public InputError {
public:
    using InputError::InputError;
};

/// A numerical kernel failed: step-size underflow, non-finite state, no attractor.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoSynchronizationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace magnonlink
