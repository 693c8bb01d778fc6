#pragma once

#include <stdexcept>
#include <string>

namespace modred {

/// Violated precondition: bad dimensions, nonpositive parameters, empty inputs.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical operation could not be carried out (singular solve, unstable
/// model handed to a Lyapunov solver, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace modred
