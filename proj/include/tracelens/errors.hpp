#pragma once

#include <stdexcept>
#include <string>

namespace tracelens {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input: unparseable files, unknown state or label
// names, dimension mismatches, bad CLI arguments. CLI exit code 2.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what) {}
};

// Numeric failure: stochasticity violations in computed matrices, solver
// non-convergence, non-finite likelihoods. CLI exit code 3.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

} // namespace tracelens
