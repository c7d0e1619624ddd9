// error.hpp - exception types shared by every cpim module
#pragma once

#include <stdexcept>
#include <string>

namespace cpim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector/matrix sizes or N disagree between arguments.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Permutation index outside [1, N!] or codeword index outside [1, K].
class IndexError : public Error {
public:
    using Error::Error;
};

class InvalidPermutationError : public Error {
public:
    using Error::Error;
};

/// A bad argument value that is not a size mismatch (negative N0, P too large, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Exhaustive search or emulation would exceed the configured work budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Ill-conditioned or singular linear algebra.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cpim
