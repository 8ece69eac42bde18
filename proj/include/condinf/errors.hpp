#pragma once

#include <stdexcept>
#include <string>

namespace condinf {

// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// A documented precondition was broken (dimension mismatch, bad range).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// A quantity left its numeric domain (non-finite likelihood, zero variance).
class NumericDomainError : public Error {
public:
    using Error::Error;
};

// An iterative optimizer did not converge within its budget.
class OptimizerFailure : public Error {
public:
    using Error::Error;
};

// A Hessian lacks the curvature required at a mode.
class CurvatureError : public Error {
public:
    using Error::Error;
};

// A matrix that must be inverted is singular or near-singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

// A reduced linear system has a null direction.
class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

// Malformed input file.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace condinf
