#pragma once

#include <stdexcept>
#include <string>

namespace covspec
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameter value (kernel length, histogram bins, rank, lag...).
class ParameterError : public Error
{
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number.
class ParseError : public Error
{
public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input value outside the domain of a mapping (e.g. log of a non-positive price).
class DomainError : public Error
{
public:
    using Error::Error;
};

/// Not enough history to evaluate the requested quantity.
class InsufficientDataError : public Error
{
public:
    using Error::Error;
};

/// Caller broke a documented precondition (non-symmetric matrix, missing eigenvectors...).
class ContractError : public Error
{
public:
    using Error::Error;
};

/// Degenerate data: zero-variance asset, constant matrix series.
class DegenerateError : public Error
{
public:
    using Error::Error;
};

/// Failure inside a numerical routine.
class NumericalError : public Error
{
public:
    using Error::Error;
};

} // namespace covspec
