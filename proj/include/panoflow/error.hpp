#pragma once

#include <stdexcept>
#include <string>

namespace panoflow {

/// Error classes. Each maps onto one CLI exit code (see exit_code()).
enum class ErrorKind { Usage, Contract, Format, Io, Numeric, Lookup };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), m_kind(kind) {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

/// A precondition of an operation was violated by its caller.
struct ContractError : Error {
    explicit ContractError(const std::string& what) : Error(ErrorKind::Contract, what) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// A keyed resource (e.g. a precomputed flow file) does not exist.
struct LookupError : Error {
    explicit LookupError(const std::string& what) : Error(ErrorKind::Lookup, what) {}
};

/// 0 ok, 2 usage, 3 contract, 4 format, 5 I/O (lookup included), 6 numeric.
constexpr int exit_code(ErrorKind kind) noexcept
{
    switch(kind)
    {
        case ErrorKind::Usage:    return 2;
        case ErrorKind::Contract: return 3;
        case ErrorKind::Format:   return 4;
        case ErrorKind::Io:       return 5;
        case ErrorKind::Lookup:   return 5;
        case ErrorKind::Numeric:  return 6;
    }
    return 1;
}

inline void require(bool condition, const std::string& message)
{
    if(!condition) throw ContractError(message);
}

}
