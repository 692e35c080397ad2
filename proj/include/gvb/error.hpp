#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gvb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    std::size_t position;
    ParseError(const std::string& what, std::size_t pos)
        : Error(what + " at position " + std::to_string(pos)), position(pos) {}
};

struct UndeclaredSymbol : Error {
    std::string symbol;
    explicit UndeclaredSymbol(const std::string& name)
        : Error("undeclared symbol '" + name + "'"), symbol(name) {}
};

struct DomainError : Error {
    using Error::Error;
};

struct DegreeError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct SingularError : Error {
    using Error::Error;
};

}  // namespace gvb
