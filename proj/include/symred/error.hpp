#pragma once

#include <stdexcept>
#include <string>

namespace symred {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, int line, int column)
        : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class UndeclaredSymbol : public Error {
public:
    explicit UndeclaredSymbol(const std::string& name) : Error("undeclared symbol '" + name + "'"), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class DuplicateName : public Error {
public:
    explicit DuplicateName(const std::string& name) : Error("duplicate name '" + name + "'") {}
};

class MalformedSection : public Error {
public:
    using Error::Error;
};

/// A run names something the bundle does not define, or asks for a check it cannot perform.
class UsageError : public Error {
public:
    using Error::Error;
};

class UnboundSymbol : public Error {
public:
    explicit UnboundSymbol(const std::string& name) : Error("unbound symbol '" + name + "'"), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Evaluation left the real domain (ln of non-positive, sqrt of negative, 1/0, overflow).
class DomainFault : public Error {
public:
    using Error::Error;
};

class IterationCapExceeded : public Error {
public:
    using Error::Error;
};

class ConflictingConstraints : public Error {
public:
    using Error::Error;
};

class InsufficientProlongationOrder : public Error {
public:
    using Error::Error;
};

class SingularImplicitSystem : public Error {
public:
    using Error::Error;
};

class UnreducedVariable : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& msg, double last_iterate, double last_residual)
        : Error(msg), last_iterate_(last_iterate), last_residual_(last_residual) {}
    double last_iterate() const noexcept { return last_iterate_; }
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_iterate_;
    double last_residual_;
};

class ToleranceNotMet : public Error {
public:
    using Error::Error;
};

} // namespace symred
