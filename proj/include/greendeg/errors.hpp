#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace greendeg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A series is zero to its known precision, so its valuation is only bounded
/// below. Callers must raise precision instead of guessing.
class IndistinguishableFromZero : public Error {
public:
    explicit IndistinguishableFromZero(std::int64_t lower_bound)
        : Error("series is zero to precision O(t^" + std::to_string(lower_bound) + ")"),
          lower_bound_(lower_bound) {}

    std::int64_t lower_bound() const noexcept { return lower_bound_; }

private:
    std::int64_t lower_bound_;
};

class NotASquare : public Error {
public:
    using Error::Error;
};

class RootObstruction : public Error {
public:
    using Error::Error;
};

class ZeroArgumentWithPole : public Error {
public:
    ZeroArgumentWithPole() : Error("evaluation at t = 0 of a series with a pole") {}
};

class ExponentOverflow : public Error {
public:
    ExponentOverflow() : Error("exponent arithmetic overflowed 64-bit range") {}
};

class PrecisionExhausted : public Error {
public:
    explicit PrecisionExhausted(std::int64_t budget)
        : Error("precision budget " + std::to_string(budget) + " exhausted"), budget_(budget) {}

    std::int64_t budget() const noexcept { return budget_; }

private:
    std::int64_t budget_;
};

class NonFinite : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    DegenerateFit() : Error("fit needs at least two distinct radii") {}
};

class InconsistentEvidence : public Error {
public:
    using Error::Error;
};

class PuiseuxObstruction : public Error {
public:
    using Error::Error;
};

/// Parse failure with a 1-based line/column position.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace greendeg
