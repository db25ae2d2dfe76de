#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ucrbm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// A problem dimension exceeds a configured cap (statevector, branch table).
class SizeError : public Error {
   public:
    using Error::Error;
};

/// Inconsistent shapes or out-of-domain arguments.
class ArgumentError : public Error {
   public:
    using Error::Error;
};

/// Gate applied while the ancilla is not in the state the protocol expects.
class ProtocolOrderError : public Error {
   public:
    using Error::Error;
};

/// Probabilities or norms drifted beyond tolerance.
class NumericalIntegrityError : public Error {
   public:
    using Error::Error;
};

/// Every importance weight in a batch vanished.
class DegenerateWeightError : public Error {
   public:
    using Error::Error;
};

/// Operator that must be Hermitian is not.
class HermiticityError : public Error {
   public:
    using Error::Error;
};

/// An operator identity failed its dense proportionality check.
class IdentityError : public Error {
   public:
    using Error::Error;
};

/// Malformed text input. Carries the 1-based line number.
class ParseError : public Error {
   public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

   private:
    std::size_t line_;
};

}  // namespace ucrbm
