#pragma once

#include <stdexcept>
#include <string>

namespace gtcn {

/// Operand shapes disagree with an operation's contract.
class DimensionError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation (log of a non-positive value, ...).
class DomainError : public std::domain_error {
   public:
    using std::domain_error::domain_error;
};

/// API misuse: non-scalar backward root, empty sample list, ...
class ContractError : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

/// A softmax row with no unmasked entry.
class InvalidNeighborhoodError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
   public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const { return line_; }

   private:
    std::size_t line_;
};

class DuplicateRecordError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint has a wrong magic or unsupported version.
class FormatError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint is truncated or internally inconsistent.
class CorruptionError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace gtcn
