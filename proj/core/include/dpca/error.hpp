#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace dpca {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or ranks that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix or sample entry that is NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine stopped without meeting its residual bound.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved_residual)
      : Error(what), residual_(achieved_residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Not enough (or not usable) observations for an estimator.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Two observations closer than the pair policy's threshold.
class DegeneratePairError : public DataError {
 public:
  DegeneratePairError(std::size_t first, std::size_t second)
      : DataError("degenerate observation pair (" + std::to_string(first) +
                  ", " + std::to_string(second) + ")"),
        first_(first),
        second_(second) {}
  std::size_t first() const noexcept { return first_; }
  std::size_t second() const noexcept { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

/// Transport or coordinator protocol failure; carries the machine when known.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what,
                         std::optional<std::uint32_t> machine = std::nullopt)
      : Error(machine ? "machine " + std::to_string(*machine) + ": " + what
                      : what),
        machine_(machine) {}
  std::optional<std::uint32_t> machine_id() const noexcept { return machine_; }

 private:
  std::optional<std::uint32_t> machine_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpca
