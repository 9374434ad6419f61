#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dau {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller supplied an out-of-domain argument or malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in a state its contract forbids.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IntegrationBlowup : public NumericError {
 public:
  IntegrationBlowup(std::size_t step, const std::string& what)
      : NumericError(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dau
