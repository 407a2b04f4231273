#pragma once

#include <stdexcept>
#include <string>

namespace dbmi {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input: malformed distribution, out-of-range category, size mismatch.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values in model evaluation or optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Endpoint pair unreachable under the reference kernel (alpha = 0 pathologies).
class InfeasibleBridgeError : public Error {
 public:
  using Error::Error;
};

// KL(p || q) with p_i > 0 where q_i = 0: the divergence is infinite.
class SupportViolationError : public Error {
 public:
  using Error::Error;
};

// Conditioning event has zero probability under the tabulated process.
class ZeroMassError : public Error {
 public:
  using Error::Error;
};

// Tabulation or enumeration cap exceeded.
class SizeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dbmi
