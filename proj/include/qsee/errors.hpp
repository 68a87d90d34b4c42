#pragma once

#include <stdexcept>
#include <string>

namespace qsee {

/// Invalid parameters or inconsistent inputs detected before any computation.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Failure during a computation (non-finite data, failed factorization, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qsee
