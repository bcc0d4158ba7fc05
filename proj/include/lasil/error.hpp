#ifndef LASIL_ERROR_HPP
#define LASIL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lasil {

/// Invalid configuration or command-line usage (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or diverging optimisation (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lasil

#endif  // LASIL_ERROR_HPP
