#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace qflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class NumericalInputError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Raised when a conformal factor has a non-positive sample.
class PositivityError : public Error {
 public:
  PositivityError(const std::array<double, 3>& where, double value);
  std::array<double, 3> location;
  double value;
};

class RecenteringError : public Error {
 public:
  explicit RecenteringError(double best_residual);
  double best_residual;
};

class NotMorseError : public Error {
 public:
  NotMorseError(const std::array<double, 3>& where, double min_eigenvalue);
  std::array<double, 3> location;
  double min_eigenvalue;
};

class UnreliableLandscapeError : public Error {
 public:
  using Error::Error;
};

class SnapshotError : public Error {
 public:
  SnapshotError(int line, const std::string& reason);
  int line;
};

class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& key, const std::string& reason);
  int line;
  std::string key;
  std::string reason;
};

}  // namespace qflow
