#pragma once

#include <stdexcept>
#include <string>

namespace spi {

// Contract violation on an operation's inputs (bad rank, alpha outside (0,1), ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Inconsistent configuration across objects (size mismatch, bad method/parameter combo).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Pooled ties where a rank statistic requires distinct values. The caller decides
// whether to jitter; we never inject randomness behind its back.
class TieError : public std::runtime_error {
 public:
  explicit TieError(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateFitError : public std::runtime_error {
 public:
  explicit DegenerateFitError(const std::string& what) : std::runtime_error(what) {}
};

// Adaptive quadrature failed to reach tolerance; carries the best estimate so far.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate)
      : std::runtime_error(what), estimate_(estimate) {}
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spi
