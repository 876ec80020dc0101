#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace zoconex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when an oracle returns a non-finite value; carries the offending point.
class EstimatorError : public Error {
 public:
  EstimatorError(const std::string& what, Vector point) : Error(what), point_(std::move(point)) {}
  const Vector& point() const { return point_; }

 private:
  Vector point_;
};

inline void require_dimension(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(got) +
                         ", expected " + std::to_string(want));
  }
}

}  // namespace zoconex
