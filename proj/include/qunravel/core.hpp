#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qunravel {

using cplx = std::complex<double>;
using Ket = Eigen::VectorXcd;
using Operator = Eigen::MatrixXcd;
/// Density matrices share the dense operator storage; use
/// hilbert::check_density_matrix to validate one.
using DensityMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr cplx I{0.0, 1.0};

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: wrong dimensions, non-physical parameters, malformed config.
/// `key` carries a dotted config path when the error comes from a config.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::string key = {})
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A numerical post-condition (unitarity, trace, positivity...) was violated.
class NumericalContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace qunravel
