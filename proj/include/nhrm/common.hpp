#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nhrm {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition or malformed input (bad dimension, bad parameter).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A numerical procedure failed: singular solve, divergence, non-convergence.
/// `value` carries the diagnostic quantity (residual, reciprocal condition
/// number, ...) that triggered the failure.
class NumericalError : public Error {
public:
  NumericalError(const std::string& what, double value)
      : Error(what), value_(value) {}
  double value() const noexcept { return value_; }

private:
  double value_;
};

/// Normalized average <x> = (1/N) sum_i x_i.
template <typename Derived>
auto mean(const Eigen::MatrixBase<Derived>& x) {
  return x.sum() / static_cast<double>(x.size());
}

/// Normalized trace tr_N = (1/N) tr.
template <typename Derived>
auto trace_n(const Eigen::MatrixBase<Derived>& a) {
  return a.trace() / static_cast<double>(a.rows());
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace nhrm
