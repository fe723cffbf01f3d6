#pragma once

#include <stdexcept>
#include <string>

namespace fbmlab {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Time grids (or sample grids) that were required to agree do not.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Circulant embedding produced an eigenvalue below the clipping tolerance.
class EmbeddingNotNonnegative : public Error {
 public:
  using Error::Error;
};

/// Numerical Cholesky factorization of an fBm covariance failed.
class CovarianceNotPD : public Error {
 public:
  using Error::Error;
};

/// Picard iteration did not reach tolerance and the contraction constant is >= 1.
class NoContraction : public Error {
 public:
  NoContraction(const std::string& what, double theta1, double final_delta)
      : Error(what), theta1_(theta1), final_delta_(final_delta) {}
  double theta1() const noexcept { return theta1_; }
  double final_delta() const noexcept { return final_delta_; }

 private:
  double theta1_;
  double final_delta_;
};

/// A closed-form bound was requested outside the parameter range where it exists.
class ThresholdViolated : public Error {
 public:
  using Error::Error;
};

}  // namespace fbmlab
