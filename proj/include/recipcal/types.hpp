#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace recipcal {

using cd = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cd kJ{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A vector could not be divided by its first element.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

/// Beam pair is (numerically) orthogonal to the channel.
class DegenerateChannelError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

class PerturbationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Divides v by its first element. Throws NormalizationError when
/// |v[0]| < tol.
CVector normalize_first(const CVector& v, double tol = 0.0);

/// Ratio of largest to smallest singular value (inf for singular input).
double condition_number(const CMatrix& m);

}  // namespace recipcal
