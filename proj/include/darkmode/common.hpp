#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace darkmode {

using Complex = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;
using Vec2c = Eigen::Vector2cd;
using Mat4c = Eigen::Matrix4cd;
using Vec4c = Eigen::Vector4cd;
using MatXc = Eigen::MatrixXcd;
using VecXc = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

// Ordinary frequency (Hz) <-> angular frequency (rad/s). All internal
// quantities are angular; conversions happen at I/O boundaries only.
constexpr double hz(double f_hz) { return kTwoPi * f_hz; }
constexpr double to_hz(double omega) { return omega / kTwoPi; }

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented invariant or schema rule.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: instability, singular solve, non-convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace detail

}  // namespace darkmode
