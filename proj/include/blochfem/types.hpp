#ifndef BLOCHFEM_TYPES_HPP
#define BLOCHFEM_TYPES_HPP

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace blochfem {

using Real = double;
using Complex = std::complex<double>;

using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CSparse = Eigen::SparseMatrix<Complex>;
using CTriplet = Eigen::Triplet<Complex>;

/// Physical point. Horizontal coordinates come first; the vertical coordinate
/// sits at index d-1. Unused trailing components are zero.
using Point = Eigen::Vector3d;

/// Quasi-momentum (and any other horizontal vector). The second component is
/// zero for d = 2.
using Alpha = Eigen::Vector2d;

inline constexpr Real kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

inline Alpha horizontal(const Point& x, int d) {
  return d == 2 ? Alpha(x[0], 0.0) : Alpha(x[0], x[1]);
}

inline Real vertical(const Point& x, int d) { return x[d - 1]; }

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input (configuration, arguments, shapes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A linear solve failed (breakdown, zero pivot without fallback, ...).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, Real residual = -1.0)
      : Error(what), residual_(residual) {}
  Real residual() const noexcept { return residual_; }

 private:
  Real residual_;
};

/// An iteration hit its cap before reaching the requested tolerance.
class NonConvergence : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace blochfem

#endif  // BLOCHFEM_TYPES_HPP
