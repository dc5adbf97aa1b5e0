#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rissec {

/// Raised when a caller breaks an operation's documented precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string &what) {
  if (!condition) throw ContractViolation(what);
}

template <typename Scalar>
using Complex = std::complex<Scalar>;

/// Dense complex matrix. Every channel, precoder and RIS matrix lives in one.
template <typename Scalar>
using CMatrix = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using CVector = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CMat = CMatrix<double>;
using CVec = CVector<double>;
using RVec = RVector<double>;
using cdouble = Complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA> &a, const Eigen::MatrixBase<DerivedB> &b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out = a * b;
  return out;
}

template <typename Derived>
auto hermitian(const Eigen::MatrixBase<Derived> &a) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out =
      a.adjoint();
  return out;
}

template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real frob_norm(
    const Eigen::MatrixBase<Derived> &a) {
  return a.norm();
}

/// |z|^2 without the square root.
template <typename Scalar>
inline Scalar abs2(const Complex<Scalar> &z) {
  return std::norm(z);
}

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace rissec
