#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace phrm {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

// Error hierarchy. Every failure the library reports derives from Error so
// the CLI can map categories onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or dimension (n < 2m, m < 1, bad field values).
struct ConfigError : Error {
    using Error::Error;
};

// Wishart block with a (numerically) zero eigenvalue.
struct DegenerateEnsembleError : Error {
    using Error::Error;
};

// Two Wishart eigenvalues closer than the tie threshold.
struct DegenerateSpectrumError : Error {
    using Error::Error;
};

// Singular Û where an inverse square root is required.
struct RankError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct UnsupportedParameterError : Error {
    using Error::Error;
};

// ODE oracle failed to meet its step-halving criterion.
struct OracleError : Error {
    using Error::Error;
};

struct ConditioningError : Error {
    using Error::Error;
};

struct NumericalValidityError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Largest absolute entry; the norm every tolerance in this project is stated in.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
inline Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

}  // namespace phrm
