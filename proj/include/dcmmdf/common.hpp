#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcmmdf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes of the arguments do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A type invariant (simplex rows, symmetry, rank, positivity) does not hold.
class InvariantError : public Error {
public:
    using Error::Error;
};

// An expectation falls outside the support of the requested edge distribution.
class SupportError : public Error {
public:
    using Error::Error;
};

// A numerical routine could not produce a valid answer (infeasible QP,
// singular corner block, rank deficiency mid-projection).
class SolverError : public Error {
public:
    using Error::Error;
};

// Malformed input file or config.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Numerical slack used by the invariant checks.
struct Tolerances {
    double simplex = 1e-12;   // row sums and nonnegativity
    double rank = 1e-10;      // relative singular-value floor
    double symmetry = 1e-12;  // |M - M'| entrywise
    double pure = 1e-12;      // distance to a standard basis vector
};

inline const Tolerances& default_tolerances() {
    static const Tolerances tol{};
    return tol;
}

namespace detail {

inline double max_abs_asymmetry(const Matrix& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

// Ratio of the K-th to the largest singular value; 0 for an all-zero matrix.
inline double relative_smallest_singular(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    if (s(0) <= 0.0) return 0.0;
    return s(s.size() - 1) / s(0);
}

inline std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace detail
} // namespace dcmmdf
