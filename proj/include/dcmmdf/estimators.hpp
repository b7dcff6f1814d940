#pragma once

// Membership estimators: Ideal ScD on an expectation matrix, ScD on an
// observed adjacency matrix, and the DFSP baseline.

#include "dcmmdf/common.hpp"
#include "dcmmdf/corners.hpp"
#include "dcmmdf/model.hpp"
#include "dcmmdf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dcmmdf {

enum class Method {
    ideal_scd,
    scd,
    dfsp,
};

inline std::string method_name(Method m) {
    switch (m) {
    case Method::ideal_scd: return "ideal_scd";
    case Method::scd: return "scd";
    case Method::dfsp: return "dfsp";
    }
    return "unknown";
}

inline Method parse_method(const std::string& name) {
    if (name == "scd" || name == "ScD") return Method::scd;
    if (name == "dfsp" || name == "DFSP") return Method::dfsp;
    if (name == "ideal_scd" || name == "IdealScD") return Method::ideal_scd;
    throw InvariantError("unknown method '" + name + "' (expected scd, dfsp or ideal_scd)");
}

struct EstimationResult {
    Method method = Method::scd;
    MembershipMatrix pi_hat;
    CornerSet corners;
    Matrix Z;                           // nonnegative, before L1 normalization
    Vector eigenvalues;                 // leading K, by magnitude
    std::vector<Index> degenerate_rows; // zero-L1 rows of Z, set to uniform
    std::vector<Index> zero_norm_rows;  // zero rows of U before normalization
    Index clamped_diagonal = 0;         // negative diag(U*(I,:) L U*(I,:)') entries set to 0
    double corner_condition = 0.0;      // condition number of the K x K corner block
    bool rank_deficient = false;
};

struct EstimatorOptions {
    SpectralOptions spectral{};
    SvmConeOptions cone{};
    double condition_limit = 1e12;
    double l1_zero_tol = 1e-12;
};

namespace detail {

inline Matrix gather_rows(const Matrix& M, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), M.cols());
    for (std::size_t a = 0; a < rows.size(); ++a) out.row(static_cast<Index>(a)) = M.row(rows[a]);
    return out;
}

inline double checked_condition(const Matrix& B, const std::vector<Index>& corners, double limit) {
    Eigen::JacobiSVD<Matrix> svd(B);
    const Vector& s = svd.singularValues();
    const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= limit)) {
        std::ostringstream msg;
        msg << "corner block is singular (condition " << cond << ") for corner rows {";
        for (std::size_t a = 0; a < corners.size(); ++a) msg << (a ? ", " : "") << corners[a];
        msg << "}";
        throw SolverError(msg.str());
    }
    return cond;
}

// Clamp to the nonnegative orthant and L1-normalize rows; rows with
// vanishing mass become uniform and are recorded.
inline MembershipMatrix normalize_memberships(Matrix& Z, double zero_tol, std::vector<Index>& degenerate) {
    Z = Z.cwiseMax(0.0);
    Matrix pi(Z.rows(), Z.cols());
    for (Index i = 0; i < Z.rows(); ++i) {
        const double mass = Z.row(i).sum();
        if (!(mass >= zero_tol)) {
            degenerate.push_back(i);
            pi.row(i).setConstant(1.0 / static_cast<double>(Z.cols()));
        } else {
            pi.row(i) = Z.row(i) / mass;
        }
    }
    return MembershipMatrix::estimate(std::move(pi), Tolerances{1e-10, 0.0, 0.0, 0.0});
}

} // namespace detail

// ScD from a precomputed leading-K eigendecomposition:
//   U* = row-normalized U, I = cone corners of U*,
//   Z  = max(0, U U*(I,:)^{-1} sqrt(diag(U*(I,:) L U*(I,:)'))),
//   Pi = rows of Z scaled to unit L1 norm.
inline EstimationResult scd_from_spectrum(const SpectralPair& spec, std::uint64_t seed, const EstimatorOptions& opt = {},
                                          Method tag = Method::scd) {
    const Index K = spec.U.cols();
    EstimationResult res;
    res.method = tag;
    res.eigenvalues = spec.lambda;
    res.rank_deficient = spec.rank_deficient;

    const NormalizedRows rows = row_normalize(spec.U);
    res.zero_norm_rows = rows.degenerate;
    res.corners = svm_cone_corners(rows, K, seed, opt.cone);

    const Matrix B = detail::gather_rows(rows.Ustar, res.corners.indices);
    res.corner_condition = detail::checked_condition(B, res.corners.indices, opt.condition_limit);

    Vector d = (B * spec.lambda.asDiagonal() * B.transpose()).diagonal();
    for (Index k = 0; k < K; ++k) {
        if (d(k) < 0.0) {
            d(k) = 0.0;
            ++res.clamped_diagonal;
        }
    }
    // U B^{-1} via a solve against B'.
    const Matrix UBinv = B.transpose().partialPivLu().solve(spec.U.transpose()).transpose();
    res.Z = UBinv * d.cwiseSqrt().asDiagonal();
    res.pi_hat = detail::normalize_memberships(res.Z, opt.l1_zero_tol, res.degenerate_rows);
    return res;
}

// Median over rows of sqrt(K ||R(i,:)||^2 / n) / (|lambda_K| ||U(i,:)||), with
// R = A - U L U' the residual of the rank-K fit: the typical angular error of
// a row of U*.
inline double row_noise_level(const Matrix& A, const SpectralPair& spec) {
    const Index n = A.rows();
    const Index K = spec.U.cols();
    const double lambda_k = spec.lambda.cwiseAbs().minCoeff();
    if (!(lambda_k > 0.0)) return 0.0;
    const Matrix R = A - spec.U * spec.lambda.asDiagonal() * spec.U.transpose();
    std::vector<double> eps;
    eps.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const double norm = spec.U.row(i).norm();
        if (norm < 1e-12) continue;
        eps.push_back(std::sqrt(static_cast<double>(K) * R.row(i).squaredNorm() / static_cast<double>(n)) /
                      (lambda_k * norm));
    }
    if (eps.empty()) return 0.0;
    auto mid = eps.begin() + static_cast<std::ptrdiff_t>(eps.size() / 2);
    std::nth_element(eps.begin(), mid, eps.end());
    return *mid;
}

// ScD on an observed matrix with a precomputed spectrum; the cone band is
// scaled to the noise level of A.
inline EstimationResult scd_from_spectrum(const Matrix& A, const SpectralPair& spec, std::uint64_t seed,
                                          const EstimatorOptions& opt = {}) {
    EstimatorOptions local = opt;
    if (local.cone.noise_level == 0.0) local.cone.noise_level = row_noise_level(A, spec);
    return scd_from_spectrum(spec, seed, local, Method::scd);
}

inline EstimationResult scd(const WeightedAdjacency& A, Index K, std::uint64_t seed, const EstimatorOptions& opt = {}) {
    return scd_from_spectrum(A.matrix(), top_k_eigs(A.matrix(), K, opt.spectral), seed, opt);
}

// The oracle pipeline on Omega itself; rejects inputs whose rank is not K.
inline EstimationResult ideal_scd(const Matrix& omega, Index K, std::uint64_t seed = 0, const EstimatorOptions& opt = {}) {
    const Index n = omega.rows();
    const Index probe = std::min(K + 1, n);
    const SpectralPair wide = top_k_eigs(omega, probe, opt.spectral);
    const double top = std::abs(wide.lambda(0));
    if (!(std::abs(wide.lambda(K - 1)) > 1e-10 * top)) {
        throw InvariantError("expectation matrix has rank below K = " + std::to_string(K));
    }
    if (probe > K && std::abs(wide.lambda(K)) > 1e-8 * top) {
        throw InvariantError("expectation matrix has rank above K = " + std::to_string(K));
    }
    SpectralPair spec;
    spec.U = wide.U.leftCols(K);
    spec.lambda = wide.lambda.head(K);
    return scd_from_spectrum(spec, seed, opt, Method::ideal_scd);
}

inline EstimationResult ideal_scd(const ExpectationMatrix& omega, Index K, std::uint64_t seed = 0,
                                  const EstimatorOptions& opt = {}) {
    return ideal_scd(omega.matrix(), K, seed, opt);
}

// DFSP baseline: successive projection on the raw eigenvectors, then
// Pi = rows of max(0, U U(I,:)^{-1}) scaled to unit L1 norm. No degree
// correction.
inline EstimationResult dfsp_from_spectrum(const SpectralPair& spec, const EstimatorOptions& opt = {}) {
    const Index K = spec.U.cols();
    EstimationResult res;
    res.method = Method::dfsp;
    res.eigenvalues = spec.lambda;
    res.rank_deficient = spec.rank_deficient;
    res.corners = spa_corners(spec.U, K);

    const Matrix B = detail::gather_rows(spec.U, res.corners.indices);
    res.corner_condition = detail::checked_condition(B, res.corners.indices, opt.condition_limit);
    res.Z = B.transpose().partialPivLu().solve(spec.U.transpose()).transpose();
    res.pi_hat = detail::normalize_memberships(res.Z, opt.l1_zero_tol, res.degenerate_rows);
    return res;
}

inline EstimationResult dfsp(const WeightedAdjacency& A, Index K, std::uint64_t /*seed*/ = 0,
                             const EstimatorOptions& opt = {}) {
    return dfsp_from_spectrum(top_k_eigs(A.matrix(), K, opt.spectral), opt);
}

inline EstimationResult estimate(Method method, const WeightedAdjacency& A, Index K, std::uint64_t seed,
                                 const EstimatorOptions& opt = {}) {
    switch (method) {
    case Method::scd: return scd(A, K, seed, opt);
    case Method::dfsp: return dfsp(A, K, seed, opt);
    case Method::ideal_scd: return ideal_scd(A.matrix(), K, seed, opt);
    }
    throw InvariantError("unknown method");
}

} // namespace dcmmdf
