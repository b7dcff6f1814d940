#pragma once

// Leading-K eigenpairs of symmetric matrices ordered by eigenvalue magnitude,
// row normalization of eigenvector matrices, and leading singular values.

#include "dcmmdf/common.hpp"
#include "dcmmdf/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace dcmmdf {

// U has orthonormal columns; lambda is ordered by decreasing |value|.
struct SpectralPair {
    Matrix U;
    Vector lambda;
    // |lambda_K| < 1e-12 |lambda_1|: the input has rank below K.
    bool rank_deficient = false;
};

struct SpectralOptions {
    // Dense symmetric solver up to this size, Lanczos above.
    Index dense_limit = 2000;
    // Ritz residual target for the iterative path, relative to |lambda_1|.
    double lanczos_tol = 1e-11;
    std::uint64_t lanczos_seed = 0x5eed;
    // Relative tolerance for treating |lambda| = |lambda'| as a tie.
    double tie_tol = 1e-10;
    double symmetry_tol = 1e-8;
};

namespace detail {

// Order by |lambda| descending; equal magnitudes put the positive value
// first, then the smaller source index.
inline std::vector<Index> magnitude_order(const Vector& values, double tie_tol) {
    std::vector<Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(values(a)) > std::abs(values(b)); });
    if (order.empty()) return order;
    const double scale = std::abs(values(order.front()));
    const double eps = tie_tol * (scale > 0.0 ? scale : 1.0);
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        while (end < order.size() &&
               std::abs(std::abs(values(order[end - 1])) - std::abs(values(order[end]))) <= eps) {
            ++end;
        }
        std::sort(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end),
                  [&](Index a, Index b) {
                      const bool pa = values(a) >= 0.0, pb = values(b) >= 0.0;
                      if (pa != pb) return pa;
                      return a < b;
                  });
        start = end;
    }
    return order;
}

// Flip each column so that its entry of largest magnitude is positive
// (first such row on ties).
inline void fix_signs(Matrix& U) {
    for (Index k = 0; k < U.cols(); ++k) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index i = 0; i < U.rows(); ++i) {
            const double a = std::abs(U(i, k));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (U(best, k) < 0.0) U.col(k) = -U.col(k);
    }
}

inline void check_square_symmetric(const Matrix& M, double tol) {
    if (M.rows() != M.cols()) throw DimensionError("matrix must be square, got " + shape(M));
    if (M.size() == 0) throw DimensionError("matrix is empty");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if (max_abs_asymmetry(M) > tol * scale) throw InvariantError("matrix is not symmetric");
}

// Lanczos with full reorthogonalization. Both ends of the spectrum converge
// together, so the K largest-magnitude Ritz pairs are read off one Krylov
// basis. Returns every Ritz pair of the final tridiagonal matrix.
inline void lanczos_ritz(const Matrix& M, Index K, const SpectralOptions& opt, Vector& values, Matrix& vectors) {
    const Index n = M.rows();
    Matrix Q(n, std::min<Index>(n, 64));
    std::vector<double> alpha, beta;
    Philox4x32 rng(opt.lanczos_seed);
    auto random_unit = [&](Index used) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v(i) = rng.uniform() - 0.5;
        for (int pass = 0; pass < 2; ++pass) {
            if (used > 0) v -= Q.leftCols(used) * (Q.leftCols(used).transpose() * v);
        }
        return Vector(v / v.norm());
    };

    Q.col(0) = random_unit(0);
    const double norm_bound = M.norm();
    Index m = 0;
    bool fresh = false;
    Index next_check = std::min<Index>(n, std::max<Index>(2 * K + 10, 20));
    while (true) {
        if (m + 1 > Q.cols()) Q.conservativeResize(n, std::min<Index>(n, 2 * Q.cols()));
        Vector w = M * Q.col(m);
        alpha.push_back(Q.col(m).dot(w));
        for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).transpose() * w);
        const double b = w.norm();
        ++m;
        bool restart_block = false;
        if (m < n) {
            if (b <= 1e-14 * norm_bound) {
                // Invariant subspace exhausted; continue with a fresh direction.
                beta.push_back(0.0);
                restart_block = true;
            } else {
                beta.push_back(b);
            }
        }

        // A fresh direction that is itself annihilated means the complement of
        // the explored space is numerically null.
        const bool complement_null = restart_block && fresh;
        fresh = restart_block;

        if (m == n || m >= next_check || complement_null) {
            Matrix T = Matrix::Zero(m, m);
            for (Index i = 0; i < m; ++i) {
                T(i, i) = alpha[static_cast<std::size_t>(i)];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
            }
            Eigen::SelfAdjointEigenSolver<Matrix> tri(T);
            const Vector& theta = tri.eigenvalues();
            const Matrix& S = tri.eigenvectors();
            const auto order = magnitude_order(theta, opt.tie_tol);
            const double scale = std::max(std::abs(theta(order.front())), 1e-300);
            const double last_beta = m < n ? beta.back() : 0.0;
            bool converged = m == n || (complement_null && m >= K);
            // A zero coupling means the basis just broke down; keep expanding so
            // repeated eigenvalues outside the current Krylov space are not missed.
            if (!converged && m >= K && last_beta != 0.0) {
                converged = true;
                for (Index k = 0; k < K; ++k) {
                    const double resid = std::abs(last_beta * S(m - 1, order[static_cast<std::size_t>(k)]));
                    if (resid > opt.lanczos_tol * scale) {
                        converged = false;
                        break;
                    }
                }
            }
            if (converged) {
                values = theta;
                vectors = Q.leftCols(m) * S;
                return;
            }
            next_check = std::min<Index>(n, m + std::max<Index>(10, m / 4));
        }
        if (m + 1 > Q.cols()) Q.conservativeResize(n, std::min<Index>(n, 2 * Q.cols()));
        Q.col(m) = restart_block ? random_unit(m) : Vector(w / b);
    }
}

} // namespace detail

inline SpectralPair top_k_eigs(const Matrix& M, Index K, const SpectralOptions& opt = {}) {
    detail::check_square_symmetric(M, opt.symmetry_tol);
    const Index n = M.rows();
    if (K < 1 || K > n) throw DimensionError("K must lie in [1, n], got " + std::to_string(K));

    Vector values;
    Matrix vectors;
    if (n <= opt.dense_limit) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(M);
        if (solver.info() != Eigen::Success) throw SolverError("symmetric eigensolver did not converge");
        values = solver.eigenvalues();
        vectors = solver.eigenvectors();
    } else {
        detail::lanczos_ritz(M, K, opt, values, vectors);
    }

    const auto order = detail::magnitude_order(values, opt.tie_tol);
    SpectralPair out;
    out.U.resize(n, K);
    out.lambda.resize(K);
    for (Index k = 0; k < K; ++k) {
        out.U.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
        out.lambda(k) = values(order[static_cast<std::size_t>(k)]);
    }
    detail::fix_signs(out.U);
    const double top = std::abs(out.lambda(0));
    out.rank_deficient = !(std::abs(out.lambda(K - 1)) >= 1e-12 * top) || top == 0.0;
    return out;
}

// Rows scaled to unit L2 norm.
struct NormalizedRows {
    Matrix Ustar;
    Vector row_norms;
    // Rows with norm below 1e-12; replaced by e_1.
    std::vector<Index> degenerate;

    bool is_degenerate(Index i) const {
        return std::binary_search(degenerate.begin(), degenerate.end(), i);
    }
};

inline NormalizedRows row_normalize(const Matrix& U, double zero_tol = 1e-12) {
    NormalizedRows out;
    out.Ustar.resize(U.rows(), U.cols());
    out.row_norms.resize(U.rows());
    for (Index i = 0; i < U.rows(); ++i) {
        const double norm = U.row(i).norm();
        out.row_norms(i) = norm;
        if (!(norm >= zero_tol)) {
            out.degenerate.push_back(i);
            out.Ustar.row(i).setZero();
            if (U.cols() > 0) out.Ustar(i, 0) = 1.0;
        } else {
            out.Ustar.row(i) = U.row(i) / norm;
        }
    }
    return out;
}

// The m largest singular values, nonincreasing.
inline Vector top_singular_values(const Matrix& M, Index m, const SpectralOptions& opt = {}) {
    if (M.rows() != M.cols()) throw DimensionError("matrix must be square, got " + detail::shape(M));
    const Index n = M.rows();
    if (m < 1 || m > n) throw DimensionError("m must lie in [1, n], got " + std::to_string(m));
    Vector sv;
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if (detail::max_abs_asymmetry(M) <= 1e-12 * scale) {
        if (n <= opt.dense_limit) {
            Eigen::SelfAdjointEigenSolver<Matrix> solver(M, Eigen::EigenvaluesOnly);
            sv = solver.eigenvalues().cwiseAbs();
        } else {
            sv = top_k_eigs(M, m, opt).lambda.cwiseAbs();
        }
    } else {
        Eigen::BDCSVD<Matrix> svd(M);
        sv = svd.singularValues();
    }
    std::sort(sv.data(), sv.data() + sv.size(), std::greater<double>());
    return sv.head(m);
}

} // namespace dcmmdf
