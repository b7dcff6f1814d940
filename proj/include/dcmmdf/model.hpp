#pragma once

// DCMMDF parameter types, the expectation matrix Omega = Theta Pi P Pi' Theta,
// and entrywise samplers for weighted adjacency matrices.

#include "dcmmdf/common.hpp"
#include "dcmmdf/random.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace dcmmdf {

// n x K row-stochastic membership matrix.
class MembershipMatrix {
public:
    MembershipMatrix() = default;

    // Ground-truth memberships: simplex rows, rank K and at least one pure
    // node per community.
    static MembershipMatrix ground_truth(Matrix pi, const Tolerances& tol = default_tolerances()) {
        MembershipMatrix m = checked(std::move(pi), tol);
        if (detail::relative_smallest_singular(m.pi_) <= tol.rank) {
            throw InvariantError("membership matrix is rank deficient (rank < K)");
        }
        for (Index k = 0; k < m.K(); ++k) {
            if (m.pure_rows(k, tol.pure).empty()) {
                throw InvariantError("community " + std::to_string(k) + " has no pure node");
            }
        }
        return m;
    }

    // Estimated memberships: only the simplex constraint is enforced.
    static MembershipMatrix estimate(Matrix pi, const Tolerances& tol = default_tolerances()) {
        return checked(std::move(pi), tol);
    }

    const Matrix& matrix() const noexcept { return pi_; }
    Index n() const noexcept { return pi_.rows(); }
    Index K() const noexcept { return pi_.cols(); }
    double operator()(Index i, Index k) const { return pi_(i, k); }

    // Rows equal to e_k within `tol`.
    std::vector<Index> pure_rows(Index k, double tol = 1e-12) const {
        std::vector<Index> rows;
        for (Index i = 0; i < n(); ++i) {
            Vector target = Vector::Zero(K());
            target(k) = 1.0;
            if ((pi_.row(i).transpose() - target).cwiseAbs().maxCoeff() <= tol) rows.push_back(i);
        }
        return rows;
    }

private:
    explicit MembershipMatrix(Matrix pi) : pi_(std::move(pi)) {}

    static MembershipMatrix checked(Matrix pi, const Tolerances& tol) {
        if (pi.rows() == 0 || pi.cols() == 0) throw DimensionError("membership matrix is empty");
        for (Index i = 0; i < pi.rows(); ++i) {
            if (!pi.row(i).allFinite()) {
                throw InvariantError("membership row " + std::to_string(i) + " is not finite");
            }
            if (pi.row(i).minCoeff() < -tol.simplex) {
                throw InvariantError("membership row " + std::to_string(i) + " has a negative entry");
            }
            if (std::abs(pi.row(i).sum() - 1.0) > tol.simplex) {
                throw InvariantError("membership row " + std::to_string(i) + " does not sum to 1");
            }
        }
        return MembershipMatrix(std::move(pi));
    }

    Matrix pi_;
};

// K x K symmetric, full-rank connectivity matrix with unit diagonal.
class BlockMatrix {
public:
    BlockMatrix() = default;

    static BlockMatrix from(Matrix p, const Tolerances& tol = default_tolerances()) {
        if (p.rows() != p.cols() || p.rows() == 0) {
            throw DimensionError("block matrix must be square and nonempty, got " + detail::shape(p));
        }
        if (!p.allFinite()) throw InvariantError("block matrix has non-finite entries");
        if (detail::max_abs_asymmetry(p) > tol.symmetry) throw InvariantError("block matrix is not symmetric");
        if ((p.diagonal().array() - 1.0).abs().maxCoeff() > tol.symmetry) {
            throw InvariantError("block matrix diagonal is not all ones");
        }
        if (detail::relative_smallest_singular(p) <= tol.rank) {
            throw InvariantError("block matrix is not full rank");
        }
        return BlockMatrix(std::move(p));
    }

    // Unit diagonal with every off-diagonal entry equal to `off`.
    static BlockMatrix constant_offdiagonal(Index K, double off, const Tolerances& tol = default_tolerances()) {
        Matrix p = Matrix::Constant(K, K, off);
        p.diagonal().setOnes();
        return from(std::move(p), tol);
    }

    const Matrix& matrix() const noexcept { return p_; }
    Index K() const noexcept { return p_.rows(); }
    double max_abs() const { return p_.cwiseAbs().maxCoeff(); }

    // sigma_K(P), the smallest singular value.
    double smallest_singular() const {
        Eigen::JacobiSVD<Matrix> svd(p_);
        return svd.singularValues()(K() - 1);
    }

private:
    explicit BlockMatrix(Matrix p) : p_(std::move(p)) {}
    Matrix p_;
};

// Positive per-node degree scales theta.
class HeterogeneityVector {
public:
    HeterogeneityVector() = default;

    static HeterogeneityVector from(Vector theta) {
        if (theta.size() == 0) throw DimensionError("heterogeneity vector is empty");
        for (Index i = 0; i < theta.size(); ++i) {
            if (!(theta(i) > 0.0) || !std::isfinite(theta(i))) {
                throw InvariantError("theta(" + std::to_string(i) + ") must be positive and finite");
            }
        }
        return HeterogeneityVector(std::move(theta));
    }

    const Vector& vector() const noexcept { return theta_; }
    Index n() const noexcept { return theta_.size(); }
    double operator()(Index i) const { return theta_(i); }
    double max() const { return theta_.maxCoeff(); }
    double min() const { return theta_.minCoeff(); }

private:
    explicit HeterogeneityVector(Vector theta) : theta_(std::move(theta)) {}
    Vector theta_;
};

// Omega = Theta Pi P Pi' Theta, together with the block matrix it came from.
class ExpectationMatrix {
public:
    ExpectationMatrix() = default;

    const Matrix& matrix() const noexcept { return omega_; }
    Index n() const noexcept { return omega_.rows(); }
    Index K() const noexcept { return block_.K(); }
    const BlockMatrix& block() const noexcept { return block_; }
    double operator()(Index i, Index j) const { return omega_(i, j); }

    friend ExpectationMatrix build_omega(const BlockMatrix&, const MembershipMatrix&, const HeterogeneityVector&);

private:
    ExpectationMatrix(Matrix omega, BlockMatrix block) : omega_(std::move(omega)), block_(std::move(block)) {}
    Matrix omega_;
    BlockMatrix block_;
};

inline ExpectationMatrix build_omega(const BlockMatrix& P, const MembershipMatrix& Pi, const HeterogeneityVector& theta) {
    if (Pi.K() != P.K()) {
        throw DimensionError("membership has " + std::to_string(Pi.K()) + " columns but P is " + detail::shape(P.matrix()));
    }
    if (Pi.n() != theta.n()) {
        throw DimensionError("membership has " + std::to_string(Pi.n()) + " rows but theta has length " +
                             std::to_string(theta.n()));
    }
    const Matrix scaled = theta.vector().asDiagonal() * Pi.matrix();
    Matrix omega = scaled * P.matrix() * scaled.transpose();
    // Exact symmetry; the product is symmetric up to rounding.
    omega = 0.5 * (omega + omega.transpose()).eval();
    return ExpectationMatrix(std::move(omega), P);
}

// Symmetric real matrix of edge weights.
class WeightedAdjacency {
public:
    WeightedAdjacency() = default;

    static WeightedAdjacency from(Matrix a, double symmetry_tol = 1e-12) {
        if (a.rows() != a.cols()) throw DimensionError("adjacency must be square, got " + detail::shape(a));
        if (!a.allFinite()) throw InvariantError("adjacency has non-finite entries");
        if (a.size() > 0 && detail::max_abs_asymmetry(a) > symmetry_tol) {
            throw InvariantError("adjacency is not symmetric");
        }
        return WeightedAdjacency(std::move(a));
    }

    const Matrix& matrix() const noexcept { return a_; }
    Index n() const noexcept { return a_.rows(); }
    double operator()(Index i, Index j) const { return a_(i, j); }

private:
    explicit WeightedAdjacency(Matrix a) : a_(std::move(a)) {}
    Matrix a_;
};

// ---------------------------------------------------------------------------
// Edge distributions
// ---------------------------------------------------------------------------

struct NormalEdges {
    double variance = 1.0;
};
struct BernoulliEdges {};
struct PoissonEdges {};
// A(i,j) = +1 with probability (1 + Omega)/2, -1 otherwise.
struct SignedEdges {};
// User-supplied sampler: draws one weight with the given mean. No support checks.
struct CustomEdges {
    std::string name = "custom";
    std::function<double(double mean, Philox4x32& rng)> sampler;
};

using EdgeDistribution = std::variant<NormalEdges, BernoulliEdges, PoissonEdges, SignedEdges, CustomEdges>;

inline std::string distribution_name(const EdgeDistribution& dist) {
    return std::visit(
        [](const auto& d) -> std::string {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalEdges>) return "normal";
            else if constexpr (std::is_same_v<T, BernoulliEdges>) return "bernoulli";
            else if constexpr (std::is_same_v<T, PoissonEdges>) return "poisson";
            else if constexpr (std::is_same_v<T, SignedEdges>) return "signed";
            else return d.name;
        },
        dist);
}

// Closed interval of admissible means; nullopt when unrestricted.
inline std::optional<std::pair<double, double>> mean_support(const EdgeDistribution& dist) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (std::holds_alternative<BernoulliEdges>(dist)) return std::pair{0.0, 1.0};
    if (std::holds_alternative<PoissonEdges>(dist)) return std::pair{0.0, inf};
    if (std::holds_alternative<SignedEdges>(dist)) return std::pair{-1.0, 1.0};
    return std::nullopt;
}

// Throws SupportError naming the first offending entry (upper triangle, row-major).
inline void check_support(const Matrix& omega, const EdgeDistribution& dist, bool include_diagonal) {
    if (const auto* normal = std::get_if<NormalEdges>(&dist); normal && !(normal->variance >= 0.0)) {
        throw InvariantError("normal edge variance must be nonnegative");
    }
    const auto range = mean_support(dist);
    if (!range) return;
    for (Index i = 0; i < omega.rows(); ++i) {
        for (Index j = include_diagonal ? i : i + 1; j < omega.cols(); ++j) {
            const double v = omega(i, j);
            if (!(v >= range->first && v <= range->second)) {
                std::ostringstream msg;
                msg.precision(17);
                msg << distribution_name(dist) << " mean out of support [" << range->first << ", " << range->second
                    << "] at (" << i << ", " << j << "): " << v;
                throw SupportError(msg.str());
            }
        }
    }
}

namespace detail {

inline double draw_edge(const EdgeDistribution& dist, double mean, Philox4x32& rng) {
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalEdges>) {
                if (d.variance == 0.0) return mean;
                boost::random::normal_distribution<double> normal(mean, std::sqrt(d.variance));
                return normal(rng);
            } else if constexpr (std::is_same_v<T, BernoulliEdges>) {
                return rng.uniform() < mean ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, PoissonEdges>) {
                if (mean <= 0.0) return 0.0;
                boost::random::poisson_distribution<long long, double> poisson(mean);
                return static_cast<double>(poisson(rng));
            } else if constexpr (std::is_same_v<T, SignedEdges>) {
                return rng.uniform() < 0.5 * (1.0 + mean) ? 1.0 : -1.0;
            } else {
                if (!d.sampler) throw InvariantError("custom edge distribution has no sampler");
                return d.sampler(mean, rng);
            }
        },
        dist);
}

} // namespace detail

// Draws A(i,j) for i < j (and i == j when keeping self loops) from `dist` with
// mean omega(i,j). Entry (i,j) uses its own stream keyed by (seed, i, j).
inline WeightedAdjacency sample_adjacency(const Matrix& omega, const EdgeDistribution& dist, std::uint64_t seed,
                                          bool keep_self_loops = false) {
    if (omega.rows() != omega.cols()) throw DimensionError("omega must be square, got " + detail::shape(omega));
    check_support(omega, dist, keep_self_loops);
    const Index n = omega.rows();
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = keep_self_loops ? i : i + 1; j < n; ++j) {
            Philox4x32 rng(seed, entry_stream(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)));
            const double v = detail::draw_edge(dist, omega(i, j), rng);
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return WeightedAdjacency::from(std::move(a), 0.0);
}

inline WeightedAdjacency sample_adjacency(const ExpectationMatrix& omega, const EdgeDistribution& dist,
                                          std::uint64_t seed, bool keep_self_loops = false) {
    return sample_adjacency(omega.matrix(), dist, seed, keep_self_loops);
}

// ---------------------------------------------------------------------------
// Synthetic parameter builders
// ---------------------------------------------------------------------------

struct MixedProfile {
    Vector weights;   // a point on the K-simplex
    Index count = 0;  // number of nodes carrying it
};

// Rows [k*n0, (k+1)*n0) are pure in community k; the remaining rows carry the
// mixed profiles in the order given.
inline MembershipMatrix make_synthetic_membership(Index n, Index K, Index n0, const std::vector<MixedProfile>& profiles,
                                                  const Tolerances& tol = default_tolerances()) {
    if (K < 1 || n0 < 1) throw InvariantError("K and n0 must be positive");
    Index total = K * n0;
    for (const auto& p : profiles) {
        if (p.count < 0) throw InvariantError("profile count must be nonnegative");
        total += p.count;
    }
    if (total != n) {
        throw DimensionError("K*n0 + sum(counts) = " + std::to_string(total) + " but n = " + std::to_string(n));
    }
    Matrix pi = Matrix::Zero(n, K);
    for (Index k = 0; k < K; ++k) pi.block(k * n0, k, n0, 1).setOnes();
    Index row = K * n0;
    for (std::size_t p = 0; p < profiles.size(); ++p) {
        const Vector& w = profiles[p].weights;
        if (w.size() != K) throw DimensionError("profile " + std::to_string(p) + " has length " + std::to_string(w.size()));
        if (w.minCoeff() < 0.0 || std::abs(w.sum() - 1.0) > tol.simplex) {
            throw InvariantError("profile " + std::to_string(p) + " is not on the simplex");
        }
        for (Index c = 0; c < profiles[p].count; ++c) pi.row(row++) = w.transpose();
    }
    return MembershipMatrix::ground_truth(std::move(pi), tol);
}

enum class ThetaRule {
    uniform_half, // rho * (u/2 + 0.5), u ~ U(0,1)
    linear_ramp,  // 0.9 rho + 0.1 i rho / n, i = 1..n
};

inline HeterogeneityVector make_theta(Index n, double rho, ThetaRule rule, std::uint64_t seed = 0) {
    if (n < 1) throw InvariantError("n must be at least 1");
    if (!(rho > 0.0)) throw InvariantError("rho must be positive");
    Vector theta(n);
    for (Index i = 0; i < n; ++i) {
        if (rule == ThetaRule::linear_ramp) {
            theta(i) = 0.9 * rho + 0.1 * static_cast<double>(i + 1) * rho / static_cast<double>(n);
        } else {
            Philox4x32 rng(seed, static_cast<std::uint64_t>(i));
            theta(i) = rho * (rng.uniform() / 2.0 + 0.5);
        }
    }
    return HeterogeneityVector::from(std::move(theta));
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct ModelDiagnostics {
    double tau = 0.0;         // max |A(i,j) - Omega(i,j)| over i != j
    double gamma_bound = 0.0; // analytic bound on max Var(A(i,j)) / (theta_i theta_j)
};

// gamma_bound: sigma^2/theta_min^2 (normal), P_max (bernoulli, poisson),
// 1/theta_min^2 (signed), NaN for custom samplers.
inline ModelDiagnostics compute_diagnostics(const WeightedAdjacency& A, const ExpectationMatrix& omega,
                                            const HeterogeneityVector& theta, const EdgeDistribution& dist) {
    if (A.n() != omega.n() || theta.n() != omega.n()) throw DimensionError("diagnostics inputs disagree in size");
    ModelDiagnostics out;
    for (Index i = 0; i < A.n(); ++i) {
        for (Index j = 0; j < A.n(); ++j) {
            if (i != j) out.tau = std::max(out.tau, std::abs(A(i, j) - omega(i, j)));
        }
    }
    const double tmin = theta.min();
    out.gamma_bound = std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalEdges>) return d.variance / (tmin * tmin);
            else if constexpr (std::is_same_v<T, BernoulliEdges> || std::is_same_v<T, PoissonEdges>) return omega.block().max_abs();
            else if constexpr (std::is_same_v<T, SignedEdges>) return 1.0 / (tmin * tmin);
            else return std::numeric_limits<double>::quiet_NaN();
        },
        dist);
    return out;
}

} // namespace dcmmdf
