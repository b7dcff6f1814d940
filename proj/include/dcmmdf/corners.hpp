#pragma once

// Corner finding on row-normalized eigenvector matrices: the one-class
// max-margin cone procedure used by ScD and successive projection used by the
// DFSP baseline.

#include "dcmmdf/common.hpp"
#include "dcmmdf/random.hpp"
#include "dcmmdf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dcmmdf {

// ---------------------------------------------------------------------------
// One-class hard-margin problem through the origin
// ---------------------------------------------------------------------------

// min ||w||^2 subject to y_i . w >= 1 for every row y_i.
struct MarginSolution {
    Vector w;
    Vector row_margins;              // y_i . w
    double duality_gap = 0.0;        // primal(w / min margin) - dual(alpha)
    std::vector<Index> support;      // rows with positive dual weight
    Vector support_weights;          // convex weights of `support`
};

// The origin lies in the convex hull of the rows; `certificate` lists rows
// with a vanishing convex combination.
class InfeasibleMarginError : public SolverError {
public:
    InfeasibleMarginError(const std::string& what, std::vector<Index> certificate)
        : SolverError(what), certificate_(std::move(certificate)) {}

    const std::vector<Index>& certificate() const noexcept { return certificate_; }

private:
    std::vector<Index> certificate_;
};

struct MarginOptions {
    double tol = 1e-13;      // Wolfe optimality slack, relative to max ||y_i||^2
    double unit_tol = 1e-8;  // accepted deviation of row norms from 1
    Index max_iterations = 0; // 0: 50 n + 100
};

namespace detail {

// Minimum-norm point of the affine hull of the rows indexed by `set`, as
// affine weights summing to one.
inline Vector affine_min_norm_weights(const Matrix& Y, const std::vector<Index>& set) {
    const Index s = static_cast<Index>(set.size());
    Matrix kkt = Matrix::Zero(s + 1, s + 1);
    for (Index a = 0; a < s; ++a) {
        for (Index b = 0; b < s; ++b) kkt(a, b) = Y.row(set[a]).dot(Y.row(set[b]));
        kkt(a, s) = kkt(s, a) = 1.0;
    }
    Vector rhs = Vector::Zero(s + 1);
    rhs(s) = 1.0;
    Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    return sol.head(s);
}

} // namespace detail

// Solved as the minimum-norm point v of conv{y_i} (Wolfe's method); then
// w = v / ||v||^2. Infeasible exactly when the origin lies in that hull.
inline MarginSolution one_class_margin(const Matrix& Y, const MarginOptions& opt = {}) {
    const Index n = Y.rows();
    if (n == 0 || Y.cols() == 0) throw DimensionError("one_class_margin needs a nonempty point set");
    for (Index i = 0; i < n; ++i) {
        if (std::abs(Y.row(i).norm() - 1.0) > opt.unit_tol) {
            throw InvariantError("row " + std::to_string(i) + " is not unit norm");
        }
    }
    const Index max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50 * n + 100;
    const double eps = opt.tol;

    std::vector<Index> set{0};
    Vector lambda = Vector::Ones(1);
    Vector x = Y.row(0).transpose();

    auto infeasible = [&]() {
        std::ostringstream msg;
        msg << "no separating hyperplane through the origin: a convex combination of rows {";
        for (std::size_t a = 0; a < set.size(); ++a) msg << (a ? ", " : "") << set[a];
        msg << "} vanishes (norm " << x.norm() << ")";
        return InfeasibleMarginError(msg.str(), set);
    };

    for (Index iter = 0; iter < max_iter; ++iter) {
        const Vector g = Y * x;
        Index j = 0;
        g.minCoeff(&j);
        if (x.squaredNorm() - g(j) <= eps) break;
        if (std::find(set.begin(), set.end(), j) != set.end()) break;
        set.push_back(j);
        lambda.conservativeResize(static_cast<Index>(set.size()));
        lambda(lambda.size() - 1) = 0.0;

        while (true) {
            const Vector mu = detail::affine_min_norm_weights(Y, set);
            if (mu.minCoeff() > 1e-14) {
                lambda = mu;
                break;
            }
            double step = 1.0;
            for (Index a = 0; a < mu.size(); ++a) {
                if (mu(a) <= 1e-14 && lambda(a) - mu(a) > 0.0) step = std::min(step, lambda(a) / (lambda(a) - mu(a)));
            }
            lambda = (1.0 - step) * lambda + step * mu;
            std::vector<Index> kept_set;
            std::vector<double> kept_w;
            for (Index a = 0; a < lambda.size(); ++a) {
                if (lambda(a) > 1e-14) {
                    kept_set.push_back(set[static_cast<std::size_t>(a)]);
                    kept_w.push_back(lambda(a));
                }
            }
            if (kept_set.empty()) {
                // Degenerate step; keep the newest point alone.
                kept_set.push_back(set.back());
                kept_w.push_back(1.0);
            }
            set = std::move(kept_set);
            lambda = Eigen::Map<Vector>(kept_w.data(), static_cast<Index>(kept_w.size()));
            lambda /= lambda.sum();
            if (set.size() == 1) break;
        }
        x.setZero(Y.cols());
        for (std::size_t a = 0; a < set.size(); ++a) x += lambda(static_cast<Index>(a)) * Y.row(set[a]).transpose();
        if (x.norm() <= 1e-10) throw infeasible();
    }
    if (x.norm() <= 1e-10) throw infeasible();

    MarginSolution sol;
    sol.w = x / x.squaredNorm();
    sol.row_margins = Y * sol.w;
    const double min_margin = sol.row_margins.minCoeff();
    if (!(min_margin > 0.0)) throw infeasible();
    // Dual weights alpha = lambda / ||x||^2 give dual objective ||w||^2 / 2;
    // w / min_margin is primal feasible.
    const double half_w2 = 0.5 * sol.w.squaredNorm();
    sol.duality_gap = std::max(0.0, half_w2 / (min_margin * min_margin) - half_w2);
    sol.support = set;
    sol.support_weights = lambda;
    return sol;
}

// ---------------------------------------------------------------------------
// Spherical k-means
// ---------------------------------------------------------------------------

struct KMeansResult {
    std::vector<Index> labels; // 0-based cluster per point
    Matrix centers;            // K x d, unit rows
    double objective = 0.0;    // sum of (1 - cos(point, center))
};

namespace detail {

inline KMeansResult spherical_kmeans_once(const Matrix& X, Index K, Philox4x32& rng, Index max_iter) {
    const Index m = X.rows();
    KMeansResult res;
    res.centers.resize(K, X.cols());
    res.labels.assign(static_cast<std::size_t>(m), 0);

    // k-means++ seeding on cosine distance.
    Index first = std::min<Index>(m - 1, static_cast<Index>(rng.uniform() * static_cast<double>(m)));
    res.centers.row(0) = X.row(first);
    Vector dist = (1.0 - (X * res.centers.row(0).transpose()).array()).max(0.0).matrix();
    for (Index c = 1; c < K; ++c) {
        const Vector weight = dist.array().square().matrix();
        const double total = weight.sum();
        Index pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (pick = 0; pick < m - 1; ++pick) {
                target -= weight(pick);
                if (target < 0.0) break;
            }
            while (weight(pick) == 0.0 && pick > 0) --pick;
        } else {
            pick = c % m;
        }
        res.centers.row(c) = X.row(pick);
        dist = dist.cwiseMin((1.0 - (X * res.centers.row(c).transpose()).array()).max(0.0).matrix());
    }

    for (Index iter = 0; iter < max_iter; ++iter) {
        const Matrix sim = X * res.centers.transpose();
        bool changed = iter == 0;
        for (Index i = 0; i < m; ++i) {
            Index best = 0;
            sim.row(i).maxCoeff(&best);
            if (best != res.labels[static_cast<std::size_t>(i)]) changed = true;
            res.labels[static_cast<std::size_t>(i)] = best;
        }
        // Empty clusters take the point farthest from its own center.
        std::vector<Index> counts(static_cast<std::size_t>(K), 0);
        for (Index l : res.labels) ++counts[static_cast<std::size_t>(l)];
        for (Index c = 0; c < K; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            Index far = -1;
            double far_d = -1.0;
            for (Index i = 0; i < m; ++i) {
                const auto li = res.labels[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(li)] <= 1) continue;
                const double d = 1.0 - sim(i, li);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0) break;
            --counts[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(far)])];
            res.labels[static_cast<std::size_t>(far)] = c;
            ++counts[static_cast<std::size_t>(c)];
            changed = true;
        }
        Matrix sums = Matrix::Zero(K, X.cols());
        for (Index i = 0; i < m; ++i) sums.row(res.labels[static_cast<std::size_t>(i)]) += X.row(i);
        for (Index c = 0; c < K; ++c) {
            const double norm = sums.row(c).norm();
            if (norm > 0.0) res.centers.row(c) = sums.row(c) / norm;
        }
        if (!changed) break;
    }
    res.objective = 0.0;
    for (Index i = 0; i < m; ++i) {
        res.objective += 1.0 - X.row(i).dot(res.centers.row(res.labels[static_cast<std::size_t>(i)]));
    }
    return res;
}

} // namespace detail

// Best of `restarts` runs by total cosine distance; deterministic in `seed`.
inline KMeansResult spherical_kmeans(const Matrix& X, Index K, std::uint64_t seed, Index restarts = 10,
                                     Index max_iter = 300) {
    if (K < 1) throw InvariantError("k-means needs K >= 1");
    if (X.rows() < K) {
        throw DimensionError("k-means needs at least K points (" + std::to_string(X.rows()) + " < " +
                             std::to_string(K) + ")");
    }
    KMeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < std::max<Index>(1, restarts); ++r) {
        Philox4x32 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        KMeansResult run = detail::spherical_kmeans_once(X, K, rng, max_iter);
        if (run.objective < best.objective) best = std::move(run);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Corner sets
// ---------------------------------------------------------------------------

struct CornerSet {
    std::vector<Index> indices;          // K distinct rows, 0-based
    Vector margins;                      // per-row one-class margin (empty for SPA)
    std::vector<Index> candidates;       // rows inside the final margin band
    std::vector<Index> cluster_assignments; // cluster of each candidate
    double band = 0.0;                   // final relative margin band delta
    std::vector<Index> trimmed;          // rows removed to make the margin problem feasible
};

enum class Representative {
    closest_to_center,
    min_margin,
};

struct SvmConeOptions {
    double band_start = 1e-9;  // solver slack
    double band_growth = 1.5;
    double band_cap = 0.5;
    Index restarts = 10;
    Representative representative = Representative::closest_to_center;
    double distinct_tol = 1e-6; // rows closer than this count as one direction
    double tie_tol = 1e-12;     // representative scores this close count as equal
    // Estimated angular error of the rows of U*. When positive, the band is
    // widened to noise_width * noise_level * ||w|| in margin units, keeping at
    // most max_fraction of the rows.
    double noise_level = 0.0;
    double noise_width = 2.0;
    double max_fraction = 0.5;
    MarginOptions margin{};
};

namespace detail {

inline Index count_distinct(const Matrix& X, const std::vector<Index>& rows, double tol, Index stop_at) {
    std::vector<Index> reps;
    for (Index i : rows) {
        bool fresh = true;
        for (Index r : reps) {
            if ((X.row(i) - X.row(r)).norm() <= tol) {
                fresh = false;
                break;
            }
        }
        if (fresh) {
            reps.push_back(i);
            if (static_cast<Index>(reps.size()) >= stop_at) break;
        }
    }
    return static_cast<Index>(reps.size());
}

} // namespace detail

// Rows whose one-class margin lies within (1 + delta) of the minimum are
// clustered into K groups; one representative per group is a corner. delta
// starts at the solver slack and grows until the band holds K distinct
// directions, then widens to the row noise level if one is given.
// Degenerate (zero-norm) rows never become corners. If the origin lies in the
// convex hull of the rows, the least reliable row of each certificate is
// dropped until a separating hyperplane exists.
inline CornerSet svm_cone_corners(const NormalizedRows& rows, Index K, std::uint64_t seed, const SvmConeOptions& opt = {}) {
    const Matrix& Ustar = rows.Ustar;
    const Index n = Ustar.rows();
    if (K < 1 || K > Ustar.cols()) throw DimensionError("K must lie in [1, columns of U*]");
    std::vector<Index> eligible;
    for (Index i = 0; i < n; ++i) {
        if (!rows.is_degenerate(i)) eligible.push_back(i);
    }
    if (static_cast<Index>(eligible.size()) < K) {
        throw SolverError("only " + std::to_string(eligible.size()) + " non-degenerate rows for K = " + std::to_string(K));
    }
    CornerSet out;
    MarginSolution sol;
    while (true) {
        Matrix Y(static_cast<Index>(eligible.size()), Ustar.cols());
        for (std::size_t a = 0; a < eligible.size(); ++a) Y.row(static_cast<Index>(a)) = Ustar.row(eligible[a]);
        try {
            sol = one_class_margin(Y, opt.margin);
            break;
        } catch (const InfeasibleMarginError& e) {
            // Drop the certificate row with the smallest pre-normalization
            // norm; its direction is the least reliable.
            std::size_t drop = static_cast<std::size_t>(e.certificate().front());
            for (Index a : e.certificate()) {
                if (rows.row_norms(eligible[static_cast<std::size_t>(a)]) < rows.row_norms(eligible[drop])) {
                    drop = static_cast<std::size_t>(a);
                }
            }
            out.trimmed.push_back(eligible[drop]);
            eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(drop));
            if (static_cast<Index>(eligible.size()) < K) {
                throw SolverError("no pointed cone remains after trimming " + std::to_string(out.trimmed.size()) +
                                  " rows; try a smaller K");
            }
        }
    }
    std::sort(out.trimmed.begin(), out.trimmed.end());
    out.margins = Vector::Constant(n, std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < eligible.size(); ++a) out.margins(eligible[a]) = sol.row_margins(static_cast<Index>(a));
    const double min_margin = sol.row_margins.minCoeff();

    double band = opt.band_start;
    std::vector<Index> cand;
    while (true) {
        cand.clear();
        for (Index i : eligible) {
            if (out.margins(i) <= (1.0 + band) * min_margin) cand.push_back(i);
        }
        if (detail::count_distinct(Ustar, cand, opt.distinct_tol, K) >= K) break;
        if (band >= opt.band_cap) {
            throw SolverError("fewer than K = " + std::to_string(K) +
                              " distinct corner candidates within the widest margin band; try a smaller K");
        }
        band = std::min(opt.band_cap, band * opt.band_growth);
    }
    if (opt.noise_level > 0.0) {
        const double noisy = opt.noise_width * opt.noise_level * sol.w.norm() / min_margin;
        if (noisy > band) {
            band = noisy;
            std::vector<Index> wide;
            for (Index i : eligible) {
                if (out.margins(i) <= (1.0 + band) * min_margin) wide.push_back(i);
            }
            std::stable_sort(wide.begin(), wide.end(), [&](Index a, Index b) { return out.margins(a) < out.margins(b); });
            const auto limit = std::max(cand.size(), static_cast<std::size_t>(std::ceil(
                                                          opt.max_fraction * static_cast<double>(eligible.size()))));
            if (wide.size() > limit) wide.resize(limit);
            std::sort(wide.begin(), wide.end());
            cand = std::move(wide);
        }
    }
    out.band = band;
    out.candidates = cand;

    Matrix C(static_cast<Index>(cand.size()), Ustar.cols());
    for (std::size_t a = 0; a < cand.size(); ++a) C.row(static_cast<Index>(a)) = Ustar.row(cand[a]);
    const KMeansResult km = spherical_kmeans(C, K, seed, opt.restarts);
    out.cluster_assignments = km.labels;

    for (Index c = 0; c < K; ++c) {
        Index best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < cand.size(); ++a) {
            if (km.labels[a] != c) continue;
            const double score = opt.representative == Representative::closest_to_center
                                     ? C.row(static_cast<Index>(a)).dot(km.centers.row(c))
                                     : -out.margins(cand[a]);
            // Near-ties (two-point clusters are always tied) go to the smaller margin.
            const bool tied = best >= 0 && std::abs(score - best_score) <= opt.tie_tol;
            if ((!tied && score > best_score) || (tied && out.margins(cand[a]) < out.margins(best))) {
                best_score = std::max(score, best_score);
                best = cand[a];
            }
        }
        if (best < 0) throw SolverError("corner cluster " + std::to_string(c) + " is empty");
        out.indices.push_back(best);
    }
    return out;
}

// Successive projection: take the largest-norm row, project every row onto
// its orthogonal complement, repeat K times.
inline CornerSet spa_corners(const Matrix& U, Index K, double zero_tol = 1e-12) {
    if (K < 1 || K > U.cols() || K > U.rows()) throw DimensionError("K must lie in [1, min(n, columns)]");
    Matrix R = U;
    CornerSet out;
    for (Index k = 0; k < K; ++k) {
        const Vector norms = R.rowwise().squaredNorm();
        Index best = 0;
        const double top = norms.maxCoeff(&best);
        if (!(std::sqrt(top) >= zero_tol)) {
            throw SolverError("successive projection ran out of rank after " + std::to_string(k) + " of " +
                              std::to_string(K) + " corners");
        }
        out.indices.push_back(best);
        const Vector u = R.row(best).transpose() / std::sqrt(top);
        R -= (R * u) * u.transpose();
    }
    return out;
}

} // namespace dcmmdf
