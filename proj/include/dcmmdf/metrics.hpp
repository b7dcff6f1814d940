#pragma once

// Permutation-minimized membership errors, home-base labels, miscluster
// counts and mixedness flags.

#include "dcmmdf/assignment.hpp"
#include "dcmmdf/common.hpp"
#include "dcmmdf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace dcmmdf {

enum class PermutationSearch {
    automatic,  // exhaustive for K <= 8, assignment above
    exhaustive, // all K! permutations
    assignment, // Hungarian method on the K x K column cost matrix
};

// perm[k] = column of the reference matched to estimated column k.
struct PermutationMatch {
    std::vector<Index> perm;
    double cost = 0.0;
};

namespace detail {

inline constexpr Index exhaustive_limit = 8;

// Minimizes sum_k cost(k, perm[k]).
inline PermutationMatch best_permutation(const Matrix& cost, PermutationSearch search) {
    const Index K = cost.rows();
    if (search == PermutationSearch::automatic) {
        search = K <= exhaustive_limit ? PermutationSearch::exhaustive : PermutationSearch::assignment;
    }
    PermutationMatch best;
    if (search == PermutationSearch::exhaustive) {
        std::vector<Index> perm(static_cast<std::size_t>(K));
        std::iota(perm.begin(), perm.end(), Index{0});
        best.cost = std::numeric_limits<double>::infinity();
        do {
            double c = 0.0;
            for (Index k = 0; k < K; ++k) c += cost(k, perm[static_cast<std::size_t>(k)]);
            if (c < best.cost) {
                best.cost = c;
                best.perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    const auto assign = min_cost_assignment<double>(static_cast<std::size_t>(K),
                                                    [&](std::size_t r, std::size_t c) {
                                                        return cost(static_cast<Index>(r), static_cast<Index>(c));
                                                    });
    best.perm.assign(assign.begin(), assign.end());
    for (Index k = 0; k < K; ++k) best.cost += cost(k, best.perm[static_cast<std::size_t>(k)]);
    return best;
}

inline Matrix column_l1_costs(const Matrix& hat, const Matrix& ref) {
    const Index K = hat.cols();
    Matrix cost(K, K);
    for (Index a = 0; a < K; ++a) {
        for (Index b = 0; b < K; ++b) cost(a, b) = (hat.col(a) - ref.col(b)).cwiseAbs().sum();
    }
    return cost;
}

} // namespace detail

// Hard labels in [0, K).
struct LabelVector {
    std::vector<Index> labels;
    Index K = 0;

    static LabelVector from(std::vector<Index> labels, Index K) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= K) {
                throw InvariantError("label " + std::to_string(labels[i]) + " at node " + std::to_string(i) +
                                     " is outside [0, " + std::to_string(K) + ")");
            }
        }
        return LabelVector{std::move(labels), K};
    }

    std::size_t size() const noexcept { return labels.size(); }
};

// Row argmax; ties go to the smallest community index.
inline LabelVector home_base(const Matrix& pi_hat) {
    std::vector<Index> labels(static_cast<std::size_t>(pi_hat.rows()));
    for (Index i = 0; i < pi_hat.rows(); ++i) {
        Index best = 0;
        for (Index k = 1; k < pi_hat.cols(); ++k) {
            if (pi_hat(i, k) > pi_hat(i, best)) best = k;
        }
        labels[static_cast<std::size_t>(i)] = best;
    }
    return LabelVector{std::move(labels), pi_hat.cols()};
}

inline LabelVector home_base(const MembershipMatrix& pi_hat) { return home_base(pi_hat.matrix()); }

struct MisclusterResult {
    Index count = 0;
    std::vector<Index> perm; // estimated label k corresponds to true label perm[k]
};

// Minimum disagreement over all relabelings of the estimate.
inline MisclusterResult miscluster_count(const LabelVector& hat, const LabelVector& truth,
                                         PermutationSearch search = PermutationSearch::automatic) {
    if (hat.size() != truth.size()) throw DimensionError("label vectors differ in length");
    if (hat.K != truth.K) throw DimensionError("label vectors use different K");
    const Index K = hat.K;
    Matrix disagreement = Matrix::Zero(K, K);
    // disagreement(a, b) = nodes with hat == a whose truth != b
    std::vector<Index> hat_counts(static_cast<std::size_t>(K), 0);
    Matrix agree = Matrix::Zero(K, K);
    for (std::size_t i = 0; i < hat.size(); ++i) {
        agree(hat.labels[i], truth.labels[i]) += 1.0;
        ++hat_counts[static_cast<std::size_t>(hat.labels[i])];
    }
    for (Index a = 0; a < K; ++a) {
        for (Index b = 0; b < K; ++b) disagreement(a, b) = static_cast<double>(hat_counts[static_cast<std::size_t>(a)]) - agree(a, b);
    }
    const PermutationMatch m = detail::best_permutation(disagreement, search);
    return MisclusterResult{static_cast<Index>(std::llround(m.cost)), m.perm};
}

// max_k Pi_hat(i, k) <= threshold.
inline std::vector<bool> highly_mixed(const Matrix& pi_hat, double threshold = 0.8) {
    const double lower = 1.0 / static_cast<double>(pi_hat.cols());
    if (!(threshold > lower && threshold <= 1.0)) {
        throw InvariantError("highly-mixed threshold must lie in (1/K, 1]");
    }
    std::vector<bool> mask(static_cast<std::size_t>(pi_hat.rows()));
    for (Index i = 0; i < pi_hat.rows(); ++i) mask[static_cast<std::size_t>(i)] = pi_hat.row(i).maxCoeff() <= threshold;
    return mask;
}

inline std::vector<bool> highly_mixed(const MembershipMatrix& pi_hat, double threshold = 0.8) {
    return highly_mixed(pi_hat.matrix(), threshold);
}

struct ErrorReport {
    double l1_rate = 0.0;              // min_perm ||Pi_hat - Pi perm||_1 / n
    std::vector<Index> best_permutation;
    Index miscluster_count = 0;        // home-base disagreements after relabeling
    std::vector<bool> highly_mixed_mask;
};

inline ErrorReport l1_error_rate(const Matrix& pi_hat, const Matrix& pi,
                                 PermutationSearch search = PermutationSearch::automatic, double mixed_threshold = 0.8) {
    if (pi_hat.rows() != pi.rows() || pi_hat.cols() != pi.cols()) {
        throw DimensionError("membership shapes differ: " + detail::shape(pi_hat) + " vs " + detail::shape(pi));
    }
    if (pi.rows() == 0) throw DimensionError("membership matrices are empty");
    ErrorReport out;
    const PermutationMatch m = detail::best_permutation(detail::column_l1_costs(pi_hat, pi), search);
    out.l1_rate = m.cost / static_cast<double>(pi.rows());
    out.best_permutation = m.perm;
    out.miscluster_count = miscluster_count(home_base(pi_hat), home_base(pi), search).count;
    if (pi_hat.cols() > 1) out.highly_mixed_mask = highly_mixed(pi_hat, mixed_threshold);
    return out;
}

inline ErrorReport l1_error_rate(const MembershipMatrix& pi_hat, const MembershipMatrix& pi,
                                 PermutationSearch search = PermutationSearch::automatic) {
    return l1_error_rate(pi_hat.matrix(), pi.matrix(), search);
}

// min over column permutations of max_i ||Pi_hat(i,:) - (Pi perm)(i,:)||_1.
// Exhaustive for K <= 8; above that the L1-optimal permutation is used.
inline double max_row_l1_error(const Matrix& pi_hat, const Matrix& pi) {
    if (pi_hat.rows() != pi.rows() || pi_hat.cols() != pi.cols()) throw DimensionError("membership shapes differ");
    const Index K = pi.cols();
    auto evaluate = [&](const std::vector<Index>& perm) {
        double worst = 0.0;
        for (Index i = 0; i < pi.rows(); ++i) {
            double row = 0.0;
            for (Index k = 0; k < K; ++k) row += std::abs(pi_hat(i, k) - pi(i, perm[static_cast<std::size_t>(k)]));
            worst = std::max(worst, row);
        }
        return worst;
    };
    if (K > detail::exhaustive_limit) {
        return evaluate(detail::best_permutation(detail::column_l1_costs(pi_hat, pi), PermutationSearch::assignment).perm);
    }
    std::vector<Index> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, evaluate(perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("spearman needs two equal-length series (n >= 2)");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t s = 0; s < idx.size();) {
            std::size_t e = s + 1;
            while (e < idx.size() && v[idx[e]] == v[idx[s]]) ++e;
            const double avg = 0.5 * static_cast<double>(s + e - 1) + 1.0;
            for (std::size_t t = s; t < e; ++t) r[idx[t]] = avg;
            s = e;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace dcmmdf
