#include "dcmmdf/model.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dcmmdf;

namespace {

MembershipMatrix two_rows(double a0, double a1, double b0, double b1) {
    Matrix pi(2, 2);
    pi << a0, a1, b0, b1;
    return MembershipMatrix::estimate(pi);
}

// Sample mean and variance of `m` draws with mean `mean`, each from its own stream.
std::pair<double, double> draw_moments(const EdgeDistribution& dist, double mean, int m, std::uint64_t seed) {
    double s = 0.0, ss = 0.0;
    for (int k = 0; k < m; ++k) {
        Philox4x32 rng(seed, static_cast<std::uint64_t>(k));
        const double x = detail::draw_edge(dist, mean, rng);
        s += x;
        ss += x * x;
    }
    const double mu = s / m;
    return {mu, (ss - m * mu * mu) / (m - 1)};
}

} // namespace

TEST(BuildOmega, IdentityBlockOrthogonalPureRows) {
    const Matrix omega = build_omega(BlockMatrix::from(Matrix::Identity(2, 2)), two_rows(1, 0, 0, 1),
                                     HeterogeneityVector::from(Vector::Ones(2)))
                             .matrix();
    EXPECT_EQ(omega(0, 1), 0.0);
}

TEST(BuildOmega, SingleProductTerm) {
    const Matrix omega = build_omega(BlockMatrix::constant_offdiagonal(2, 0.2), two_rows(1, 0, 0, 1),
                                     HeterogeneityVector::from(Vector::Ones(2)))
                             .matrix();
    EXPECT_DOUBLE_EQ(omega(0, 1), 0.2);
}

TEST(BuildOmega, HandExpandedQuadraticForm) {
    const Matrix omega = build_omega(BlockMatrix::constant_offdiagonal(2, -0.2), two_rows(0.7, 0.3, 0.7, 0.3),
                                     HeterogeneityVector::from(Vector::Ones(2)))
                             .matrix();
    const double oracle = 0.7 * 0.7 * 1.0 + 2.0 * 0.7 * 0.3 * (-0.2) + 0.3 * 0.3 * 1.0;
    EXPECT_NEAR(oracle, 0.496, 1e-15);
    EXPECT_NEAR(omega(0, 1), oracle, 1e-15);
}

TEST(BuildOmega, MatchesEntrywiseSum) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const auto inst = gen::random_instance(rng, {.n_min = 10, .n_max = 30});
        const Matrix& pi = inst.pi.matrix();
        const Matrix& P = inst.P.matrix();
        for (Index i = 0; i < inst.n; i += 3) {
            for (Index j = 0; j < inst.n; j += 5) {
                double v = 0.0;
                for (Index a = 0; a < inst.K; ++a) {
                    for (Index b = 0; b < inst.K; ++b) v += pi(i, a) * P(a, b) * pi(j, b);
                }
                v *= inst.theta(i) * inst.theta(j);
                ASSERT_NEAR(inst.omega(i, j), v, 1e-10);
            }
        }
    }
}

TEST(BuildOmega, DimensionMismatch) {
    EXPECT_THROW(build_omega(BlockMatrix::from(Matrix::Identity(3, 3)), two_rows(1, 0, 0, 1),
                             HeterogeneityVector::from(Vector::Ones(2))),
                 DimensionError);
    EXPECT_THROW(build_omega(BlockMatrix::from(Matrix::Identity(2, 2)), two_rows(1, 0, 0, 1),
                             HeterogeneityVector::from(Vector::Ones(3))),
                 DimensionError);
}

TEST(Invariants, MembershipRejectsBadRows) {
    Matrix bad(2, 2);
    bad << 0.6, 0.6, 0, 1;
    EXPECT_THROW(MembershipMatrix::estimate(bad), InvariantError);
    bad << 1.2, -0.2, 0, 1;
    EXPECT_THROW(MembershipMatrix::estimate(bad), InvariantError);
    Matrix no_pure(3, 2);
    no_pure << 1, 0, 0.5, 0.5, 0.4, 0.6;
    EXPECT_THROW(MembershipMatrix::ground_truth(no_pure), InvariantError);
    Matrix rank1(2, 2);
    rank1 << 1, 0, 1, 0;
    EXPECT_THROW(MembershipMatrix::ground_truth(rank1), InvariantError);
}

TEST(Invariants, BlockMatrixRules) {
    Matrix p(2, 2);
    p << 1, 0.2, 0.3, 1;
    EXPECT_THROW(BlockMatrix::from(p), InvariantError);
    p << 0.9, 0.2, 0.2, 1;
    EXPECT_THROW(BlockMatrix::from(p), InvariantError);
    p << 1, 1, 1, 1;
    EXPECT_THROW(BlockMatrix::from(p), InvariantError);
    EXPECT_THROW(BlockMatrix::from(Matrix::Identity(2, 3)), DimensionError);
}

TEST(Invariants, ThetaPositive) {
    Vector t(3);
    t << 1, 0, 1;
    EXPECT_THROW(HeterogeneityVector::from(t), InvariantError);
    t << 1, -1, 1;
    EXPECT_THROW(HeterogeneityVector::from(t), InvariantError);
}

TEST(Sample, DegenerateBernoulli) {
    Matrix omega = Matrix::Ones(5, 5);
    const auto A = sample_adjacency(omega, BernoulliEdges{}, 3);
    for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) EXPECT_EQ(A(i, j), i == j ? 0.0 : 1.0);
    }
}

TEST(Sample, SignedZeroMeanIsFairCoin) {
    const auto [mean, var] = draw_moments(SignedEdges{}, 0.0, 1000000, 5);
    EXPECT_NEAR(mean, 0.0, 0.005);
    (void)var;
}

TEST(Sample, PoissonMoments) {
    const auto [mean, var] = draw_moments(PoissonEdges{}, 0.3, 1000000, 6);
    EXPECT_NEAR(mean, 0.3, 0.01);
    EXPECT_NEAR(var, 0.3, 0.01);
}

TEST(Sample, SupportViolationNamesEntry) {
    Matrix omega = Matrix::Constant(3, 3, 0.5);
    omega(1, 2) = omega(2, 1) = 1.5;
    try {
        sample_adjacency(omega, BernoulliEdges{}, 1);
        FAIL() << "expected SupportError";
    } catch (const SupportError& e) {
        EXPECT_NE(std::string(e.what()).find("(1, 2)"), std::string::npos) << e.what();
    }
    omega(1, 2) = omega(2, 1) = -0.1;
    EXPECT_THROW(sample_adjacency(omega, PoissonEdges{}, 1), SupportError);
    omega(1, 2) = omega(2, 1) = -1.1;
    EXPECT_THROW(sample_adjacency(omega, SignedEdges{}, 1), SupportError);
    EXPECT_NO_THROW(sample_adjacency(omega, NormalEdges{1.0}, 1));
}

TEST(Sample, DiagonalOnlyDrawnWhenKept) {
    const Matrix omega = Matrix::Constant(6, 6, 0.5);
    const auto zero = sample_adjacency(omega, NormalEdges{1.0}, 2);
    EXPECT_EQ(zero.matrix().diagonal().cwiseAbs().sum(), 0.0);
    const auto kept = sample_adjacency(omega, NormalEdges{1.0}, 2, true);
    EXPECT_GT(kept.matrix().diagonal().cwiseAbs().sum(), 0.0);
    // Off-diagonal draws do not depend on the diagonal choice.
    Matrix off_zero = zero.matrix(), off_kept = kept.matrix();
    off_zero.diagonal().setZero();
    off_kept.diagonal().setZero();
    EXPECT_EQ(off_zero, off_kept);
}

TEST(Sample, ReproducibleFromSeed) {
    const Matrix omega = Matrix::Constant(20, 20, 0.3);
    EXPECT_EQ(sample_adjacency(omega, PoissonEdges{}, 77).matrix(), sample_adjacency(omega, PoissonEdges{}, 77).matrix());
    EXPECT_NE(sample_adjacency(omega, PoissonEdges{}, 77).matrix(), sample_adjacency(omega, PoissonEdges{}, 78).matrix());
}

TEST(Sample, NormalZeroVarianceIsOmega) {
    Matrix omega = Matrix::Constant(4, 4, -0.7);
    const auto A = sample_adjacency(omega, NormalEdges{0.0}, 1);
    omega.diagonal().setZero();
    EXPECT_EQ(A.matrix(), omega);
}

TEST(SyntheticMembership, ExperimentLayout) {
    std::vector<MixedProfile> prof;
    const double w[4][3] = {{0.1, 0.1, 0.8}, {0.1, 0.8, 0.1}, {0.8, 0.1, 0.1}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
    for (auto& r : w) prof.push_back({(Vector(3) << r[0], r[1], r[2]).finished(), 70});
    const auto pi = make_synthetic_membership(400, 3, 40, prof);
    EXPECT_EQ(pi.matrix().row(0), (Eigen::RowVectorXd(3) << 1, 0, 0).finished());
    EXPECT_EQ(pi.matrix().row(40), (Eigen::RowVectorXd(3) << 0, 1, 0).finished());
    EXPECT_EQ(pi.matrix().row(120), (Eigen::RowVectorXd(3) << 0.1, 0.1, 0.8).finished());
    EXPECT_EQ(pi.matrix().row(399), (Eigen::RowVectorXd(3) << 1.0 / 3, 1.0 / 3, 1.0 / 3).finished());
}

TEST(SyntheticMembership, FullyPure) {
    const auto pi = make_synthetic_membership(12, 3, 4, {});
    Eigen::JacobiSVD<Matrix> svd(pi.matrix());
    EXPECT_GT(svd.singularValues()(2), 1.0);
}

TEST(SyntheticMembership, SetupTwoLayout) {
    const auto pi = make_synthetic_membership(30, 2, 10, {{(Vector(2) << 0.7, 0.3).finished(), 10}});
    for (Index i = 20; i < 30; ++i) EXPECT_EQ(pi.matrix().row(i), (Eigen::RowVectorXd(2) << 0.7, 0.3).finished());
    EXPECT_EQ(pi.pure_rows(0).size(), 10u);
    EXPECT_EQ(pi.pure_rows(1).size(), 10u);
}

TEST(SyntheticMembership, Errors) {
    EXPECT_THROW(make_synthetic_membership(31, 2, 10, {{(Vector(2) << 0.7, 0.3).finished(), 10}}), DimensionError);
    EXPECT_THROW(make_synthetic_membership(30, 2, 10, {{(Vector(2) << 0.7, 0.4).finished(), 10}}), InvariantError);
}

TEST(Theta, LinearRampExamples) {
    const auto t = make_theta(16, 10.0, ThetaRule::linear_ramp);
    EXPECT_DOUBLE_EQ(t(15), 10.0);
    EXPECT_DOUBLE_EQ(t(7), 0.9 * 10 + 0.1 * 8 * 10.0 / 16);
    EXPECT_DOUBLE_EQ(t(7), 9.5);
    EXPECT_GT(t.min(), 9.0);
}

TEST(Theta, UniformHalfRange) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t = make_theta(500, 1.0, ThetaRule::uniform_half, seed);
        EXPECT_GT(t.min(), 0.5);
        EXPECT_LE(t.max(), 1.0);
    }
    EXPECT_THROW(make_theta(5, 0.0, ThetaRule::uniform_half), InvariantError);
}

TEST(Diagnostics, ZeroNoise) {
    const auto pi = make_synthetic_membership(6, 2, 3, {});
    const auto theta = HeterogeneityVector::from(Vector::Constant(6, 0.5));
    const auto omega = build_omega(BlockMatrix::constant_offdiagonal(2, 0.2), pi, theta);
    const auto d = compute_diagnostics(WeightedAdjacency::from(omega.matrix()), omega, theta, BernoulliEdges{});
    EXPECT_EQ(d.tau, 0.0);
    EXPECT_DOUBLE_EQ(d.gamma_bound, 1.0);
}

TEST(Diagnostics, GammaBounds) {
    const auto pi = make_synthetic_membership(6, 2, 3, {});
    Vector t = Vector::Ones(6);
    t(4) = 0.5;
    const auto theta = HeterogeneityVector::from(t);
    const auto omega = build_omega(BlockMatrix::constant_offdiagonal(2, -0.2), pi, theta);
    const auto A = WeightedAdjacency::from(omega.matrix());
    EXPECT_DOUBLE_EQ(compute_diagnostics(A, omega, theta, SignedEdges{}).gamma_bound, 4.0);
    EXPECT_DOUBLE_EQ(compute_diagnostics(A, omega, theta, NormalEdges{2.0}).gamma_bound, 8.0);
    EXPECT_DOUBLE_EQ(compute_diagnostics(A, omega, theta, PoissonEdges{}).gamma_bound, 1.0);
}

TEST(Diagnostics, TauIsMaxOffDiagonalDeviation) {
    Matrix omega = Matrix::Constant(3, 3, 0.5);
    Matrix a = Matrix::Constant(3, 3, 0.5);
    a(0, 2) = a(2, 0) = 1.25;
    a(1, 1) = 9.0;
    const auto pi = make_synthetic_membership(3, 1, 3, {});
    const auto theta = HeterogeneityVector::from(Vector::Constant(3, std::sqrt(0.5)));
    const auto om = build_omega(BlockMatrix::from(Matrix::Ones(1, 1)), pi, theta);
    EXPECT_DOUBLE_EQ(compute_diagnostics(WeightedAdjacency::from(a), om, theta, NormalEdges{1.0}).tau, 0.75);
}

// ---- properties -----------------------------------------------------------

TEST(ModelProperties, SampleIsSymmetric) {
    std::mt19937_64 rng(21);
    const EdgeDistribution dists[] = {NormalEdges{2.0}, BernoulliEdges{}, PoissonEdges{}, SignedEdges{}};
    for (int t = 0; t < 20; ++t) {
        const auto inst = gen::random_instance(rng, {.n_min = 10, .n_max = 60, .p_min = 0.0, .p_max = 0.5});
        for (const auto& d : dists) {
            const auto A = sample_adjacency(inst.omega, d, static_cast<std::uint64_t>(t));
            ASSERT_EQ(A.matrix(), A.matrix().transpose());
        }
    }
}

TEST(ModelProperties, SupportOfSamples) {
    const Matrix omega = Matrix::Constant(40, 40, 0.45);
    const auto b = sample_adjacency(omega, BernoulliEdges{}, 1).matrix();
    const auto p = sample_adjacency(omega, PoissonEdges{}, 1).matrix();
    const auto s = sample_adjacency(omega, SignedEdges{}, 1).matrix();
    for (Index i = 0; i < 40; ++i) {
        for (Index j = 0; j < 40; ++j) {
            if (i == j) continue;
            ASSERT_TRUE(b(i, j) == 0.0 || b(i, j) == 1.0);
            ASSERT_TRUE(p(i, j) >= 0.0 && p(i, j) == std::floor(p(i, j)));
            ASSERT_TRUE(s(i, j) == 1.0 || s(i, j) == -1.0);
        }
    }
}

TEST(ModelProperties, Unbiasedness) {
    const int m = 100000;
    struct Case {
        EdgeDistribution dist;
        double mean;
        double sd;
    };
    const Case cases[] = {{NormalEdges{2.0}, -0.4, std::sqrt(2.0)},
                          {BernoulliEdges{}, 0.3, std::sqrt(0.3 * 0.7)},
                          {PoissonEdges{}, 1.7, std::sqrt(1.7)},
                          {SignedEdges{}, -0.2, std::sqrt(1.0 - 0.04)}};
    for (const auto& c : cases) {
        const auto [mean, var] = draw_moments(c.dist, c.mean, m, 99);
        EXPECT_NEAR(mean, c.mean, 4.0 * c.sd / std::sqrt(m)) << distribution_name(c.dist);
        EXPECT_NEAR(var, c.sd * c.sd, 0.05 * c.sd * c.sd) << distribution_name(c.dist);
    }
}

TEST(ModelProperties, OmegaRankIsK) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 30; ++t) {
        const auto inst = gen::random_instance(rng, {.n_min = 20, .n_max = 80});
        Eigen::JacobiSVD<Matrix> svd(inst.omega.matrix());
        const Vector s = svd.singularValues();
        ASSERT_GT(s(inst.K - 1), 1e-10 * s(0));
        if (inst.K < inst.n) ASSERT_LT(s(inst.K), 1e-10 * s(0));
    }
}

TEST(ModelProperties, ThetaScaleCovariance) {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 20; ++t) {
        const auto inst = gen::random_instance(rng, {.n_min = 10, .n_max = 50});
        for (double c : {2.0, 0.5, 3.7}) {
            const auto scaled = build_omega(inst.P, inst.pi, HeterogeneityVector::from(c * inst.theta.vector()));
            const Matrix expect = c * c * inst.omega.matrix();
            if (c == 2.0 || c == 0.5) {
                ASSERT_EQ(scaled.matrix(), expect);
            } else {
                ASSERT_LE((scaled.matrix() - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.cwiseAbs().maxCoeff());
            }
        }
    }
}

TEST(Custom, UserSamplerHook) {
    CustomEdges c{"constant", [](double mean, Philox4x32&) { return 2.0 * mean; }};
    const auto A = sample_adjacency(Matrix::Constant(3, 3, 0.25), c, 1);
    EXPECT_EQ(A(0, 1), 0.5);
    EXPECT_EQ(distribution_name(c), "constant");
}
