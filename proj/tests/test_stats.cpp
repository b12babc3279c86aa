#include <gtest/gtest.h>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "quadricflow/stats.hpp"

using namespace qflow;

TEST(FCdf, MatchesBoostOracle) {
    for (std::size_t d1 : {1, 2, 3, 5, 10, 64})
        for (std::size_t d2 : {1, 2, 4, 7, 32, 128})
            for (double x : {1e-6, 0.01, 0.2, 0.9, 1.0, 1.7, 5.0, 40.0, 1e4}) {
                const double expect = boost::math::cdf(
                    boost::math::fisher_f_distribution<double>(static_cast<double>(d1), static_cast<double>(d2)), x);
                EXPECT_NEAR(f_cdf(d1, d2, x), expect, 1e-12 + 1e-10 * expect) << d1 << " " << d2 << " " << x;
            }
}

TEST(FCdf, IncompleteBetaMatchesBoost) {
    for (double a : {0.5, 1.0, 2.5, 32.0})
        for (double b : {0.5, 3.0, 20.0})
            for (double x : {0.001, 0.3, 0.5, 0.77, 0.999})
                EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12);
}

TEST(FCdf, KnownValues) {
    EXPECT_NEAR(f_cdf(1, 1, 1.0), 0.5, 1e-10);
    for (double x : {0.01, 0.5, 1.0, 3.0, 100.0}) EXPECT_NEAR(f_cdf(2, 2, x), x / (1 + x), 1e-14);
    EXPECT_EQ(f_cdf(3, 4, 0.0), 0.0);
    EXPECT_EQ(f_cdf(3, 4, -1.0), 0.0);
    EXPECT_THROW(f_cdf(0, 4, 1.0), DomainError);
}

TEST(FCdf, MonotoneBoundedAndTendsToOne) {
    for (std::size_t d2 : {1, 2, 8, 50}) {
        double prev = 0.0;
        for (double x = 0.0; x < 50.0; x += 0.25) {
            const double v = f_cdf(1, d2, x);
            EXPECT_GE(v, prev);
            EXPECT_LE(v, 1.0);
            prev = v;
        }
        EXPECT_NEAR(f_cdf(1, d2, 1e16), 1.0, 1e-7);
    }
}

TEST(Obstruction, SymmetricSingleInput) {
    EXPECT_NEAR(obstruction_probability({1, 1, NormalInit{1, 1}}), 0.5, 1e-12);
    EXPECT_NEAR(obstruction_probability({1, 2, NormalInit{1, 1}}), 0.75, 1e-12);
    EXPECT_NEAR(obstruction_probability({1, 1, NormalInit{3, 3}}), 0.5, 1e-12);
}

TEST(Obstruction, KaimingLargeCornerIsTiny) {
    const double p = obstruction_probability({64, 64, KaimingInit{}});
    EXPECT_GE(p, 0.0);
    EXPECT_LT(p, 1e-3);
    const auto mc = monte_carlo_obstruction({64, 64, KaimingInit{}}, 20000, 7);
    EXPECT_LE(std::abs(mc.estimate - p), 3 * agreement_std_error(mc, p));
}

TEST(Obstruction, MonteCarloAgreement) {
    struct Q {
        ObstructionQuery q;
        std::size_t trials;
    };
    const std::vector<Q> queries{{{1, 1, NormalInit{1, 1}}, 100000},
                                 {{2, 32, XavierInit{}}, 100000},
                                 {{3, 8, KaimingInit{}}, 100000},
                                 {{5, 4, NormalInit{0.3, 1.2}}, 100000}};
    std::uint64_t seed = 100;
    for (const auto& [q, trials] : queries) {
        const double p = obstruction_probability(q);
        const auto mc = monte_carlo_obstruction(q, trials, seed++);
        EXPECT_EQ(mc.trials, trials);
        EXPECT_LE(std::abs(mc.estimate - p), 3 * agreement_std_error(mc, p)) << q.d << " " << q.l;
    }
}

TEST(Obstruction, RejectsUniform) {
    EXPECT_THROW(obstruction_probability({2, 2, UniformInit{}}), DomainError);
    EXPECT_NO_THROW(monte_carlo_obstruction({2, 2, UniformInit{}}, 100, 0));
}

TEST(Obstruction, XavierAtLeastKaimingForSmallInputs) {
    for (std::size_t d = 1; d <= 3; ++d)
        for (std::size_t l = 4; l <= 16; ++l)
            EXPECT_GE(obstruction_probability({d, l, XavierInit{}}), obstruction_probability({d, l, KaimingInit{}}));
}

TEST(MonteCarlo, SingleTrialIsZeroOrOne) {
    const auto mc = monte_carlo_obstruction({2, 3, KaimingInit{}}, 1, 5);
    EXPECT_TRUE(mc.estimate == 0.0 || mc.estimate == 1.0);
}

TEST(MonteCarlo, IndependentOfWorkerCount) {
    const ObstructionQuery q{2, 5, XavierInit{}};
    const auto a = monte_carlo_obstruction(q, 3 * monte_carlo_block + 17, 9, 1);
    const auto b = monte_carlo_obstruction(q, 3 * monte_carlo_block + 17, 9, 3);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_THROW(monte_carlo_obstruction(q, 0, 9), DomainError);
}

TEST(MonteCarlo, AgreementErrorIsNeverZeroForInteriorP) {
    const MonteCarloEstimate m{0.0, 0.0, 100};
    EXPECT_NEAR(agreement_std_error(m, 0.01), std::sqrt(0.01 * 0.99 / 100), 1e-15);
}

TEST(SampleInit, DeterministicPerSeed) {
    EXPECT_EQ(sample_init(KaimingInit{}, 3, 2, 4, 11), sample_init(KaimingInit{}, 3, 2, 4, 11));
    EXPECT_NE(sample_init(KaimingInit{}, 3, 2, 4, 11), sample_init(KaimingInit{}, 3, 2, 4, 12));
    const Params u = sample_init(UniformInit{0.5}, 3, 2, 4, 1);
    for (double w : u.w1.data()) EXPECT_LE(std::abs(w), 0.5);
    EXPECT_FALSE(u.with_bias());
}

TEST(SampleInit, KaimingVariances) {
    const Params p = sample_init(KaimingInit{}, 50, 1, 2000, 3);
    double s1 = 0, s2 = 0;
    for (double w : p.w1.data()) s1 += w * w;
    for (double w : p.w2.data()) s2 += w * w;
    s1 /= static_cast<double>(p.w1.data().size());
    s2 /= static_cast<double>(p.w2.data().size());
    EXPECT_NEAR(s1, 2.0 / 50, 0.01 * 2.0 / 50 * 5);
    EXPECT_NEAR(s2, 2.0 / 2000, 0.1 * 2.0 / 2000);
}

TEST(SampleInit, XavierResolvesWithOutputWidth) {
    const NormalInit v = resolve_variances(XavierInit{}, 4, 3, 6);
    EXPECT_DOUBLE_EQ(v.sigma1_sq, 0.2);
    EXPECT_DOUBLE_EQ(v.sigma2_sq, 2.0 / 9);
}

TEST(Grid, ShapeAndValues) {
    const auto g = prob_grid({1, 2, 3}, {1, 5}, KaimingInit{});
    ASSERT_EQ(g.size(), 3u);
    ASSERT_EQ(g[0].size(), 2u);
    EXPECT_EQ(g[2][1], obstruction_probability({3, 5, KaimingInit{}}));
    EXPECT_NEAR(prob_grid({1}, {1}, NormalInit{1, 1})[0][0], 0.5, 1e-12);
    EXPECT_THROW(prob_grid({}, {1}, KaimingInit{}), DomainError);
}
