#include <cmath>

#include <gtest/gtest.h>

#include "gwve/discrete_laplace.hpp"
#include "support/oracles.hpp"

using namespace gwve;

namespace {

const OffspringLaw binary = FinitePMF{{{0, 0.5}, {2, 0.5}}};

EnvironmentModel binary_env(double n, std::uint64_t gens) { return EnvironmentModel(n, UniformRate{n}, {{gens, binary}}); }

} // namespace

TEST(PsiStep, Examples) {
    const auto env = binary_env(10, 20);
    EXPECT_NEAR(psi_step(env, 3, 1.0), -0.04991688821646436, 1e-15);
    EXPECT_EQ(psi_step(env, 3, 0.0), 0.0);
    const EnvironmentModel dirac(10, UniformRate{10}, {{20, Dirac{1}}});
    EXPECT_EQ(psi_step(dirac, 0, 2.5), 0.0);
}

TEST(EpsilonStep, BoundedByLogSeriesRatio) {
    const auto env = binary_env(10, 20);
    const double eps = epsilon_step(env, 0, 1.0);
    // |x| here is |D| <= sup over the atoms of |1 - e^{-lam x}|/n * n
    const double D = std::abs(std::cosh(0.1) - 1.0);
    EXPECT_LE(std::abs(eps), std::abs((-std::log1p(-D) - D) / D) + 1e-15);
    EXPECT_LT(std::abs(epsilon_step(binary_env(1e5, 2), 0, 1.0)), 1e-4);
}

TEST(UDiscrete, TrivialCases) {
    const auto env = binary_env(10, 30);
    EXPECT_EQ(u_discrete(env, 1.0, 1.0, 0.7).value, 0.7);
    EXPECT_EQ(u_discrete(env, 0.0, 2.0, 0.0).value, 0.0);
    const auto r = u_discrete(env, 0.0, 1.0, 1.0);
    EXPECT_EQ(r.table.u.back(), 1.0);
    EXPECT_EQ(r.table.u.size(), 11u);
    EXPECT_FALSE(r.table.overflow);
}

TEST(UDiscrete, MatchesIteratedMapAndPgfOracle) {
    const auto env = binary_env(10, 10);
    double u = 1.0;
    for (int k = 0; k < 10; ++k) u = u - 10.0 * std::log(std::cosh(u / 10.0));
    const double v = u_discrete(env, 0.0, 1.0, 1.0).value;
    EXPECT_NEAR(v, u, 1e-13);
    const std::vector<std::vector<double>> pmfs(10, {0.5, 0.0, 0.5});
    const double ref = static_cast<double>(-10.0L * std::log(oracle::composed_pgf(pmfs, std::exp(-0.1L))));
    EXPECT_NEAR(v, ref, 1e-12 * ref);
}

TEST(UDiscrete, OverflowIsFlagged) {
    const EnvironmentModel env(1, UniformRate{1}, {{2000, Dirac{2}}});
    const auto r = u_discrete(env, 0.0, 2000.0, 1.0);
    EXPECT_TRUE(r.table.overflow);
    EXPECT_TRUE(std::isinf(r.value));
}

TEST(CompositionResidual, Examples) {
    const auto env = binary_env(10, 30);
    EXPECT_EQ(composition_residual(env, 0.5, 0.5, 0.5, 1.0), 0.0);
    EXPECT_LE(composition_residual(env, 0.0, 0.5, 1.0, 1.0), 1e-12);
    const EnvironmentModel cat(100, UniformRate{100}, {{99, binary}, {1, FinitePMF{{{0, 0.75}, {2, 0.25}}}}, {100, binary}});
    EXPECT_LE(composition_residual(cat, 0.5, 1.0, 1.5, 2.0), 3e-12);
}

TEST(UProfile, DiracIsConstant) {
    const EnvironmentModel env(10, UniformRate{10}, {{50, Dirac{1}}});
    const auto p = u_profile(env, 3.0, 1.5, 0.0);
    for (double u : p.u) EXPECT_EQ(u, 1.5);
    EXPECT_EQ(p.min_u, 1.5);
}

TEST(UProfile, BinaryStaysAwayFromZero) {
    double lo = inf;
    for (double n : {1e2, 1e3, 1e4}) lo = std::min(lo, u_profile(binary_env(n, static_cast<std::uint64_t>(3 * n)), 3.0, 1.0, 0.0).min_u);
    EXPECT_GT(lo, 0.3);
}

TEST(LowerBoundW, Examples) {
    const auto w0 = lower_bound_w({}, {}, 2.0, 1.0, 0.1);
    ASSERT_EQ(w0.size(), 1u);
    EXPECT_EQ(w0[0], 2.0);
    const auto w1 = lower_bound_w({1.5, 1.5, 1.5}, {0.0, 0.0, 0.0}, 2.0, 1.0, 0.1);
    EXPECT_DOUBLE_EQ(w1[0], 2.0 * 1.5 * 1.5 * 1.5);
    const auto w2 = lower_bound_w({1.0, 1.0}, {0.0, 0.0}, 0.3, 1.0, 0.5);
    for (double w : w2) EXPECT_DOUBLE_EQ(w, 0.3);
    EXPECT_THROW(lower_bound_w({1.0}, {1.0}, 1.0, 1.0, 0.1), error);
}

TEST(LowerBoundW, BoundsTheExtremalSequence) {
    const std::vector<double> a{1.1, 0.95, 1.02, 1.0, 0.9}, b{0.05, 0.1, 0.0, 0.2, 0.03};
    const double M = 1.0, eps = 0.5;
    const auto lb = lower_bound_w(a, b, 1.0, M, eps);
    double w = 1.0;
    for (std::size_t i = a.size(); i-- > 0;) {
        w = a[i] * w - b[i] * w * w;
        EXPECT_GE(w, lb[i] - 1e-15);
    }
}

TEST(AprioriBounds, DiracAndBinary) {
    const EnvironmentModel dirac(10, UniformRate{10}, {{50, Dirac{1}}});
    const auto rd = apriori_bounds(dirac, 2.0, 1.0);
    EXPECT_DOUBLE_EQ(rd.c_bar_u, 3.0);
    EXPECT_EQ(rd.variation_violations, 0u);

    const auto env = binary_env(100, 300);
    const auto rb = apriori_bounds(env, 1.0, 1.0);
    const auto p = u_profile(env, 1.0, 1.0, 0.0);
    for (double u : p.u) EXPECT_LE(u, rb.c_bar_u);
    EXPECT_TRUE(rb.eps_condition);
    EXPECT_EQ(rb.variation_violations, 0u);
}

TEST(AprioriBounds, CatastropheVariation) {
    const EnvironmentModel cat(100, UniformRate{100}, {{99, binary}, {1, FinitePMF{{{0, 0.75}, {2, 0.25}}}}, {100, binary}});
    const auto r = apriori_bounds(cat, 2.0, 2.0);
    EXPECT_EQ(r.variation_violations, 0u);
    // across the special generation alone
    const auto tab = u_discrete(cat, 0.0, 2.0, 2.0).table;
    const double jump = std::abs(tab.u[99] - tab.u[100]);
    const auto c = cumulative_over(cat, 99, 100);
    EXPECT_LE(jump, r.delta_u * (c.tv_alpha + c.beta));
}

TEST(UDiscrete, InfiniteLambdaIsExtinction) {
    // binary law from 10 ancestors: P(Z_2 = 0) = f(f(0))^10 with f(f(0)) = 0.625
    const auto env = binary_env(10, 2);
    EXPECT_NEAR(u_n(env, 0.0, 0.2, inf), -10.0 * std::log(0.625), 1e-13);
    EXPECT_NEAR(u_n(env, 0.1, 0.2, inf), 10.0 * std::log(2.0), 1e-13);
    const EnvironmentModel dead(10, UniformRate{10}, {{2, Dirac{0}}});
    EXPECT_EQ(u_n(dead, 0.0, 0.2, inf), 0.0);
}
