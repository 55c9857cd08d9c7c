#include <cmath>

#include <gtest/gtest.h>

#include "gwve/discrete_laplace.hpp"
#include "gwve/montecarlo.hpp"

using namespace gwve;

namespace {

const OffspringLaw binary = FinitePMF{{{0, 0.5}, {2, 0.5}}};

} // namespace

TEST(Simulate, DiracOne) {
    const EnvironmentModel env(10, UniformRate{10}, {{20, Dirac{1}}});
    const auto b = simulate(env, 7, 20, 1, 50);
    for (auto z : b.pop) EXPECT_EQ(z, 7u);
}

TEST(Simulate, DiracTwoDoubles) {
    const EnvironmentModel env(1, UniformRate{1}, {{5, Dirac{2}}});
    const auto b = simulate(env, 1, 5, 3, 10);
    for (std::size_t p = 0; p < 10; ++p)
        for (std::size_t c = 0; c <= 5; ++c) EXPECT_EQ(b.at(p, c), 1u << c);
}

TEST(Simulate, CertainDeath) {
    const EnvironmentModel env(1, UniformRate{1}, {{1, Bernoulli01{0.0}}, {3, binary}});
    const auto b = simulate(env, 100, 4, 3, 20);
    for (std::size_t p = 0; p < 20; ++p) EXPECT_EQ(b.at(p, 1), 0u);
    EXPECT_EQ(survival_estimate(b, 1.0).mean, 0.0);
}

TEST(Simulate, OverflowFreezesAndExcludes) {
    const EnvironmentModel env(1, UniformRate{1}, {{80, Dirac{2}}});
    const auto b = simulate(env, 1, 80, 3, 4);
    EXPECT_EQ(b.overflow_count(), 4u);
    EXPECT_THROW(empirical_laplace(b, 80.0, 1.0), error);
}

TEST(Simulate, ThreadCountDoesNotChangeBatch) {
    const EnvironmentModel env(50, UniformRate{50}, {{100, binary}});
    SimOptions one, four;
    four.threads = 4;
    const auto a = simulate(env, 50, 100, 11, 300, one), c = simulate(env, 50, 100, 11, 300, four);
    EXPECT_EQ(a.pop, c.pop);
}

TEST(EmpiricalLaplace, TrivialCases) {
    const EnvironmentModel env(10, UniformRate{10}, {{20, Dirac{1}}});
    const auto b = simulate(env, 10, 20, 1, 50);
    const auto e = empirical_laplace(b, 1.0, 0.7);
    EXPECT_DOUBLE_EQ(e.mean, std::exp(-0.7));
    EXPECT_EQ(e.se, 0.0);
    EXPECT_EQ(empirical_laplace(b, 1.0, 0.0).mean, 1.0);
    EXPECT_EQ(empirical_fdd(b, 0.0, {{1.0, 0.0}, {2.0, 0.0}}).mean, 1.0);
    EXPECT_EQ(survival_estimate(b, 2.0).mean, 1.0);
}

TEST(EmpiricalLaplace, BinaryMatchesExactIdentity) {
    const EnvironmentModel env(100, UniformRate{100}, {{200, binary}});
    SimOptions o;
    o.threads = 4;
    const auto b = simulate(env, 100, 200, 5, 20000, o);
    const auto e = empirical_laplace(b, 1.0, 1.0);
    EXPECT_LE(std::abs(e.mean - std::exp(-u_n(env, 0.0, 1.0, 1.0))), 4.0 * e.se);
    const double nested = std::exp(-u_n(env, 0.0, 1.0, 0.5 + u_n(env, 1.0, 2.0, 1.5)));
    const auto f = empirical_fdd(b, 0.0, {{1.0, 0.5}, {2.0, 1.5}});
    EXPECT_LE(std::abs(f.mean - nested), 4.0 * f.se);
}

TEST(Simulate, PoissonAndStableMeans) {
    const EnvironmentModel env(100, UniformRate{100}, {{10, Poisson{1.0}}, {10, StablePGF{1.5, 1.0 / 3.0}}});
    SimOptions o;
    o.threads = 4;
    const auto b = simulate(env, 200, 20, 9, 4000, o);
    const auto s = summarize(b);
    // critical laws: E[Z_g] = z0
    EXPECT_LE(std::abs(s.means[10] - 2.0), 4.0 * s.se[10]);
    EXPECT_LE(std::abs(s.means[20] - 2.0), 4.0 * s.se[20] + 0.01);
}
