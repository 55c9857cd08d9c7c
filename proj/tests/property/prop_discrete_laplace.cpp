#include <gtest/gtest.h>

#include "gwve/discrete_laplace.hpp"
#include "support/oracles.hpp"
#include "support/property.hpp"

using namespace gwve;
using prop::Rng;
using testing::AssertionFailure;
using testing::AssertionResult;
using testing::AssertionSuccess;

TEST(DiscreteLaplaceProperty, MonotoneInLambdaAndZeroAtZero) {
    EXPECT_TRUE(prop::for_all(301, [](Rng& rng) -> AssertionResult {
        const auto env = prop::random_env(rng);
        const double t = prop::uniform(rng, 0.0, 2.0), s = prop::uniform(rng, 0.0, t);
        if (u_n(env, s, t, 0.0) != 0.0) return AssertionFailure() << "u(s, t, 0) = " << u_n(env, s, t, 0.0);
        double l1 = prop::log_uniform(rng, 1e-3, 20.0), l2 = prop::log_uniform(rng, 1e-3, 20.0);
        if (l1 > l2) std::swap(l1, l2);
        const double u1 = u_n(env, s, t, l1), u2 = u_n(env, s, t, l2);
        if (u1 > u2 * (1.0 + 1e-12)) return AssertionFailure() << "u(" << l1 << ") = " << u1 << " > u(" << l2 << ") = " << u2;
        if (u1 < 0.0) return AssertionFailure() << "negative u " << u1;
        const auto tab = u_discrete(env, s, t, l1).table;
        if (tab.u.back() != l1) return AssertionFailure() << "last entry " << tab.u.back() << " != " << l1;
        for (double v : tab.u)
            if (!(v >= 0.0 && std::isfinite(v))) return AssertionFailure() << "table entry " << v;
        return AssertionSuccess();
    }));
}

TEST(DiscreteLaplaceProperty, MatchesComposedPgf) {
    EXPECT_TRUE(prop::for_all(302, [](Rng& rng) -> AssertionResult {
        const double n = std::round(prop::log_uniform(rng, 1.0, 1e3));
        const auto G = prop::integer(rng, 1, 12);
        std::vector<Block> blocks;
        std::vector<std::vector<double>> pmfs;
        for (std::uint64_t g = 0; g < G; ++g) {
            auto f = prop::finite_pmf(rng, 4, 4);
            std::vector<double> dense(5, 0.0);
            for (const auto& [k, p] : f.pmf) dense[k] = p;
            pmfs.push_back(dense);
            blocks.push_back({1, f});
        }
        const EnvironmentModel env(n, UniformRate{static_cast<double>(G)}, blocks);
        const double lam = prop::log_uniform(rng, 1e-2, 10.0);
        const oracle::ld f = oracle::composed_pgf(pmfs, std::exp(-static_cast<oracle::ld>(lam) / n));
        const double ref = static_cast<double>(-n * std::log(f));
        const double got = u_n(env, 0.0, 1.0, lam);
        if (!std::isfinite(ref)) return got == inf ? AssertionSuccess() : AssertionFailure() << "expected inf, got " << got;
        if (std::abs(got - ref) > 1e-10 * std::abs(ref) + 1e-11) return AssertionFailure() << "n=" << n << " G=" << G << ": " << got << " vs " << ref;
        return AssertionSuccess();
    }));
}

TEST(DiscreteLaplaceProperty, CompositionIdentity) {
    EXPECT_TRUE(prop::for_all(303, [](Rng& rng) -> AssertionResult {
        const auto env = prop::random_env(rng);
        double t[3] = {prop::uniform(rng, 0.0, 2.0), prop::uniform(rng, 0.0, 2.0), prop::uniform(rng, 0.0, 2.0)};
        std::sort(t, t + 3);
        const double lam = prop::log_uniform(rng, 1e-3, 10.0);
        const double r = composition_residual(env, t[0], t[1], t[2], lam);
        if (r > 1e-12 * (1.0 + lam)) return AssertionFailure() << "residual " << r;
        return AssertionSuccess();
    }));
}

TEST(DiscreteLaplaceProperty, ProfileWithinAprioriBound) {
    EXPECT_TRUE(prop::for_all(304, [](Rng& rng) -> AssertionResult {
        const auto env = prop::random_env(rng, true);
        const double t = prop::uniform(rng, 0.1, 2.0), lam = prop::log_uniform(rng, 1e-2, 5.0);
        const auto b = apriori_bounds(env, t, lam);
        const auto p = u_profile(env, t, lam, 0.0);
        for (std::size_t k = 0; k < p.u.size(); ++k) {
            if (p.u[k] < 0.0) return AssertionFailure() << "negative profile value at " << p.time[k];
            if (b.eps_condition && p.u[k] > b.c_bar_u) return AssertionFailure() << "profile " << p.u[k] << " above bound " << b.c_bar_u;
        }
        return AssertionSuccess();
    }));
}
