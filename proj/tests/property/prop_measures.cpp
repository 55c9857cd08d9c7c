#include <gtest/gtest.h>

#include "gwve/constants.hpp"
#include "gwve/levy_measure.hpp"
#include "gwve/measures.hpp"
#include "support/oracles.hpp"
#include "support/property.hpp"

using namespace gwve;
using prop::Rng;
using testing::AssertionFailure;
using testing::AssertionResult;
using testing::AssertionSuccess;

namespace {

double random_x(Rng& rng) {
    switch (prop::integer(rng, 0, 2)) {
    case 0: return prop::uniform(rng, -1.0, 1.0);
    case 1: return prop::log_uniform(rng, 1e-6, 1e-2) * (prop::coin(rng) ? 1.0 : -1.0);
    default: return prop::log_uniform(rng, 1.0, 1e4);
    }
}

} // namespace

TEST(MeasuresProperty, GBoundedByC1Prime) {
    EXPECT_TRUE(prop::for_all(101, [](Rng& rng) -> AssertionResult {
        const double C = prop::log_uniform(rng, 0.01, 50.0);
        const double bound = const_c1_prime(C);
        for (int k = 0; k < 20; ++k) {
            const double x = random_x(rng), lam = prop::uniform(rng, 0.0, C);
            if (x == 0.0) continue;
            const double lhs = std::abs(eval_g(x, lam)) * (1.0 + x * x) / (x * x);
            if (lhs > bound * (1.0 + 1e-12) + 1e-15) return AssertionFailure() << "x=" << x << " lam=" << lam << " C=" << C << ": " << lhs << " > " << bound;
        }
        return AssertionSuccess();
    }));
}

TEST(MeasuresProperty, HNonnegative) {
    EXPECT_TRUE(prop::for_all(102, [](Rng& rng) -> AssertionResult {
        for (int k = 0; k < 20; ++k) {
            const double x = prop::coin(rng) ? prop::log_uniform(rng, 1e-8, 1e4) : prop::uniform(rng, 0.0, 2.0);
            const double lam = prop::coin(rng) ? prop::log_uniform(rng, 1e-8, 1e4) : prop::uniform(rng, 0.0, 5.0);
            if (eval_h(x, lam) < 0.0) return AssertionFailure() << "h(" << x << ", " << lam << ") = " << eval_h(x, lam);
        }
        return AssertionSuccess();
    }));
}

TEST(MeasuresProperty, GBelowX2Kernel) {
    EXPECT_TRUE(prop::for_all(103, [](Rng& rng) -> AssertionResult {
        for (int k = 0; k < 20; ++k) {
            const double x = random_x(rng), lam = prop::coin(rng) ? prop::log_uniform(rng, 1e-6, 1e3) : prop::uniform(rng, 0.0, 3.0);
            const double cap = x * x / (1.0 + x * x);
            if (eval_g(x, lam) > cap * (1.0 + 1e-12)) return AssertionFailure() << "g(" << x << ", " << lam << ") = " << eval_g(x, lam) << " > " << cap;
        }
        return AssertionSuccess();
    }));
}

TEST(MeasuresProperty, TildeBetaNondecreasingWithoutAtoms) {
    EXPECT_TRUE(prop::for_all(104, [](Rng& rng) -> AssertionResult {
        const double T = prop::uniform(rng, 0.5, 4.0);
        const auto trip = prop::random_triplet(rng, T);
        validate(trip);
        double prev = 0.0;
        for (int k = 1; k <= 40; ++k) {
            const double t = T * k / 40.0;
            const double v = tilde_beta(trip, t);
            if (v < prev - 1e-12) return AssertionFailure() << "tilde beta decreases at t=" << t;
            prev = v;
        }
        for (double tau : detail::atom_times(trip)) {
            const double jump = tilde_beta(trip, tau) - tilde_beta(trip, tau * (1.0 - 1e-12));
            if (std::abs(jump) > 1e-9) return AssertionFailure() << "tilde beta jumps by " << jump << " at " << tau;
        }
        // an unmatched beta atom must be rejected
        LimitTriplet bad = trip;
        auto atoms = trip.beta.atoms();
        const double tau = T * 0.5 + 1e-3;
        if (trip.nu.atom_at(tau) == nullptr && trip.beta.atom_at(tau) == 0.0) {
            atoms.push_back({tau, 0.1});
            std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.time < r.time; });
            bad.beta = MonotoneMeasure(trip.beta.breakpoints(), trip.beta.rates(), atoms);
            try {
                validate(bad);
                return AssertionFailure() << "beta atom at " << tau << " accepted";
            } catch (const error& e) {
                if (e.code() != errc::invariant_violation) return AssertionFailure() << e.what();
            }
        }
        return AssertionSuccess();
    }));
}

TEST(MeasuresProperty, PowerTailMatchesRiemannOracle) {
    EXPECT_TRUE(prop::for_all(105, [](Rng& rng) -> AssertionResult {
        const double a = prop::uniform(rng, 0.2, 1.95), c = prop::log_uniform(rng, 0.01, 2.0), u = prop::log_uniform(rng, 1e-3, 1e3);
        const LevyKind kinds[] = {LevyKind::g, LevyKind::h, LevyKind::x2};
        const LevyKind kind = kinds[prop::integer(rng, 0, 2)];
        const double got = levy_integral(LevyMeasure::power_tail(a, c), u, kind);
        const double ref = oracle::power_tail_riemann(a, c, u, kind, 200000);
        if (std::abs(got - ref) > 1e-6 * std::abs(ref)) return AssertionFailure() << "a=" << a << " c=" << c << " u=" << u << " kind=" << int(kind) << ": " << got << " vs " << ref;
        return AssertionSuccess();
    }));
}
