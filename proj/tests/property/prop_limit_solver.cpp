#include <gtest/gtest.h>

#include "gwve/limit_solver.hpp"
#include "support/property.hpp"

using namespace gwve;
using prop::Rng;
using testing::AssertionFailure;
using testing::AssertionResult;
using testing::AssertionSuccess;

namespace {

SolverOptions fixed_mesh(double h, std::vector<double> extra = {}) {
    SolverOptions o;
    o.mesh.h = h;
    o.mesh.extra_nodes = std::move(extra);
    return o;
}

} // namespace

TEST(LimitSolverProperty, HAndGFormsAgree) {
    EXPECT_TRUE(prop::for_all(401, [](Rng& rng) -> AssertionResult {
        const double T = prop::uniform(rng, 0.5, 3.0);
        const auto trip = prop::random_triplet(rng, T);
        const auto sol = solve_u(trip, T, prop::log_uniform(rng, 0.05, 5.0), fixed_mesh(0.0));
        const auto a = cumulative_psi(sol.u, trip, true), b = cumulative_psi(sol.u, trip, false);
        for (std::size_t j = 0; j < a.size(); ++j)
            if (std::abs(a[j] - b[j]) > 1e-10 * (1.0 + std::abs(a[j]))) return AssertionFailure() << "node " << j << ": " << a[j] << " vs " << b[j];
        return AssertionSuccess();
    }));
}

TEST(LimitSolverProperty, ResidualAndErrorBound) {
    EXPECT_TRUE(prop::for_all(402, [](Rng& rng) -> AssertionResult {
        const double T = prop::uniform(rng, 0.5, 3.0), lam = prop::log_uniform(rng, 0.05, 5.0);
        const auto trip = prop::random_triplet(rng, T);
        SolverOptions o;
        const auto sol = solve_u(trip, T, lam, o);
        if (sol.u.right.back() != lam) return AssertionFailure() << "u(t) = " << sol.u.right.back();
        if (sol.residual > 10.0 * o.tol * (1.0 + lam)) return AssertionFailure() << "residual " << sol.residual;
        if (!sol.possible_bottleneck && !std::isfinite(sol.error_bound)) return AssertionFailure() << "error bound not finite";
        for (std::size_t j = 0; j < sol.u.size(); ++j) {
            if (!(sol.u.right[j] >= 0.0 && sol.u.left[j] >= 0.0)) return AssertionFailure() << "negative u at " << sol.u.y[j];
            if (!detail::atom_at(trip, sol.u.y[j]).any() && sol.u.left[j] != sol.u.right[j])
                return AssertionFailure() << "left and right values differ at non-atom " << sol.u.y[j];
        }
        return AssertionSuccess();
    }));
}

TEST(LimitSolverProperty, MonotoneInLambda) {
    EXPECT_TRUE(prop::for_all(403, [](Rng& rng) -> AssertionResult {
        const double T = prop::uniform(rng, 0.5, 3.0);
        const auto trip = prop::random_triplet(rng, T);
        double l1 = prop::log_uniform(rng, 0.05, 5.0), l2 = prop::log_uniform(rng, 0.05, 5.0);
        if (l1 > l2) std::swap(l1, l2);
        const auto o = fixed_mesh(0.0);
        const auto a = solve_u(trip, T, l1, o), b = solve_u(trip, T, l2, o);
        if (a.u.size() != b.u.size()) return AssertionFailure() << "meshes differ";
        for (std::size_t j = 0; j < a.u.size(); ++j)
            if (a.u.right[j] > b.u.right[j] + 1e-9 || a.u.left[j] > b.u.left[j] + 1e-9)
                return AssertionFailure() << "not monotone at s = " << a.u.y[j] << ": " << a.u.right[j] << " > " << b.u.right[j];
        return AssertionSuccess();
    }));
}

TEST(LimitSolverProperty, FlowProperty) {
    EXPECT_TRUE(prop::for_all(404, [](Rng& rng) -> AssertionResult {
        const double T = prop::uniform(rng, 0.5, 3.0), lam = prop::log_uniform(rng, 0.05, 5.0);
        const auto trip = prop::random_triplet(rng, T);
        const double r = prop::uniform(rng, 0.1, 0.9) * T, h = T / 2048;
        const auto whole = solve_u(trip, T, lam, fixed_mesh(h, {r}));
        const double ur = whole.value(r);
        const auto head = solve_u(trip, r, ur, fixed_mesh(h));
        const double a = whole.value(0.0), b = head.value(0.0);
        if (std::abs(a - b) > 10.0 * SolverOptions{}.tol * (1.0 + a)) return AssertionFailure() << "r=" << r << ": " << a << " vs " << b;
        return AssertionSuccess();
    }));
}
