#include <cmath>

#include <gtest/gtest.h>

#include "gwve/limit_solver.hpp"

using namespace gwve;

namespace {

LimitTriplet feller(double b) { return {PiecewiseSignedMeasure{}, MonotoneMeasure::constant_rate(b), LevyKernel{}}; }

MeshFunction uniform(double s, double t, std::size_t m, double value) {
    std::vector<double> y(m + 1);
    for (std::size_t j = 0; j <= m; ++j) y[j] = s + (t - s) * static_cast<double>(j) / static_cast<double>(m);
    return constant_mesh_function(std::move(y), value);
}

} // namespace

TEST(PsiOperator, ZeroTriplet) {
    EXPECT_EQ(psi_operator(uniform(0, 2, 16, 3.0), LimitTriplet{}, 0.5, 2.0), 0.0);
}

TEST(PsiOperator, ConstantAlphaRate) {
    LimitTriplet trip;
    trip.alpha = PiecewiseSignedMeasure::constant_rate(0.7);
    EXPECT_NEAR(psi_operator(uniform(0, 2, 16, 1.0), trip, 0.25, 1.5), 0.7 * 1.25, 1e-14);
}

TEST(PsiOperator, HomogeneousDirac) {
    LimitTriplet trip;
    trip.nu = LevyKernel({{0.0, 1.0, LevyMeasure::dirac(1.0)}}, {});
    EXPECT_NEAR(psi_operator(uniform(0, 1, 8, 1.0), trip, 0.0, 1.0), 0.38212055882855768, 1e-14);
    EXPECT_THROW(psi_operator(uniform(0, 1, 8, 1.0), trip, 0.1, 1.0), error);
}

TEST(JumpRelation, Examples) {
    EXPECT_EQ(jump_relation(1.0, -0.5), 0.5);
    const auto F = LevyMeasure::dirac(1.0);
    EXPECT_NEAR(jump_relation(1.0, 0.0, &F), 1.1321205588285577, 1e-15);
    EXPECT_EQ(jump_relation(2.5, 0.0), 2.5);
    EXPECT_EQ(jump_relation(2.5, -1.0), 0.0);
}

TEST(SolveU, EmptyInterval) {
    const auto sol = solve_u(feller(1.0), 1.0, 2.0, {.s = 1.0, .mesh = {}});
    EXPECT_EQ(sol.value(1.0), 2.0);
}

TEST(SolveU, FellerClosedForm) {
    const auto sol = solve_u(feller(0.5), 1.0, 1.0);
    EXPECT_NEAR(sol.value(0.0), 2.0 / 3.0, 1e-8);
    EXPECT_EQ(sol.value(1.0), 1.0);
    EXPECT_LE(sol.residual, 1e-9);
    EXPECT_LE(sol.ode_discrepancy, 1e-9);
    EXPECT_TRUE(std::isfinite(sol.error_bound));
    // between nodes
    EXPECT_NEAR(sol.value(0.3001), 1.0 / (1.0 + 0.5 * 0.6999), 1e-9);
}

TEST(SolveU, AtomHalvesAcrossCatastrophe) {
    LimitTriplet trip = feller(1.0);
    trip.alpha = PiecewiseSignedMeasure::constant_rate(0.0, {{1.0, -0.5}});
    const auto sol = solve_u(trip, 2.0, 1.0);
    EXPECT_NEAR(sol.value(1.0), 0.5, 1e-10);
    EXPECT_NEAR(sol.left_value(1.0), 0.25, 1e-10);
    // Feller flow from 0.25 over one more unit
    EXPECT_NEAR(sol.value(0.0), 1.0 / (4.0 + 1.0), 1e-9);
}

TEST(SolveU, HomogeneousJumpKernelConsistent) {
    LimitTriplet trip;
    trip.alpha = PiecewiseSignedMeasure::constant_rate(0.3);
    const auto F = LevyMeasure::dirac(0.5, 2.0);
    trip.nu = LevyKernel({{0.0, 2.0, F}}, {});
    trip.beta = MonotoneMeasure({0.0, 2.0}, {0.1 + 0.5 * levy_integral(F, 0.0, LevyKind::x2)});
    const auto sol = solve_u(trip, 2.0, 1.5);
    EXPECT_LE(sol.residual, 1e-9);
    // flow property at an interior node
    SolverOptions o;
    o.s = 0.0;
    const double r = 1.0;
    const double inner = solve_u(trip, 2.0, 1.5, {.s = r, .mesh = {}}).value(r);
    EXPECT_NEAR(solve_u(trip, r, inner, o).value(0.0), sol.value(0.0), 1e-9);
}

TEST(SolveU, BottleneckRefusesLeftOfCollapse) {
    LimitTriplet trip = feller(0.5);
    trip.alpha = PiecewiseSignedMeasure::constant_rate(0.0, {{1.0, -1.0}});
    const auto sol = solve_u(trip, 2.0, 1.0);
    EXPECT_TRUE(sol.possible_bottleneck);
    EXPECT_GT(sol.value(1.5), 0.0);
    try {
        (void)sol.value(0.5);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::possible_bottleneck);
    }
}

TEST(SolveU, MonotoneInLambda) {
    const auto trip = feller(0.8);
    double prev = 0.0;
    for (double lam : {0.1, 0.5, 1.0, 4.0, 20.0}) {
        const double v = solve_u(trip, 1.0, lam).value(0.0);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(FddLaplace, SingleAndZeroInner) {
    const auto trip = feller(0.5);
    const double u1 = 1.0 / (1.0 + 0.5);
    EXPECT_NEAR(fdd_laplace(trip, 0.0, {{1.0, 1.0}}, 2.0), std::exp(-2.0 * u1), 1e-9);
    EXPECT_NEAR(fdd_laplace(trip, 0.0, {{1.0, 1.0}, {2.0, 0.0}}, 2.0), std::exp(-2.0 * u1), 1e-9);
}

TEST(FddLaplace, FellerNested) {
    const auto trip = feller(0.5);
    auto U = [](double tau, double lam) { return lam / (1.0 + 0.5 * lam * tau); };
    const double ref = std::exp(-1.5 * U(1.0, 0.7 + U(1.5, 2.0)));
    EXPECT_NEAR(fdd_laplace(trip, 0.0, {{1.0, 0.7}, {2.5, 2.0}}, 1.5), ref, 1e-8);
}

TEST(GronwallBound, Examples) {
    const auto R = uniform(0, 2, 64, 1.5);
    EXPECT_EQ(gronwall_bound(R, MonotoneMeasure{}, 0.0, 2.0), 1.5);
    const double c = 0.4;
    EXPECT_NEAR(gronwall_bound(R, MonotoneMeasure::constant_rate(c), 0.5, 2.0), 1.5 * (1.0 + c * 1.5 * std::exp(c * 1.5)), 1e-13);
    EXPECT_EQ(gronwall_bound(uniform(0, 2, 64, 0.0), MonotoneMeasure::constant_rate(c), 0.0, 2.0), 0.0);
}

TEST(LipschitzCertificate, Examples) {
    const auto u = uniform(0, 1, 32, 1.0);
    const auto same = lipschitz_certificate(feller(0.5), u, u);
    EXPECT_EQ(same.bound, 0.0);
    EXPECT_EQ(same.violations, 0u);
    const auto zero = lipschitz_certificate(LimitTriplet{}, u, uniform(0, 1, 32, 1.3));
    EXPECT_EQ(zero.bound, 0.0);
    EXPECT_EQ(zero.violations, 0u);
    const auto trip = feller(0.5);
    const auto s1 = solve_u(trip, 1.0, 1.0), s2 = solve_u(trip, 1.0, 3.0);
    const auto cert = lipschitz_certificate(trip, s1.u, s2.u);
    EXPECT_GT(cert.bound, 0.0);
    EXPECT_EQ(cert.violations, 0u);
    EXPECT_LE(cert.max_ratio, 1.0);
    EXPECT_THROW(lipschitz_certificate(trip, u, uniform(0, 1, 32, 0.0)), error);
}
