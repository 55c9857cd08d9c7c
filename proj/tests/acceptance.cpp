// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gwve/discrete_laplace.hpp"
#include "gwve/feller_csbp.hpp"
#include "gwve/limit_solver.hpp"
#include "gwve/montecarlo.hpp"
#include "gwve/scenarios.hpp"
#include "support/oracles.hpp"
#include "support/property.hpp"

using namespace gwve;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const OffspringLaw binary = FinitePMF{{{0, 0.5}, {2, 0.5}}};

Outcome feller_closed_form() {
    double worst = 0.0, slowest = 0.0;
    for (double a : {-1.0, 0.0, 1.0})
        for (double da : {-0.5, 0.5})
            for (double b : {0.25, 0.5}) {
                const auto t0 = std::chrono::steady_clock::now();
                LimitTriplet trip;
                trip.alpha = PiecewiseSignedMeasure({0.0}, {a}, {{0.5, da}});
                trip.beta = MonotoneMeasure({0.0}, {b});
                const auto sol = solve_u(trip, 1.0, 1.0);
                for (std::size_t j = 0; j < sol.u.size(); ++j) {
                    const double right = u_feller(trip.alpha, trip.beta, sol.u.y[j], 1.0, 1.0);
                    const double left = j + 1 == sol.u.size() ? right : detail::apply_jump(trip, sol.u.y[j], right);
                    worst = std::max({worst, std::abs(sol.u.right[j] - right), std::abs(sol.u.left[j] - left)});
                }
                slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
    return {worst <= 1e-8 && slowest < 1.0, fmt("max |solve_u - u_feller| = %.2e over 12 cases (tol 1e-8), slowest case %.2fs", worst, slowest)};
}

Outcome homogeneous_oracle() {
    double worst = 0.0;
    const LevyMeasure Fs[] = {LevyMeasure{}, LevyMeasure::dirac(1.0), LevyMeasure::power_tail(1.5, 0.2)};
    for (const auto& F : Fs)
        for (double a : {-0.5, 0.5}) {
            const BranchingMechanism m{a, 0.3, F};
            const auto trip = constant_triplet(m);
            const auto sol = solve_u(trip, 1.0, 1.0);
            for (std::size_t j = 0; j < sol.u.size(); j += 64) {
                const auto ode = csbp_u_homogeneous(m, 1.0 - sol.u.y[j], 1.0);
                worst = std::max(worst, std::abs(ode.value - sol.u.right[j]));
            }
        }
    return {worst <= 1e-8, fmt("max |solve_u - csbp ode| = %.2e over 6 mechanisms (tol 1e-8)", worst)};
}

Outcome discrete_exactness() {
    prop::Rng rng(3);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double n = std::round(prop::log_uniform(rng, 1.0, 1e3));
        const auto G = prop::integer(rng, 1, 12);
        std::vector<Block> blocks;
        std::vector<std::vector<double>> pmfs;
        for (std::uint64_t g = 0; g < G; ++g) {
            const auto f = prop::finite_pmf(rng, 4, 4);
            std::vector<double> dense(5, 0.0);
            for (const auto& [x, p] : f.pmf) dense[x] = p;
            pmfs.push_back(dense);
            blocks.push_back({1, f});
        }
        const EnvironmentModel env(n, UniformRate{static_cast<double>(G)}, blocks);
        const double lam = prop::log_uniform(rng, 1e-2, 10.0);
        const double ref = static_cast<double>(-n * std::log(oracle::composed_pgf(pmfs, std::exp(-static_cast<oracle::ld>(lam) / n))));
        const double got = u_n(env, 0.0, 1.0, lam);
        if (std::isfinite(ref) && ref > 1e-6) worst = std::max(worst, std::abs(got - ref) / ref);
    }
    return {worst <= 1e-10, fmt("max relative error vs composed pgf = %.2e over 200 environments (tol 1e-10)", worst)};
}

Outcome composition_rule() {
    prop::Rng rng(4);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto env = prop::random_env(rng);
        double t[3] = {prop::uniform(rng, 0.0, 2.0), prop::uniform(rng, 0.0, 2.0), prop::uniform(rng, 0.0, 2.0)};
        std::sort(t, t + 3);
        const double lam = prop::log_uniform(rng, 1e-3, 10.0);
        worst = std::max(worst, composition_residual(env, t[0], t[1], t[2], lam) / (1.0 + lam));
    }
    return {worst <= 1e-12, fmt("max residual / (1 + lambda) = %.2e over 1000 cases (tol 1e-12)", worst)};
}

Outcome convergence() {
    std::vector<double> err;
    for (double n : {1e2, 1e3, 1e4}) err.push_back(std::abs(u_n(build(builtin_scenario("constant-binary").spec, n).env, 0.0, 1.0, 1.0) - 2.0 / 3.0));
    const bool dec = err[0] > err[1] && err[1] > err[2];
    return {dec && err[2] <= 5e-3, fmt("|u_n - 2/3| = %.2e, %.2e, %.2e (strictly decreasing, last <= 5e-3)", err[0], err[1], err[2])};
}

Outcome monte_carlo_identity() {
    const EnvironmentModel env(100, UniformRate{100}, {{100, binary}});
    const double exact = std::exp(-u_n(env, 0.0, 1.0, 1.0));
    int ok = 0;
    SimOptions o;
    o.record = {100};
    for (std::uint64_t rep = 1; rep <= 100; ++rep) {
        const auto b = simulate(env, 100, 100, rep, 100000, o);
        const auto e = empirical_laplace(b, 1.0, 1.0);
        if (std::abs(e.mean - exact) <= 3.0 * e.se) ++ok;
    }
    return {ok >= 95, fmt("%.0f of 100 repetitions within 3 SE of exp(-u_n) (need >= 95)", ok)};
}

Outcome catastrophe_jump() {
    const auto& spec = builtin_scenario("catastrophe").spec;
    const auto inst = build(spec, 1e4);
    const auto sol = solve_u(inst.trip, 2.0, 1.0);
    const double t0 = spec.t0, ur = sol.value(t0), ul = sol.left_value(t0);
    const double jump_err = std::abs(ul - (ur + spec.shift * ur));
    double worst = 0.0;
    for (double s : {0.0, 0.5, 0.99, 1.0, 1.01, 1.5}) worst = std::max(worst, std::abs(u_n(inst.env, s, 2.0, 1.0) - sol.value(s)));
    return {jump_err <= 1e-10 && worst <= 1e-2, fmt("jump relation error %.2e (tol 1e-10), max |u_n - u| across t0 = %.2e (tol 1e-2)", jump_err, worst)};
}

Outcome extinction() {
    const auto inst = build(builtin_scenario("feller-supercritical").spec, 200);
    const double q = extinction_prob(inst.trip.alpha, inst.trip.beta, 0.0, 1.0, std::nullopt);
    const double analytic_err = std::abs(q - std::exp(-1.0));
    const auto G = inst.env.gamma(20.0);
    SimOptions o;
    o.record = {G};
    const auto b = simulate(inst.env, 200, G, 1, 100000, o);
    const auto e = survival_estimate(b, 20.0);
    const double limit = 1.0 - extinction_prob(inst.trip.alpha, inst.trip.beta, 0.0, 1.0, 20.0);
    const double prelimit = 1.0 - std::exp(-u_n(inst.env, 0.0, 20.0, inf));
    const bool mc_ok = std::abs(e.mean - limit) <= 3.0 * e.se && std::abs(e.mean - prelimit) <= 3.0 * e.se;
    return {analytic_err <= 1e-12 && mc_ok,
            fmt("|q - e^-1| = %.1e; MC survival %.5f, SE %.5f", analytic_err, e.mean, e.se) +
                fmt(" vs limit %.6f and exact n = 200 value %.6f (3 SE)", limit, prelimit)};
}

Outcome regime_selection() {
    const auto inst = build(builtin_scenario("random-two-law").spec, 1e4);
    const double un = u_n(inst.env, 0.0, 1.0, 1.0), u = solve_u(inst.trip, 1.0, 1.0).value(0.0);
    return {std::abs(un - u) <= 2e-2, fmt("u_n = %.5f, merged limit u = %.5f, difference %.2e (tol 2e-2)", un, u, std::abs(un - u))};
}

Outcome bottleneck_trend() {
    const auto& spec = builtin_scenario("bottleneck").spec;
    std::vector<double> mins;
    for (double n : {1e2, 1e3, 1e4}) {
        const auto inst = build(spec, n);
        const auto p = u_profile(inst.env, 3.0, 1.0, 1.0);
        double m = inf;
        for (std::size_t k = 0; k < p.u.size(); ++k)
            if (p.time[k] >= 1.0 && p.time[k] <= 2.0) m = std::min(m, p.u[k]);
        mins.push_back(m);
    }
    const bool dec = mins[0] > mins[1] && mins[1] > mins[2];
    int code = 0;
    try {
        solve_u(build(spec, 1e4).trip, 3.0, 1.0).value(1.0);
    } catch (const error& e) {
        code = exit_code(e.code());
    }
    return {dec && code == 4, fmt("min over [1,2] of u_n(., 3, 1) = %.2e, %.2e, %.2e", mins[0], mins[1], mins[2]) +
                                   fmt("; solving at s = 1 exits with code %.0f", code)};
}

Outcome invariant_suites() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string cmd = std::string(PROPERTY_TESTS_BIN) + " --gtest_brief=1 > property_tests.log 2>&1";
    const int rc = std::system(cmd.c_str());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[160];
    std::snprintf(buf, sizeof buf, "property suite (>= 200 cases per property) %s in %.1fs; log in property_tests.log", rc == 0 ? "green" : "FAILED", secs);
    return {rc == 0, buf};
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double time_limit; // seconds; 0 means none
    };
    const std::vector<Criterion> criteria = {
        {"feller closed form vs solver", feller_closed_form, 0.0},
        {"homogeneous CSBP oracle", homogeneous_oracle, 5.0},
        {"discrete exactness", discrete_exactness, 1.0},
        {"composition rule", composition_rule, 10.0},
        {"convergence u_n -> u", convergence, 10.0},
        {"Monte Carlo identity", monte_carlo_identity, 60.0},
        {"catastrophe jump", catastrophe_jump, 0.0},
        {"extinction", extinction, 0.0},
        {"regime selection", regime_selection, 0.0},
        {"bottleneck trend", bottleneck_trend, 0.0},
        {"invariant suites", invariant_suites, 300.0},
    };
    // optional arguments: criterion numbers to run, e.g. "acceptance 1 2 5"
    std::vector<bool> run(criteria.size(), argc <= 1);
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k >= 1 && k <= static_cast<int>(criteria.size())) run[k - 1] = true;
    }
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (!run[k]) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (criteria[k].time_limit > 0.0 && secs >= criteria[k].time_limit) {
            o.pass = false;
            o.detail += " (over the time limit)";
        }
        std::printf("criterion %2zu %s: %s  %s  [%.1fs]\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].name, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
