#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "constants.hpp"
#include "environment.hpp"

namespace gwve {

inline double psi_step(const EnvironmentModel& env, std::uint64_t i, double lam) {
    require(lam >= 0.0, errc::invalid_argument, "lambda must be >= 0");
    return env.law_at(i).psi(lam);
}

inline double epsilon_step(const EnvironmentModel& env, std::uint64_t i, double lam) {
    require(lam >= 0.0, errc::invalid_argument, "lambda must be >= 0");
    return env.law_at(i).epsilon(lam);
}

// u[k] = u_n(t_{g_lo + k}, t, lambda) for g_lo <= g_lo + k <= g_hi.
struct StepTable {
    std::uint64_t g_lo = 0;
    std::uint64_t g_hi = 0;
    double t = 0.0;
    double lambda = 0.0;
    std::vector<double> u;
    std::vector<double> times;
    bool overflow = false;
};

struct DiscreteResult {
    double value;
    StepTable table;
};

// Backwards recursion from generation g_hi (value lam) down to g_lo. Calls
// visit(i, u_i) for every generation i in [g_lo, g_hi], from g_hi downwards.
template <class Visit>
double backward_sweep(const EnvironmentModel& env, std::uint64_t g_lo, std::uint64_t g_hi, double lam, Visit&& visit) {
    struct Run {
        std::uint64_t lo, hi;
        const PreparedLaw* law;
    };
    std::vector<Run> runs;
    env.for_each_run(g_lo, g_hi, [&](std::uint64_t lo, std::uint64_t hi, const PreparedLaw& law) { runs.push_back({lo, hi, &law}); });
    double u = lam;
    visit(g_hi, u);
    for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
        for (std::uint64_t i = it->hi; i-- > it->lo;) {
            u = it->law->step(u);
            visit(i, u);
        }
    }
    return u;
}

inline DiscreteResult u_discrete(const EnvironmentModel& env, double s, double t, double lam, bool keep_table = true) {
    require(s >= 0.0 && t >= s, errc::invalid_argument, "u_discrete requires 0 <= s <= t");
    require(lam >= 0.0 && !std::isnan(lam), errc::invalid_argument, "lambda must be >= 0");
    const std::uint64_t g_lo = env.gamma(s), g_hi = env.gamma(t);
    StepTable tab{g_lo, g_hi, t, lam, {}, {}, false};
    if (keep_table) tab.u.resize(g_hi - g_lo + 1);
    const double v = backward_sweep(env, g_lo, g_hi, lam, [&](std::uint64_t i, double u) {
        if (keep_table) tab.u[i - g_lo] = u;
    });
    if (keep_table) {
        tab.times.resize(tab.u.size());
        for (std::size_t k = 0; k < tab.u.size(); ++k) tab.times[k] = env.time_of(g_lo + k);
    }
    tab.overflow = !std::isfinite(v);
    return {tab.overflow ? inf : v, std::move(tab)};
}

inline double u_n(const EnvironmentModel& env, double s, double t, double lam) { return u_discrete(env, s, t, lam, false).value; }

inline double composition_residual(const EnvironmentModel& env, double t1, double t2, double t3, double lam) {
    require(t1 <= t2 && t2 <= t3, errc::invalid_argument, "composition_residual requires t1 <= t2 <= t3");
    const double direct = u_n(env, t1, t3, lam);
    const double nested = u_n(env, t1, t2, u_n(env, t2, t3, lam));
    if (direct == nested) return 0.0;
    return std::abs(direct - nested);
}

struct Profile {
    std::vector<std::uint64_t> gen;
    std::vector<double> time;
    std::vector<double> u;
    double min_u = inf;
    double argmin_time = 0.0;
};

// y -> u_n(y, t, lambda) at every generation boundary in [s_lo, t].
inline Profile u_profile(const EnvironmentModel& env, double t, double lam, double s_lo) {
    require(lam > 0.0, errc::invalid_argument, "profile requires lambda > 0");
    require(s_lo >= 0.0 && s_lo <= t, errc::invalid_argument, "profile window must satisfy 0 <= s_lo <= t");
    const std::uint64_t g_lo = env.gamma(s_lo), g_hi = env.gamma(t);
    Profile p;
    const std::size_t m = g_hi - g_lo + 1;
    p.gen.resize(m), p.time.resize(m), p.u.resize(m);
    backward_sweep(env, g_lo, g_hi, lam, [&](std::uint64_t i, double u) {
        const std::size_t k = i - g_lo;
        p.gen[k] = i;
        p.time[k] = env.time_of(i);
        p.u[k] = u;
    });
    for (std::size_t k = 0; k < m; ++k) {
        if (p.u[k] < p.min_u) p.min_u = p.u[k], p.argmin_time = std::max(p.time[k], s_lo);
    }
    return p;
}

// Lower bounds for any w with w_i >= a_i w_{i+1} - b_i w_{i+1}^2 and w_I given,
// valid when a_i^2 - a_i b_i M >= eps. Returns entries 0..I.
inline std::vector<double> lower_bound_w(const std::vector<double>& a, const std::vector<double>& b, double w_I, double M, double eps) {
    require(a.size() == b.size(), errc::invalid_argument, "a and b must have equal length");
    require(w_I > 0.0 && eps > 0.0, errc::invalid_argument, "lower_bound_w requires w_I > 0 and eps > 0");
    const std::size_t I = a.size();
    for (std::size_t i = 0; i < I; ++i) {
        if (!(a[i] * a[i] - a[i] * b[i] * M >= eps))
            throw error(errc::hypothesis_violated, "a_i^2 - a_i b_i M < eps at i = " + std::to_string(i));
    }
    // wbar_i = rho_i wbar_{i+1} + b_i / a_i^2 with rho_i = (1 + b_i^2 M^2 / eps) / a_i
    std::vector<double> w(I + 1);
    double wbar = 1.0 / w_I;
    w[I] = w_I;
    for (std::size_t i = I; i-- > 0;) {
        wbar = (1.0 + b[i] * b[i] * M * M / eps) / a[i] * wbar + b[i] / (a[i] * a[i]);
        w[i] = 1.0 / wbar;
    }
    return w;
}

struct AprioriBounds {
    double mu_t;           // |alpha_n|(t) + beta_n(t)
    double c_bar_u;        // (lam + 2)(1 + B_t) e^{B_t}, B_t = 2 mu_t
    bool eps_condition;    // sup |eps| <= 1 on [0, c_bar_u], required by the bound
    double profile_sup;    // sup_s u_n(s, t, lam) for this n
    double c_eps;          // sup |eps_{i,n}| over i < gamma_n(t), lam' <= profile_sup
    double delta_u;        // (1 + c_eps) c1(profile_sup)
    double variation_max_ratio; // max |u(s)-u(s')| / (delta_u mu_n(s,s']) over the random pairs
    std::size_t variation_violations;
};

namespace detail {

inline double sup_abs_epsilon(const EnvironmentModel& env, std::uint64_t g, double C) {
    constexpr int grid = 256;
    double m = 0.0;
    env.for_each_run(0, g, [&](std::uint64_t, std::uint64_t, const PreparedLaw& law) {
        for (int k = 0; k <= grid; ++k) m = std::max(m, std::abs(law.epsilon(C * k / grid)));
    });
    return m;
}

inline double mu_between(const EnvironmentModel& env, std::uint64_t g0, std::uint64_t g1) {
    const auto c = cumulative_over(env, g0, g1);
    return c.tv_alpha + c.beta;
}

} // namespace detail

inline AprioriBounds apriori_bounds(const EnvironmentModel& env, double t, double lam, std::uint64_t seed = 1) {
    require(lam >= 0.0, errc::invalid_argument, "lambda must be >= 0");
    const std::uint64_t g = env.gamma(t);
    AprioriBounds r{};
    r.mu_t = detail::mu_between(env, 0, g);
    const double B = 2.0 * r.mu_t;
    r.c_bar_u = (lam + 2.0) * (1.0 + B) * std::exp(B);
    r.eps_condition = detail::sup_abs_epsilon(env, g, r.c_bar_u) <= 1.0;

    const auto res = u_discrete(env, 0.0, t, lam);
    const auto& u = res.table.u;
    r.profile_sup = *std::max_element(u.begin(), u.end());
    r.c_eps = detail::sup_abs_epsilon(env, g, r.profile_sup);
    r.delta_u = (1.0 + r.c_eps) * const_c1(r.profile_sup);

    // |u_n(s) - u_n(s')| <= Delta mu_n(s, s'] on random generation pairs
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, g);
    for (int k = 0; k < 100; ++k) {
        std::uint64_t i = pick(rng), j = pick(rng);
        if (i > j) std::swap(i, j);
        const double lhs = std::abs(u[i] - u[j]);
        const double rhs = r.delta_u * detail::mu_between(env, i, j);
        if (lhs > rhs * (1.0 + 1e-12) + 1e-14) ++r.variation_violations;
        if (rhs > 0.0) r.variation_max_ratio = std::max(r.variation_max_ratio, lhs / rhs);
    }
    return r;
}

} // namespace gwve
