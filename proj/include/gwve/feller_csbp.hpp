#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "measures.hpp"

namespace gwve {

// Constant characteristics in the x/(1+x^2) compensation convention.
struct BranchingMechanism {
    double a = 0.0;       // drift, per unit time
    double b_tilde = 0.0; // diffusion, per unit time
    LevyMeasure F;        // jump rate per unit time

    void validate() const {
        require(std::isfinite(a), errc::invalid_argument, "mechanism drift must be finite");
        require(b_tilde >= 0.0 && std::isfinite(b_tilde), errc::invalid_argument, "mechanism b_tilde must be >= 0");
    }

    // v -> a v - b_tilde v^2 + int g(x, v) F(dx)
    double operator()(double v) const { return a * v - b_tilde * v * v + (F.empty() ? 0.0 : levy_integral(F, v, LevyKind::g)); }
};

// Drift in the x/(1+x^2) convention from one compensated with x 1{x <= 1}, and back.
inline double drift_from_unit_truncation(double a_unit, const LevyMeasure& F) {
    return a_unit + (F.empty() ? 0.0 : levy_integral(F, 0.0, LevyKind::drift_bridge));
}

inline double drift_to_unit_truncation(double a, const LevyMeasure& F) {
    return a - (F.empty() ? 0.0 : levy_integral(F, 0.0, LevyKind::drift_bridge));
}

// Mechanism of a triplet on the stretch of constant densities containing y.
inline BranchingMechanism mechanism_at(const LimitTriplet& trip, double y) {
    BranchingMechanism m;
    m.a = trip.alpha.rate_at(y);
    m.F = trip.nu.rate_at(y);
    m.b_tilde = trip.beta.rate_at(y) - (m.F.empty() ? 0.0 : 0.5 * levy_integral(m.F, 0.0, LevyKind::x2));
    return m;
}

// Triplet with constant densities on (0, inf) for a mechanism.
inline LimitTriplet constant_triplet(const BranchingMechanism& m) {
    LimitTriplet trip;
    trip.alpha = PiecewiseSignedMeasure::constant_rate(m.a);
    const double x2 = m.F.empty() ? 0.0 : levy_integral(m.F, 0.0, LevyKind::x2);
    trip.beta = MonotoneMeasure::constant_rate(m.b_tilde + 0.5 * x2);
    if (!m.F.empty()) trip.nu = LevyKernel({{0.0, inf, m.F}}, {});
    return trip;
}

// alpha(t) + sum over atoms in (0, t] of log(1 + da) - da; -inf after an atom of -1.
inline double alpha_bar(const PiecewiseSignedMeasure& alpha, double t) {
    double v = alpha.density_integral(t);
    for (const auto& at : alpha.atoms()) {
        if (at.time > t) break;
        require(at.mass >= -1.0, errc::invariant_violation, "alpha atoms must be >= -1");
        if (at.mass == -1.0) return -inf;
        v += std::log1p(at.mass);
    }
    return v;
}

namespace detail {

inline void require_atomless_beta(const MonotoneMeasure& beta) {
    if (beta.has_atoms())
        throw error(errc::beta_atom_forbidden, "beta has an atom at t=" + fmt_double(beta.atoms().front().time) + "; the closed form needs nu = 0 and continuous beta");
}

// (1 - e^{-x}) / x with the x -> 0 limit
inline double one_minus_exp_over(double x) { return x == 0.0 ? 1.0 : -std::expm1(-x) / x; }

// Integral over (s, t] of exp(-(alpha_bar(y) - alpha_bar(s))) beta(dy), together with
// D = alpha_bar(t) - alpha_bar(s). Pieces are exact exponentials.
struct FellerIntegral {
    double integral = 0.0;
    double D = 0.0;
    bool annihilated = false; // an atom of -1 in (s, t]
};

inline FellerIntegral feller_integral(const PiecewiseSignedMeasure& alpha, const MonotoneMeasure& beta, double s, double t) {
    std::vector<double> cuts{s, t};
    for (double b : alpha.breakpoints())
        if (b > s && b < t) cuts.push_back(b);
    for (double b : beta.breakpoints())
        if (b > s && b < t) cuts.push_back(b);
    for (const auto& at : alpha.atoms())
        if (at.time > s && at.time < t) cuts.push_back(at.time);
    cuts = sorted_unique(std::move(cuts));
    FellerIntegral r;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k], hi = cuts[k + 1], len = hi - lo, mid = 0.5 * (lo + hi);
        const double a = alpha.rate_at(mid), b = beta.rate_at(mid);
        if (b > 0.0) r.integral += b * std::exp(-r.D) * len * one_minus_exp_over(a * len);
        r.D += a * len;
        const double da = alpha.atom_at(hi);
        if (da == -1.0) {
            r.annihilated = true;
            return r;
        }
        if (da != 0.0) r.D += std::log1p(da);
    }
    return r;
}

} // namespace detail

// Laplace exponent of the limit when nu = 0.
inline double u_feller(const PiecewiseSignedMeasure& alpha, const MonotoneMeasure& beta, double s, double t, double lam) {
    require(lam > 0.0, errc::invalid_argument, "u_feller requires lambda > 0");
    require(0.0 <= s && s <= t, errc::invalid_argument, "u_feller requires 0 <= s <= t");
    detail::require_atomless_beta(beta);
    for (const auto& at : alpha.atoms()) require(at.mass >= -1.0, errc::invariant_violation, "alpha atoms must be >= -1");
    if (s == t) return lam;
    const auto r = detail::feller_integral(alpha, beta, s, t);
    if (r.annihilated) return 0.0;
    if (std::isinf(lam)) return 1.0 / r.integral;
    return 1.0 / (std::exp(-r.D) / lam + r.integral);
}

struct InfiniteHorizon {};

// P(X(T) = 0 | X(s) = x); T = InfiniteHorizon for eventual extinction.
inline double extinction_prob(const PiecewiseSignedMeasure& alpha, const MonotoneMeasure& beta, double s, double x,
                              std::optional<double> horizon) {
    require(x >= 0.0, errc::invalid_argument, "extinction_prob requires x >= 0");
    require(s >= 0.0, errc::invalid_argument, "extinction_prob requires s >= 0");
    detail::require_atomless_beta(beta);
    const double T = horizon ? *horizon : inf;
    require(T >= s, errc::invalid_argument, "horizon must be >= s");
    for (const auto& at : alpha.atoms())
        if (at.mass == -1.0 && at.time <= T)
            throw error(errc::possible_bottleneck, "alpha has an atom of -1 at t=" + fmt_double(at.time) + "; extinction is only defined without a bottleneck");
    if (x == 0.0) return 1.0;
    if (T == s) return 0.0;
    if (std::isfinite(T)) {
        const double I = detail::feller_integral(alpha, beta, s, T).integral;
        return I > 0.0 ? std::exp(-x / I) : 0.0;
    }
    if (!alpha.open_ended() || !beta.open_ended())
        throw error(errc::tail_not_closed, "infinite horizon needs open-ended alpha and beta (constant terminal rates)");
    const double L = std::max({s, alpha.breakpoints().back(), beta.breakpoints().back(), alpha.atoms().empty() ? 0.0 : alpha.atoms().back().time});
    const auto head = detail::feller_integral(alpha, beta, s, L);
    const double a = alpha.rates().back(), b = beta.rates().back();
    double tail = 0.0;
    if (b > 0.0) {
        if (a <= 0.0) return 1.0;
        tail = b * std::exp(-head.D) / a;
    }
    const double I = head.integral + tail;
    return I > 0.0 ? std::exp(-x / I) : 0.0;
}

struct HomogeneousResult {
    double value = 0.0;
    bool explosion = false;
};

inline constexpr double csbp_overflow_guard = 1e150;

// v' = mech(v), v(0) = lam, integrated over tau with adaptive Dormand-Prince steps.
inline HomogeneousResult csbp_u_homogeneous(const BranchingMechanism& mech, double tau, double lam, double tol = 1e-10) {
    mech.validate();
    require(tau >= 0.0 && std::isfinite(tau), errc::invalid_argument, "tau must be finite and >= 0");
    require(lam > 0.0 && std::isfinite(lam), errc::invalid_argument, "csbp_u_homogeneous requires lambda > 0");
    if (tau == 0.0) return {lam, false};
    namespace ode = boost::numeric::odeint;
    struct Overflow {};
    using state = double;
    auto rhs = [&](const state& v, state& dv, double) {
        if (!(std::abs(v) < csbp_overflow_guard)) throw Overflow{};
        dv = mech(v);
    };
    state v = lam;
    try {
        auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<state>>(0.01 * tol, 0.01 * tol);
        ode::integrate_adaptive(stepper, rhs, v, 0.0, tau, std::min(tau, 1e-3) * 0.1);
    } catch (const Overflow&) {
        return {inf, true};
    }
    if (!(std::abs(v) < csbp_overflow_guard)) return {inf, true};
    return {v, false};
}

} // namespace gwve
