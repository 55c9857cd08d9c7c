#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "levy_measure.hpp"
#include "special_functions.hpp"

namespace gwve {

inline constexpr double inf = std::numeric_limits<double>::infinity();

struct Atom {
    double time;
    double mass;
};

// Signed measure on (0, inf) with piecewise-constant density plus atoms.
//
// rates[k] is the density on (breakpoints[k], breakpoints[k+1]]. When rates has
// as many entries as breakpoints the last rate extends to infinity
// ("open-ended"); with one fewer entry the density is zero past the last
// breakpoint.
class PiecewiseSignedMeasure {
public:
    PiecewiseSignedMeasure() : breakpoints_{0.0}, rates_{0.0} { build_prefix(); }

    PiecewiseSignedMeasure(std::vector<double> breakpoints, std::vector<double> rates, std::vector<Atom> atoms = {})
        : breakpoints_(std::move(breakpoints)), rates_(std::move(rates)), atoms_(std::move(atoms)) {
        require(!breakpoints_.empty(), errc::invalid_argument, "measure needs at least one breakpoint");
        require(breakpoints_.front() >= 0.0, errc::invalid_argument, "breakpoints must be >= 0");
        for (std::size_t k = 1; k < breakpoints_.size(); ++k)
            require(breakpoints_[k] > breakpoints_[k - 1], errc::invalid_argument, "breakpoints must be strictly increasing");
        require(rates_.size() == breakpoints_.size() || rates_.size() + 1 == breakpoints_.size(), errc::invalid_argument,
                "rates must have one entry per breakpoint interval");
        for (double r : rates_) require(std::isfinite(r), errc::invalid_argument, "rates must be finite");
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            const auto& a = atoms_[k];
            require(std::isfinite(a.mass), errc::invalid_argument, "atom masses must be finite");
            require(a.time > 0.0 && a.time >= breakpoints_.front() && a.time <= end(), errc::invalid_argument,
                    "atom time outside the covered range");
            if (k > 0) require(a.time > atoms_[k - 1].time, errc::invalid_argument, "atom times must be strictly increasing");
        }
        build_prefix();
    }

    static PiecewiseSignedMeasure constant_rate(double rate, std::vector<Atom> atoms = {}) {
        return PiecewiseSignedMeasure({0.0}, {rate}, std::move(atoms));
    }

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& rates() const { return rates_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    bool open_ended() const { return rates_.size() == breakpoints_.size(); }
    double end() const { return open_ended() ? inf : breakpoints_.back(); }

    // density on the piece containing y, pieces taken as (b_k, b_{k+1}]
    double rate_at(double y) const {
        if (y <= breakpoints_.front()) return 0.0;
        auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), y);
        const std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
        return k < rates_.size() ? rates_[k] : 0.0;
    }

    double atom_at(double t) const {
        auto it = std::lower_bound(atoms_.begin(), atoms_.end(), t, [](const Atom& a, double v) { return a.time < v; });
        return (it != atoms_.end() && it->time == t) ? it->mass : 0.0;
    }

    // Integral of the density over (0, t].
    double density_integral(double t) const { return density_prefix(t, false); }

    // m(0, t]
    double cumulative(double t) const { return density_prefix(t, false) + atom_prefix(t, false, true); }
    // m(0, t)
    double cumulative_left(double t) const { return density_prefix(t, false) + atom_prefix(t, false, false); }
    // m(s, t]
    double mass(double s, double t) const { return cumulative(t) - cumulative(s); }
    // |m|(0, t]
    double total_variation(double t) const { return density_prefix(t, true) + atom_prefix(t, true, true); }
    double variation(double s, double t) const { return total_variation(t) - total_variation(s); }

    bool has_atoms() const { return !atoms_.empty(); }

    PiecewiseSignedMeasure scaled(double k) const {
        auto r = rates_;
        for (auto& v : r) v *= k;
        auto a = atoms_;
        for (auto& v : a) v.mass *= k;
        return PiecewiseSignedMeasure(breakpoints_, std::move(r), std::move(a));
    }

private:
    double density_prefix(double t, bool absolute) const {
        if (t <= breakpoints_.front()) return 0.0;
        const auto& pre = absolute ? abs_prefix_ : prefix_;
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
        double v = pre[k];
        if (k < rates_.size()) {
            const double r = absolute ? std::abs(rates_[k]) : rates_[k];
            v += r * (t - breakpoints_[k]);
        }
        return v;
    }

    double atom_prefix(double t, bool absolute, bool inclusive) const {
        auto it = inclusive
                      ? std::upper_bound(atoms_.begin(), atoms_.end(), t, [](double v, const Atom& a) { return v < a.time; })
                      : std::lower_bound(atoms_.begin(), atoms_.end(), t, [](const Atom& a, double v) { return a.time < v; });
        const std::size_t n = static_cast<std::size_t>(it - atoms_.begin());
        return absolute ? atom_abs_prefix_[n] : atom_signed_prefix_[n];
    }

    void build_prefix() {
        prefix_.assign(breakpoints_.size(), 0.0);
        abs_prefix_.assign(breakpoints_.size(), 0.0);
        for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
            const double len = breakpoints_[k] - breakpoints_[k - 1];
            prefix_[k] = prefix_[k - 1] + rates_[k - 1] * len;
            abs_prefix_[k] = abs_prefix_[k - 1] + std::abs(rates_[k - 1]) * len;
        }
        atom_signed_prefix_.assign(atoms_.size() + 1, 0.0);
        atom_abs_prefix_.assign(atoms_.size() + 1, 0.0);
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            atom_signed_prefix_[k + 1] = atom_signed_prefix_[k] + atoms_[k].mass;
            atom_abs_prefix_[k + 1] = atom_abs_prefix_[k] + std::abs(atoms_[k].mass);
        }
    }

    std::vector<double> breakpoints_;
    std::vector<double> rates_;
    std::vector<Atom> atoms_;
    std::vector<double> prefix_, abs_prefix_, atom_signed_prefix_, atom_abs_prefix_;
};

inline double total_variation(const PiecewiseSignedMeasure& m, double t) { return m.total_variation(t); }

// Nonnegative measure of the same shape.
class MonotoneMeasure : public PiecewiseSignedMeasure {
public:
    MonotoneMeasure() = default;

    MonotoneMeasure(std::vector<double> breakpoints, std::vector<double> rates, std::vector<Atom> atoms = {})
        : PiecewiseSignedMeasure(std::move(breakpoints), std::move(rates), std::move(atoms)) {
        check();
    }

    explicit MonotoneMeasure(PiecewiseSignedMeasure m) : PiecewiseSignedMeasure(std::move(m)) { check(); }

    static MonotoneMeasure constant_rate(double rate, std::vector<Atom> atoms = {}) {
        return MonotoneMeasure({0.0}, {rate}, std::move(atoms));
    }

private:
    void check() const {
        for (double r : rates()) require(r >= 0.0, errc::invalid_argument, "monotone measure needs rates >= 0");
        for (const auto& a : atoms()) require(a.mass >= 0.0, errc::invalid_argument, "monotone measure needs atom masses >= 0");
    }
};

// nu(dx dy) = F(dx) dy on (lo, hi]
struct HomogeneousPiece {
    double lo;
    double hi;
    LevyMeasure F;
};

// nu(dx x {time}) = G(dx)
struct FixedAtom {
    double time;
    LevyMeasure G;
};

class LevyKernel {
public:
    LevyKernel() = default;

    LevyKernel(std::vector<HomogeneousPiece> homogeneous, std::vector<FixedAtom> fixed_atoms) : homogeneous_(std::move(homogeneous)) {
        for (const auto& p : homogeneous_)
            require(p.lo >= 0.0 && p.hi > p.lo, errc::invalid_argument, "homogeneous interval must satisfy 0 <= lo < hi");
        std::sort(fixed_atoms.begin(), fixed_atoms.end(), [](const FixedAtom& l, const FixedAtom& r) { return l.time < r.time; });
        for (auto& a : fixed_atoms) {
            require(a.time > 0.0 && std::isfinite(a.time), errc::invalid_argument, "fixed atom time must be > 0");
            if (!fixed_.empty() && fixed_.back().time == a.time)
                fixed_.back().G += a.G;
            else
                fixed_.push_back(std::move(a));
        }
    }

    const std::vector<HomogeneousPiece>& homogeneous() const { return homogeneous_; }
    const std::vector<FixedAtom>& fixed_atoms() const { return fixed_; }
    bool empty() const { return homogeneous_.empty() && fixed_.empty(); }

    // Sum of the homogeneous rates active at time y, pieces taken as (lo, hi].
    LevyMeasure rate_at(double y) const {
        LevyMeasure F;
        for (const auto& p : homogeneous_)
            if (y > p.lo && y <= p.hi) F += p.F;
        return F;
    }

    const LevyMeasure* atom_at(double t) const {
        for (const auto& a : fixed_)
            if (a.time == t) return &a.G;
        return nullptr;
    }

    // Integral of kind(x, u) against nu over (0, inf) x (s, t] for constant u.
    double integral(double s, double t, double u, LevyKind kind) const {
        double v = 0.0;
        for (const auto& p : homogeneous_) {
            const double len = std::min(t, p.hi) - std::max(s, p.lo);
            if (len > 0.0) v += len * levy_integral(p.F, u, kind);
        }
        for (const auto& a : fixed_)
            if (a.time > s && a.time <= t) v += levy_integral(a.G, u, kind);
        return v;
    }

    // nu([x, inf) x (s, t])
    double tail(double x, double s, double t) const {
        double v = 0.0;
        for (const auto& p : homogeneous_) {
            const double len = std::min(t, p.hi) - std::max(s, p.lo);
            if (len > 0.0) v += len * p.F.tail(x);
        }
        for (const auto& a : fixed_)
            if (a.time > s && a.time <= t) v += a.G.tail(x);
        return v;
    }

    std::vector<double> event_times() const {
        std::vector<double> ts;
        for (const auto& p : homogeneous_) {
            ts.push_back(p.lo);
            if (std::isfinite(p.hi)) ts.push_back(p.hi);
        }
        for (const auto& a : fixed_) ts.push_back(a.time);
        return ts;
    }

private:
    std::vector<HomogeneousPiece> homogeneous_;
    std::vector<FixedAtom> fixed_;
};

struct LimitTriplet {
    PiecewiseSignedMeasure alpha;
    MonotoneMeasure beta;
    LevyKernel nu;
};

inline constexpr double triplet_tol = 1e-12;

namespace detail {

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Every time at which some density may change or an atom sits.
inline std::vector<double> triplet_event_times(const LimitTriplet& trip) {
    std::vector<double> ts{0.0};
    for (double b : trip.alpha.breakpoints()) ts.push_back(b);
    for (double b : trip.beta.breakpoints()) ts.push_back(b);
    for (const auto& a : trip.alpha.atoms()) ts.push_back(a.time);
    for (const auto& a : trip.beta.atoms()) ts.push_back(a.time);
    for (double b : trip.nu.event_times()) ts.push_back(b);
    return sorted_unique(std::move(ts));
}

inline std::vector<double> atom_times(const LimitTriplet& trip) {
    std::vector<double> ts;
    for (const auto& a : trip.alpha.atoms()) ts.push_back(a.time);
    for (const auto& a : trip.beta.atoms()) ts.push_back(a.time);
    for (const auto& a : trip.nu.fixed_atoms()) ts.push_back(a.time);
    return sorted_unique(std::move(ts));
}

inline bool close(double a, double b, double tol = triplet_tol) { return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Density of beta minus the nu-induced part, on the piece containing y.
inline double tilde_beta_rate(const LimitTriplet& trip, double y) {
    return trip.beta.rate_at(y) - 0.5 * levy_integral(trip.nu.rate_at(y), 0.0, LevyKind::x2);
}

} // namespace detail

// Throws InvariantViolation when the triplet breaks one of its invariants.
inline void validate(const LimitTriplet& trip) {
    for (const auto& a : trip.alpha.atoms())
        require(a.mass >= -1.0, errc::invariant_violation, "alpha atom at t=" + fmt_double(a.time) + " is below -1");
    for (double tau : detail::atom_times(trip)) {
        const LevyMeasure* G = trip.nu.atom_at(tau);
        const double induced = G ? 0.5 * levy_integral(*G, 0.0, LevyKind::x2) : 0.0;
        require(detail::close(trip.beta.atom_at(tau), induced), errc::invariant_violation,
                "beta atom at t=" + fmt_double(tau) + " does not match the nu-induced mass " + fmt_double(induced));
    }
    const auto ts = detail::triplet_event_times(trip);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double lo = ts[k];
        const double mid = k + 1 < ts.size() ? 0.5 * (lo + ts[k + 1]) : lo + 1.0;
        const double r = detail::tilde_beta_rate(trip, mid);
        require(r >= -triplet_tol * std::max(1.0, trip.beta.rate_at(mid)), errc::invariant_violation,
                "beta density is smaller than the nu-induced density after t=" + fmt_double(lo));
    }
}

// beta(t) - int x^2/(2(1+x^2)) nu(dx dy) over (0,t]
inline double tilde_beta(const LimitTriplet& trip, double t) {
    const auto ts = detail::triplet_event_times(trip);
    for (std::size_t k = 0; k < ts.size() && ts[k] < t; ++k) {
        const double hi = k + 1 < ts.size() ? std::min(ts[k + 1], t) : t;
        const double r = detail::tilde_beta_rate(trip, 0.5 * (ts[k] + hi));
        require(r >= -triplet_tol * std::max(1.0, std::abs(r)), errc::invariant_violation,
                "tilde beta decreases on (" + fmt_double(ts[k]) + ", " + fmt_double(hi) + "]");
    }
    for (double tau : detail::atom_times(trip)) {
        if (tau > t) break;
        const LevyMeasure* G = trip.nu.atom_at(tau);
        const double jump = trip.beta.atom_at(tau) - (G ? 0.5 * levy_integral(*G, 0.0, LevyKind::x2) : 0.0);
        require(std::abs(jump) <= triplet_tol * std::max(1.0, trip.beta.atom_at(tau)), errc::invariant_violation,
                "tilde beta has an atom at t=" + fmt_double(tau));
    }
    return trip.beta.cumulative(t) - 0.5 * trip.nu.integral(0.0, t, 0.0, LevyKind::x2);
}

// mu~(s,t] = |alpha|(s,t] + beta(s,t] + int x^2/(1+x^2) nu over (s,t]
inline double mu_tilde(const LimitTriplet& trip, double s, double t) {
    return trip.alpha.variation(s, t) + trip.beta.mass(s, t) + trip.nu.integral(s, t, 0.0, LevyKind::x2);
}

} // namespace gwve
