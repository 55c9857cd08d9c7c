#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "constants.hpp"
#include "measures.hpp"

namespace gwve {

// Values of a cadlag function on a mesh; left[j] is the limit from the left at y[j].
struct MeshFunction {
    std::vector<double> y;
    std::vector<double> left;
    std::vector<double> right;

    std::size_t size() const { return y.size(); }

    // Index of the node at s, MeshMismatch if s is not a node.
    std::size_t node(double s) const {
        const auto it = std::lower_bound(y.begin(), y.end(), s - 1e-12 * std::max(1.0, std::abs(s)));
        if (it == y.end() || std::abs(*it - s) > 1e-12 * std::max(1.0, std::abs(s)))
            throw error(errc::mesh_mismatch, "time " + fmt_double(s) + " is not a mesh node");
        return static_cast<std::size_t>(it - y.begin());
    }
};

inline MeshFunction constant_mesh_function(std::vector<double> y, double value) {
    const std::size_t n = y.size();
    return {std::move(y), std::vector<double>(n, value), std::vector<double>(n, value)};
}

inline double jump_relation(double u_right, double delta_alpha, const LevyMeasure* F_atom = nullptr) {
    require(u_right >= 0.0, errc::invalid_argument, "jump_relation requires u_right >= 0");
    require(delta_alpha >= -1.0, errc::invalid_argument, "jump_relation requires delta_alpha >= -1");
    double v = u_right + delta_alpha * u_right;
    if (F_atom && !F_atom->empty()) v += levy_integral(*F_atom, u_right, LevyKind::g);
    return v;
}

namespace detail {

// Constant coefficients on the open stretch between two consecutive event nodes.
struct SegmentCoefficients {
    double a = 0.0;       // alpha rate
    double b = 0.0;       // beta rate
    double b_tilde = 0.0; // beta rate minus the nu-induced part
    LevyMeasure F;

    double rhs_g(double u) const { return a * u - b_tilde * u * u + (F.empty() ? 0.0 : levy_integral(F, u, LevyKind::g)); }
    double rhs_h(double u) const { return a * u - b * u * u + (F.empty() ? 0.0 : levy_integral(F, u, LevyKind::h)); }
    double x2_mass() const { return F.empty() ? 0.0 : levy_integral(F, 0.0, LevyKind::x2); }
};

inline SegmentCoefficients coefficients_on(const LimitTriplet& trip, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    SegmentCoefficients c;
    c.a = trip.alpha.rate_at(mid);
    c.b = trip.beta.rate_at(mid);
    c.F = trip.nu.rate_at(mid);
    c.b_tilde = c.b - 0.5 * c.x2_mass();
    return c;
}

struct Segment {
    std::size_t i0, i1; // node indices, i1 - i0 cells
    SegmentCoefficients coef;
};

// Integral over cell k (nodes k, k+1) of the interpolant of f on a uniform grid
// of m cells with spacing h. Fourth order for m >= 3.
inline double cell_integral(const double* f, std::size_t m, std::size_t k, double h) {
    if (m == 1) return 0.5 * h * (f[0] + f[1]);
    if (m == 2) return k == 0 ? h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]) : h / 12.0 * (-f[0] + 8.0 * f[1] + 5.0 * f[2]);
    if (k == 0) return h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    if (k == m - 1) return h / 24.0 * (f[m - 3] - 5.0 * f[m - 2] + 19.0 * f[m - 1] + 9.0 * f[m]);
    return h / 24.0 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]);
}

// Splits the mesh into uniformly spaced segments, cutting at every event time of the
// triplet and wherever the spacing changes.
inline std::vector<Segment> segments_of(const MeshFunction& u, const LimitTriplet& trip) {
    const auto& y = u.y;
    require(y.size() >= 2, errc::mesh_mismatch, "mesh needs at least two nodes");
    std::vector<std::size_t> cuts{0};
    for (double e : triplet_event_times(trip))
        if (e > y.front() && e < y.back()) cuts.push_back(u.node(e));
    for (std::size_t j = 1; j + 1 < y.size(); ++j) {
        const double a = y[j] - y[j - 1], b = y[j + 1] - y[j];
        if (std::abs(a - b) > 1e-9 * std::max(a, b)) cuts.push_back(j);
    }
    cuts.push_back(y.size() - 1);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Segment> segs;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) segs.push_back({cuts[k], cuts[k + 1], coefficients_on(trip, y[cuts[k]], y[cuts[k + 1]])});
    return segs;
}

} // namespace detail

// cum[j] = Psi(u)((y_j, y_last]). h_form selects the (beta, h) expression; the
// alternative moves the nu-induced part of beta into the kernel and uses (beta-tilde, g).
inline std::vector<double> cumulative_psi(const MeshFunction& u, const LimitTriplet& trip, bool h_form = true) {
    const auto segs = detail::segments_of(u, trip);
    const std::size_t N = u.size();
    std::vector<double> cum(N, 0.0);
    std::vector<double> f;
    for (std::size_t k = segs.size(); k-- > 0;) {
        const auto& sg = segs[k];
        const std::size_t m = sg.i1 - sg.i0;
        const double h = (u.y[sg.i1] - u.y[sg.i0]) / static_cast<double>(m);
        // an atom at the right end belongs to (y_j, y_last] for every j < i1
        double acc = cum[sg.i1];
        const double tau = u.y[sg.i1], ur = u.right[sg.i1];
        const double da = trip.alpha.atom_at(tau), db = trip.beta.atom_at(tau);
        if (const LevyMeasure* G = trip.nu.atom_at(tau); da != 0.0 || db != 0.0 || G) {
            if (h_form)
                acc += da * ur - db * ur * ur + (G ? levy_integral(*G, ur, LevyKind::h) : 0.0);
            else
                acc += da * ur - (db - 0.5 * (G ? levy_integral(*G, 0.0, LevyKind::x2) : 0.0)) * ur * ur +
                       (G ? levy_integral(*G, ur, LevyKind::g) : 0.0);
        }
        f.resize(m + 1);
        for (std::size_t j = 0; j <= m; ++j) {
            // inside a segment u is continuous; use right values at the left end node
            const double v = j == m ? u.left[sg.i1] : u.right[sg.i0 + j];
            f[j] = h_form ? sg.coef.rhs_h(v) : sg.coef.rhs_g(v);
        }
        for (std::size_t c = m; c-- > 0;) {
            acc += detail::cell_integral(f.data(), m, c, h);
            cum[sg.i0 + c] = acc;
        }
    }
    return cum;
}

inline double psi_operator(const MeshFunction& u, const LimitTriplet& trip, double s, double t) {
    require(s <= t, errc::invalid_argument, "psi_operator requires s <= t");
    const std::size_t i = u.node(s), j = u.node(t);
    const auto cum = cumulative_psi(u, trip, true);
    return cum[i] - cum[j];
}

struct MeshControl {
    double h = 0.0;                  // target step; 0 means (t - s) / 2048
    std::size_t min_cells = 3;       // per stretch between event times
    std::vector<double> extra_nodes; // additional times that must be mesh nodes
};

enum class SolveMode { picard, ode, both };

struct SolverOptions {
    double s = 0.0; // left end of the solve
    double tol = 1e-10;
    std::size_t max_iter = 200;
    double floor = 1e-8;
    SolveMode mode = SolveMode::both;
    MeshControl mesh;
};

struct LaplaceSolution {
    double t = 0.0;
    double lambda = 0.0;
    MeshFunction u;
    double residual = 0.0;
    std::size_t iterations = 0;
    double ode_discrepancy = 0.0;
    double error_bound = 0.0;
    double domain_start = 0.0;
    bool possible_bottleneck = false;
    std::vector<std::string> warnings;

    // u(s) on [domain_start, t]; cubic interpolation between nodes.
    double value(double s) const { return eval(s, false); }
    double left_value(double s) const { return eval(s, true); }

private:
    double eval(double s, bool left) const {
        const auto& y = u.y;
        if (s < domain_start - 1e-12 * std::max(1.0, std::abs(domain_start))) {
            if (possible_bottleneck)
                throw error(errc::possible_bottleneck, "u may not exist left of " + fmt_double(domain_start) + " (solution collapsed below the floor)");
            throw error(errc::invalid_argument, "time " + fmt_double(s) + " lies before the solved range");
        }
        require(s <= t * (1.0 + 1e-12) + 1e-300, errc::invalid_argument, "time lies after the target time");
        const double tol = 1e-12 * std::max(1.0, std::abs(s));
        auto it = std::lower_bound(y.begin(), y.end(), s - tol);
        const std::size_t j = static_cast<std::size_t>(it - y.begin());
        if (j < y.size() && std::abs(y[j] - s) <= tol) return left ? u.left[j] : u.right[j];
        // s inside cell (j-1, j): cubic through the nodes of the surrounding continuity stretch
        std::size_t lb = j - 1, rb = j;
        while (lb > 0 && u.left[lb] == u.right[lb] && j - 1 - lb < 2) --lb;
        while (rb + 1 < y.size() && u.left[rb] == u.right[rb] && rb - j < 2) ++rb;
        auto val = [&](std::size_t k) { return k == rb ? u.left[k] : u.right[k]; };
        if (rb - lb < 3) {
            const double w = (s - y[j - 1]) / (y[j] - y[j - 1]);
            return (1.0 - w) * val(j - 1) + w * val(j);
        }
        std::size_t i0 = std::max(lb, j >= 2 ? j - 2 : 0);
        if (i0 + 3 > rb) i0 = rb - 3;
        double v = 0.0;
        for (std::size_t a = i0; a < i0 + 4; ++a) {
            double l = 1.0;
            for (std::size_t b = i0; b < i0 + 4; ++b)
                if (a != b) l *= (s - y[b]) / (y[a] - y[b]);
            v += l * val(a);
        }
        return v;
    }
};

namespace detail {

inline MeshFunction build_mesh(const LimitTriplet& trip, double s, double t, const MeshControl& ctl) {
    require(t > s, errc::invalid_argument, "mesh requires s < t");
    std::vector<double> ev{s, t};
    for (double e : triplet_event_times(trip))
        if (e > s && e < t) ev.push_back(e);
    for (double e : ctl.extra_nodes)
        if (e > s && e < t) ev.push_back(e);
    ev = sorted_unique(std::move(ev));
    const double h = ctl.h > 0.0 ? ctl.h : (t - s) / 2048.0;
    MeshFunction u;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        const double A = ev[k], B = ev[k + 1];
        const auto m = std::max<std::size_t>(ctl.min_cells, static_cast<std::size_t>(std::ceil((B - A) / h - 1e-9)));
        for (std::size_t j = 0; j < m; ++j) u.y.push_back(j == 0 ? A : A + (B - A) * static_cast<double>(j) / static_cast<double>(m));
    }
    u.y.push_back(t);
    u.left.assign(u.y.size(), 0.0);
    u.right.assign(u.y.size(), 0.0);
    return u;
}

struct AtomAt {
    double dalpha = 0.0;
    const LevyMeasure* G = nullptr;
    bool any() const { return dalpha != 0.0 || G != nullptr; }
};

inline AtomAt atom_at(const LimitTriplet& trip, double tau) { return {trip.alpha.atom_at(tau), trip.nu.atom_at(tau)}; }

inline double apply_jump(const LimitTriplet& trip, double tau, double ur) {
    const auto at = atom_at(trip, tau);
    if (!at.any()) return ur;
    return jump_relation(ur, at.dalpha, at.G);
}

// Picard iteration on local nodes [w0, w1] of a uniform stretch with spacing h, value at w1 known.
inline bool picard_window(const SegmentCoefficients& c, double h, std::size_t w0, std::size_t w1, std::vector<double>& u, double tol,
                          std::size_t max_iter, std::size_t& iters) {
    const std::size_t m = w1 - w0;
    const double uR = u[w1];
    for (std::size_t j = w0; j < w1; ++j) u[j] = uR;
    std::vector<double> f(m + 1), next(m + 1);
    for (std::size_t it = 0; it < max_iter; ++it) {
        ++iters;
        for (std::size_t j = 0; j <= m; ++j) f[j] = c.rhs_g(u[w0 + j]);
        double acc = 0.0, change = 0.0, scale = 1.0;
        for (std::size_t k = m; k-- > 0;) {
            acc += cell_integral(f.data(), m, k, h);
            next[k] = uR + acc;
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::isfinite(next[j])) return false;
            change = std::max(change, std::abs(next[j] - u[w0 + j]));
            scale = std::max(scale, std::abs(next[j]));
            u[w0 + j] = next[j];
        }
        if (change <= tol * scale) return true;
    }
    return false;
}

// Picard on [w0, w1], halving the window when the iteration fails to settle.
inline void picard_range(const SegmentCoefficients& c, double h, double y0, std::size_t w0, std::size_t w1, std::vector<double>& u, double tol,
                         std::size_t max_iter, std::size_t& iters) {
    if (picard_window(c, h, w0, w1, u, tol, max_iter, iters)) return;
    const std::size_t m = w1 - w0;
    if (m < 6)
        throw error(errc::no_convergence, "Picard iteration did not converge on [" + fmt_double(y0 + h * static_cast<double>(w0)) + ", " +
                                              fmt_double(y0 + h * static_cast<double>(w1)) + "]");
    const std::size_t mid = w0 + m / 2;
    picard_range(c, h, y0, mid, w1, u, tol, max_iter, iters);
    picard_range(c, h, y0, w0, mid, u, tol, max_iter, iters);
}

// Local Lipschitz estimate of the segment right-hand side for values in [eta, U].
inline double lipschitz_estimate(const SegmentCoefficients& c, double eta, double U) {
    return std::abs(c.a) + 2.0 * std::abs(c.b_tilde) * U + (2.0 * (1.0 + U) + 2.0 / (std::exp(1.0) * std::max(eta, 1e-8))) * c.x2_mass();
}

inline double rk4_step(const SegmentCoefficients& c, double v, double h) {
    const double k1 = c.rhs_g(v);
    const double k2 = c.rhs_g(v + 0.5 * h * k1);
    const double k3 = c.rhs_g(v + 0.5 * h * k2);
    const double k4 = c.rhs_g(v + h * k3);
    return v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void truncate(MeshFunction& u, std::size_t first) {
    u.y.erase(u.y.begin(), u.y.begin() + static_cast<std::ptrdiff_t>(first));
    u.left.erase(u.left.begin(), u.left.begin() + static_cast<std::ptrdiff_t>(first));
    u.right.erase(u.right.begin(), u.right.begin() + static_cast<std::ptrdiff_t>(first));
}

// Sweeps segments right to left. solve_seg(seg, h, v) receives the local values
// v[0..m] with v[m] set to the left limit at the segment's right node and fills v[0..m-1].
// Returns the first valid node index (0 unless the solution collapsed below floor).
template <class SolveSeg>
std::size_t sweep(const LimitTriplet& trip, MeshFunction& u, const std::vector<Segment>& segs, double lam, double floor, bool& collapsed,
                  SolveSeg&& solve_seg) {
    const std::size_t N = u.size();
    u.right[N - 1] = lam;
    u.left[N - 1] = apply_jump(trip, u.y[N - 1], lam);
    if (u.left[N - 1] < floor) {
        collapsed = true;
        return N - 1;
    }
    std::vector<double> v;
    for (std::size_t k = segs.size(); k-- > 0;) {
        const auto& sg = segs[k];
        const std::size_t m = sg.i1 - sg.i0;
        const double h = (u.y[sg.i1] - u.y[sg.i0]) / static_cast<double>(m);
        v.assign(m + 1, 0.0);
        v[m] = u.left[sg.i1];
        solve_seg(sg, h, v);
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::isfinite(v[j])) throw error(errc::no_convergence, "solution left the finite range near s = " + fmt_double(u.y[sg.i0 + j]));
            u.right[sg.i0 + j] = u.left[sg.i0 + j] = v[j];
        }
        u.left[sg.i0] = apply_jump(trip, u.y[sg.i0], u.right[sg.i0]);
        for (std::size_t j = sg.i1; j-- > sg.i0;) {
            if (u.right[j] < floor) {
                collapsed = true;
                return j + 1;
            }
            if (u.left[j] < floor) {
                collapsed = true;
                return j;
            }
        }
    }
    return 0;
}

} // namespace detail

// Backwards Gronwall bound R(s) + e^{pi(s,t]} int_{(s,t]} R dpi, R a mesh function
// (linear between nodes, right values at atoms).
inline double gronwall_bound(const MeshFunction& R, const MonotoneMeasure& pi, double s, double t) {
    require(s <= t, errc::invalid_argument, "gronwall_bound requires s <= t");
    const std::size_t i = R.node(s), j = R.node(t);
    for (std::size_t k = i; k <= j; ++k) require(R.right[k] >= 0.0 && R.left[k] >= 0.0, errc::invalid_argument, "R must be nonnegative");
    double integral = 0.0;
    for (std::size_t k = i; k < j; ++k) {
        const double a = R.y[k], b = R.y[k + 1];
        // split the cell at breakpoints of pi; R linear on the cell
        std::vector<double> cuts{a, b};
        for (double bp : pi.breakpoints())
            if (bp > a && bp < b) cuts.push_back(bp);
        std::sort(cuts.begin(), cuts.end());
        auto Rat = [&](double x) { return R.right[k] + (R.left[k + 1] - R.right[k]) * (x - a) / (b - a); };
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double lo = cuts[c], hi = cuts[c + 1];
            integral += pi.rate_at(0.5 * (lo + hi)) * 0.5 * (Rat(lo) + Rat(hi)) * (hi - lo);
        }
    }
    for (const auto& at : pi.atoms())
        if (at.time > s && at.time <= t) {
            const std::size_t k = R.node(at.time);
            integral += at.mass * R.right[k];
        }
    return R.right[i] + std::exp(pi.mass(s, t)) * integral;
}

namespace detail {

// mu-tilde = |alpha| + beta + int x^2/(1+x^2) nu as a monotone measure on the mesh stretches.
inline MonotoneMeasure mu_tilde_measure(const LimitTriplet& trip, const MeshFunction& u, const std::vector<Segment>& segs, double scale) {
    std::vector<double> bps;
    std::vector<double> rates;
    std::vector<Atom> atoms;
    for (const auto& sg : segs) {
        bps.push_back(u.y[sg.i0]);
        rates.push_back(scale * (std::abs(sg.coef.a) + sg.coef.b + sg.coef.x2_mass()));
    }
    bps.push_back(u.y.back());
    for (std::size_t j = 1; j < u.size(); ++j) {
        const double tau = u.y[j];
        const LevyMeasure* G = trip.nu.atom_at(tau);
        const double m = std::abs(trip.alpha.atom_at(tau)) + trip.beta.atom_at(tau) + (G ? levy_integral(*G, 0.0, LevyKind::x2) : 0.0);
        if (m > 0.0) atoms.push_back({tau, scale * m});
    }
    return MonotoneMeasure(bps, rates, atoms);
}

} // namespace detail

inline LaplaceSolution solve_u(const LimitTriplet& trip, double t, double lam, const SolverOptions& opt = {}) {
    validate(trip);
    require(lam > 0.0 && std::isfinite(lam), errc::invalid_argument, "solve_u requires lambda > 0");
    require(opt.tol > 0.0 && opt.floor >= 0.0, errc::invalid_argument, "tolerances must be positive");
    require(t >= opt.s && opt.s >= 0.0, errc::invalid_argument, "solve_u requires 0 <= s <= t");
    LaplaceSolution sol;
    sol.t = t;
    sol.lambda = lam;
    if (t == opt.s) {
        sol.u = {{t}, {detail::apply_jump(trip, t, lam)}, {lam}};
        sol.domain_start = t;
        return sol;
    }
    MeshFunction u = detail::build_mesh(trip, opt.s, t, opt.mesh);
    const auto segs = detail::segments_of(u, trip);
    bool collapsed = false;
    std::size_t first = 0;

    if (opt.mode != SolveMode::ode) {
        first = detail::sweep(trip, u, segs, lam, opt.floor, collapsed, [&](const detail::Segment& sg, double h, std::vector<double>& v) {
            const std::size_t m = sg.i1 - sg.i0;
            const double uR = v[m];
            const double L = detail::lipschitz_estimate(sg.coef, 0.5 * std::min(uR, lam), 2.0 * std::max(uR, lam) + 1.0);
            const std::size_t wc = std::max<std::size_t>(3, L > 0.0 ? static_cast<std::size_t>(std::min(0.5 / (L * h), 1e9)) : m);
            const std::size_t k = std::max<std::size_t>(1, m / std::min(wc, m));
            // k windows of nearly equal size, solved right to left
            std::size_t hi = m;
            for (std::size_t w = k; w-- > 0;) {
                const std::size_t lo = m * w / k;
                detail::picard_range(sg.coef, h, u.y[sg.i0], lo, hi, v, opt.tol, opt.max_iter, sol.iterations);
                hi = lo;
            }
        });
    }
    if (opt.mode != SolveMode::picard) {
        MeshFunction w = u;
        bool c2 = false;
        const std::size_t f2 = detail::sweep(trip, w, segs, lam, opt.floor, c2, [&](const detail::Segment& sg, double h, std::vector<double>& v) {
            for (std::size_t j = sg.i1 - sg.i0; j-- > 0;) v[j] = detail::rk4_step(sg.coef, v[j + 1], h);
        });
        if (opt.mode == SolveMode::ode) {
            u = std::move(w);
            first = f2;
            collapsed = c2;
        } else {
            const std::size_t from = std::max(first, f2);
            for (std::size_t j = from; j < u.size(); ++j) {
                const double d = std::max(std::abs(u.right[j] - w.right[j]) / std::max(1.0, std::abs(u.right[j])),
                                          std::abs(u.left[j] - w.left[j]) / std::max(1.0, std::abs(u.left[j])));
                sol.ode_discrepancy = std::max(sol.ode_discrepancy, d);
            }
            if (sol.ode_discrepancy > 10.0 * opt.tol)
                throw error(errc::no_convergence, "Picard and ODE solutions disagree by " + fmt_double(sol.ode_discrepancy) +
                                                      " (relative); refine the mesh");
        }
    }
    if (collapsed) {
        sol.possible_bottleneck = true;
        sol.warnings.push_back("possible_bottleneck: u fell below " + fmt_double(opt.floor) + "; domain truncated at s = " +
                               fmt_double(u.y[first]));
        detail::truncate(u, first);
    }
    sol.domain_start = u.y.front();
    sol.u = std::move(u);

    if (sol.u.size() >= 2) {
        const auto cum = cumulative_psi(sol.u, trip, true);
        MeshFunction R = sol.u;
        double eta = inf, U = 0.0;
        for (std::size_t j = 0; j < sol.u.size(); ++j) {
            const double r = std::abs(sol.u.right[j] - lam - cum[j]);
            sol.residual = std::max(sol.residual, r);
            eta = std::min(eta, sol.u.right[j]);
            U = std::max(U, sol.u.right[j]);
        }
        for (std::size_t j = 0; j < R.size(); ++j) R.left[j] = R.right[j] = sol.residual;
        if (eta > 0.0) {
            const auto segs2 = detail::segments_of(sol.u, trip);
            const double c3 = const_c3(eta, std::max(U, eta) * (1.0 + 1e-9) + 1e-12);
            sol.error_bound = gronwall_bound(R, detail::mu_tilde_measure(trip, sol.u, segs2, c3), sol.domain_start, t);
        } else {
            sol.error_bound = inf;
        }
    }
    return sol;
}

// exp(-x u(s, t_1, lam_1 + u(t_1, t_2, lam_2 + ...)))
inline double fdd_laplace(const LimitTriplet& trip, double s, const std::vector<std::pair<double, double>>& pairs, double x,
                          const SolverOptions& opt = {}) {
    require(!pairs.empty(), errc::invalid_argument, "fdd_laplace needs at least one (t, lambda) pair");
    require(x >= 0.0, errc::invalid_argument, "fdd_laplace requires x >= 0");
    require(s <= pairs.front().first, errc::invalid_argument, "fdd_laplace requires s <= t_1");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        require(pairs[i].second >= 0.0, errc::invalid_argument, "lambda values must be >= 0");
        if (i > 0) require(pairs[i].first > pairs[i - 1].first, errc::invalid_argument, "times must be strictly increasing");
    }
    auto u_of = [&](double a, double b, double lam) {
        if (lam == 0.0) return 0.0;
        SolverOptions o = opt;
        o.s = a;
        return solve_u(trip, b, lam, o).value(a);
    };
    double v = pairs.back().second;
    for (std::size_t i = pairs.size() - 1; i-- > 0;) v = pairs[i].second + u_of(pairs[i].first, pairs[i + 1].first, v);
    return std::exp(-x * u_of(s, pairs.front().first, v));
}

struct LipschitzCertificate {
    double c3 = 0.0;
    double bound = 0.0;        // c3 int |u1 - u2| dmu-tilde over the whole range
    double max_ratio = 0.0;    // max |Psi(u1) - Psi(u2)|(A) / bound(A) over the probed subintervals
    std::size_t violations = 0;
};

inline LipschitzCertificate lipschitz_certificate(const LimitTriplet& trip, const MeshFunction& u1, const MeshFunction& u2, std::uint64_t seed = 7) {
    require(u1.y == u2.y, errc::mesh_mismatch, "functions must share a mesh");
    const double inf1 = std::min(*std::min_element(u1.right.begin(), u1.right.end()), *std::min_element(u1.left.begin(), u1.left.end()));
    const double inf2 = std::min(*std::min_element(u2.right.begin(), u2.right.end()), *std::min_element(u2.left.begin(), u2.left.end()));
    if (!(inf1 > 0.0 && inf2 > 0.0)) throw error(errc::non_positive_input, "Lipschitz certificate requires strictly positive functions");
    const double sup1 = std::max(*std::max_element(u1.right.begin(), u1.right.end()), *std::max_element(u1.left.begin(), u1.left.end()));
    const double sup2 = std::max(*std::max_element(u2.right.begin(), u2.right.end()), *std::max_element(u2.left.begin(), u2.left.end()));
    LipschitzCertificate cert;
    cert.c3 = const_c3(std::min(inf1, inf2), sup1 + sup2);
    const auto segs = detail::segments_of(u1, trip);
    const auto mu = detail::mu_tilde_measure(trip, u1, segs, 1.0);
    MeshFunction diff = u1;
    for (std::size_t j = 0; j < diff.size(); ++j) {
        diff.right[j] = std::abs(u1.right[j] - u2.right[j]);
        diff.left[j] = std::abs(u1.left[j] - u2.left[j]);
    }
    // int_{(a,b]} |u1 - u2| dmu-tilde, from the Gronwall integral with R(a) removed and no exponential
    auto weighted = [&](std::size_t i, std::size_t j) {
        double integral = 0.0;
        for (std::size_t k = i; k < j; ++k) {
            const double a = diff.y[k], b = diff.y[k + 1];
            integral += mu.rate_at(0.5 * (a + b)) * 0.5 * (diff.right[k] + diff.left[k + 1]) * (b - a);
        }
        for (const auto& at : mu.atoms())
            if (at.time > diff.y[i] && at.time <= diff.y[j]) integral += at.mass * diff.right[u1.node(at.time)];
        return cert.c3 * integral;
    };
    const std::size_t N = u1.size();
    cert.bound = weighted(0, N - 1);
    const auto c1 = cumulative_psi(u1, trip, true), c2 = cumulative_psi(u2, trip, true);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    for (int r = 0; r < 20; ++r) {
        std::size_t i = pick(rng), j = pick(rng);
        if (i > j) std::swap(i, j);
        const double lhs = std::abs((c1[i] - c1[j]) - (c2[i] - c2[j]));
        const double rhs = weighted(i, j);
        // quadrature of both sides carries O(h^4) error
        if (lhs > rhs * (1.0 + 1e-9) + 1e-12) ++cert.violations;
        if (rhs > 0.0) cert.max_ratio = std::max(cert.max_ratio, lhs / rhs);
    }
    return cert;
}

} // namespace gwve
