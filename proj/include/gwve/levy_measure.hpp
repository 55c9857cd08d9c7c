#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "special_functions.hpp"

namespace gwve {

struct LevyAtom {
    double x;
    double mass;
};

// F([x, inf)) = scale * x^{-index}
struct PowerTail {
    double index;
    double scale;
};

// Integrands accepted by levy_integral. The public kinds are g, h and
// x^2/(1+x^2); the remaining ones are used for drift conversions.
enum class LevyKind {
    g,
    h,
    x2,          // x^2/(1+x^2)
    x3,          // x^3/(1+x^2)
    drift_bridge // x/(1+x^2) - x 1{x <= 1}
};

// Lévy measure on (0, inf): a finite list of atoms plus a finite sum of power tails.
class LevyMeasure {
public:
    LevyMeasure() = default;

    static LevyMeasure atoms(std::vector<LevyAtom> list) {
        LevyMeasure m;
        for (const auto& a : list) {
            require(std::isfinite(a.x) && a.x > 0.0, errc::non_integrable, "Levy atom location must be > 0");
            require(std::isfinite(a.mass) && a.mass >= 0.0, errc::non_integrable, "Levy atom mass must be >= 0");
        }
        std::sort(list.begin(), list.end(), [](const LevyAtom& l, const LevyAtom& r) { return l.x < r.x; });
        for (const auto& a : list) {
            if (a.mass == 0.0) continue;
            if (!m.atoms_.empty() && m.atoms_.back().x == a.x)
                m.atoms_.back().mass += a.mass;
            else
                m.atoms_.push_back(a);
        }
        return m;
    }

    static LevyMeasure dirac(double x, double mass = 1.0) { return atoms({{x, mass}}); }

    static LevyMeasure power_tail(double index, double scale) {
        require(index > 0.0 && index < 2.0, errc::non_integrable, "power tail index must lie in (0,2)");
        require(scale > 0.0 && std::isfinite(scale), errc::non_integrable, "power tail scale must be > 0");
        LevyMeasure m;
        m.tails_.push_back({index, scale});
        return m;
    }

    const std::vector<LevyAtom>& atom_list() const { return atoms_; }
    const std::vector<PowerTail>& tails() const { return tails_; }
    bool empty() const { return atoms_.empty() && tails_.empty(); }

    LevyMeasure& operator+=(const LevyMeasure& o) {
        if (!o.atoms_.empty()) {
            auto merged = atoms_;
            merged.insert(merged.end(), o.atoms_.begin(), o.atoms_.end());
            atoms_ = atoms(std::move(merged)).atoms_;
        }
        for (const auto& t : o.tails_) {
            auto it = std::find_if(tails_.begin(), tails_.end(), [&](const PowerTail& p) { return p.index == t.index; });
            if (it != tails_.end())
                it->scale += t.scale;
            else
                tails_.push_back(t);
        }
        return *this;
    }

    friend LevyMeasure operator+(LevyMeasure l, const LevyMeasure& r) { return l += r; }

    LevyMeasure scaled(double k) const {
        require(k >= 0.0 && std::isfinite(k), errc::invalid_argument, "Levy measure scale factor must be >= 0");
        LevyMeasure m;
        if (k == 0.0) return m;
        m.atoms_ = atoms_;
        for (auto& a : m.atoms_) a.mass *= k;
        m.tails_ = tails_;
        for (auto& t : m.tails_) t.scale *= k;
        return m;
    }

    // F([x, inf)) for x > 0
    double tail(double x) const {
        double s = 0.0;
        for (const auto& a : atoms_)
            if (a.x >= x) s += a.mass;
        for (const auto& t : tails_) s += t.scale * std::pow(x, -t.index);
        return s;
    }

    bool has_atom_at(double x) const {
        return std::any_of(atoms_.begin(), atoms_.end(), [x](const LevyAtom& a) { return a.x == x; });
    }

private:
    std::vector<LevyAtom> atoms_;
    std::vector<PowerTail> tails_;
};

inline double levy_kernel_value(LevyKind kind, double x, double u) {
    const double x2 = x * x;
    switch (kind) {
    case LevyKind::g: return eval_g(x, u);
    case LevyKind::h: return eval_h(x, u);
    case LevyKind::x2: return x2 / (1.0 + x2);
    case LevyKind::x3: return x2 * x / (1.0 + x2);
    case LevyKind::drift_bridge: return x <= 1.0 ? -x2 * x / (1.0 + x2) : x / (1.0 + x2);
    }
    return 0.0;
}

namespace detail {

struct PowerTerm {
    double coef;
    double power;
};

struct Expansion {
    PowerTerm t[4];
    int count;
};

// Leading terms of the integrand as x -> 0.
inline Expansion small_x_expansion(LevyKind kind, double u) {
    const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2;
    switch (kind) {
    case LevyKind::g: return {{{-0.5 * u2, 2.0}, {u + u3 / 6.0, 3.0}, {-u4 / 24.0, 4.0}}, 3};
    case LevyKind::h: return {{{u + u3 / 6.0, 3.0}, {-(0.5 * u2 + u4 / 24.0), 4.0}}, 2};
    case LevyKind::x2: return {{{1.0, 2.0}, {-1.0, 4.0}}, 2};
    case LevyKind::x3: return {{{1.0, 3.0}, {-1.0, 5.0}}, 2};
    case LevyKind::drift_bridge: return {{{-1.0, 3.0}, {1.0, 5.0}}, 2};
    }
    return {{}, 0};
}

// Leading terms of the integrand as x -> inf (exponentially small parts dropped).
inline Expansion large_x_expansion(LevyKind kind, double u) {
    const double u2 = u * u;
    switch (kind) {
    case LevyKind::g: return {{{1.0, 0.0}, {-u, -1.0}, {u, -3.0}}, 3};
    case LevyKind::h: return {{{1.0 + 0.5 * u2, 0.0}, {-u, -1.0}, {-0.5 * u2, -2.0}, {u, -3.0}}, 4};
    case LevyKind::x2: return {{{1.0, 0.0}, {-1.0, -2.0}, {1.0, -4.0}}, 3};
    case LevyKind::x3: return {{{1.0, 1.0}, {-1.0, -1.0}, {1.0, -3.0}}, 3};
    case LevyKind::drift_bridge: return {{{1.0, -1.0}, {-1.0, -3.0}}, 2};
    }
    return {{}, 0};
}

inline constexpr double levy_quad_rel_tol = 1e-13;
inline constexpr unsigned levy_quad_depth = 14;

// Closed forms against c a x^{-a-1} dx:
//   int x^2/(1+x^2)                 = c a pi / (2 sin(pi a / 2))
//   int (1 - e^{-ux} - ux)          = -c a Gamma(-a) u^a
//   int ux - ux/(1+x^2) = u x^3/(1+x^2) = -c a u pi / (2 cos(pi a / 2))
// The last two diverge separately at a = 1, so that neighbourhood uses quadrature.
inline constexpr double power_tail_closed_margin = 0.05;

inline bool power_tail_closed(const PowerTail& pt, LevyKind kind, double u, double& out) {
    const double a = pt.index, c = pt.scale;
    constexpr double pi = std::numbers::pi;
    const double x2 = c * a * pi / (2.0 * std::sin(pi * a / 2.0));
    if (kind == LevyKind::x2) {
        out = x2;
        return true;
    }
    if (kind != LevyKind::g && kind != LevyKind::h) return false;
    if (std::abs(a - 1.0) < power_tail_closed_margin) return false;
    const double g = -c * a * std::tgamma(-a) * std::pow(u, a) - c * a * u * pi / (2.0 * std::cos(pi * a / 2.0));
    out = kind == LevyKind::g ? g : g + 0.5 * u * u * x2;
    return true;
}

inline double power_tail_quadrature(const PowerTail& pt, LevyKind kind, double u);

inline double power_tail_integral(const PowerTail& pt, LevyKind kind, double u) {
    const double a = pt.index;
    if (kind == LevyKind::x3)
        require(a > 1.0, errc::non_integrable, "x^3/(1+x^2) is not integrable against a power tail with index <= 1");
    const bool uses_u = kind == LevyKind::g || kind == LevyKind::h;
    if (uses_u && u == 0.0) return 0.0;
    if (double v; power_tail_closed(pt, kind, u, v)) return v;
    return power_tail_quadrature(pt, kind, u);
}

inline double power_tail_quadrature(const PowerTail& pt, LevyKind kind, double u) {
    const double a = pt.index;
    const double ca = pt.scale * a;
    const bool uses_u = kind == LevyKind::g || kind == LevyKind::h;
    if (uses_u && u == 0.0) return 0.0;
    const double um = uses_u ? std::max(1.0, u) : 1.0;
    const double eps = 1e-4 / um;
    const double big = uses_u ? std::max(1e5, 60.0 / u) : 1e5;

    double total = 0.0;
    const auto small = small_x_expansion(kind, u);
    for (int j = 0; j < small.count; ++j) {
        const double p = small.t[j].power;
        total += small.t[j].coef * ca * std::pow(eps, p - a) / (p - a);
    }
    const auto large = large_x_expansion(kind, u);
    for (int j = 0; j < large.count; ++j) {
        const double p = large.t[j].power;
        total += large.t[j].coef * ca * std::pow(big, p - a) / (a - p);
    }
    // x = e^y, F(dx) = c a e^{-a y} dy
    auto integrand = [&](double y) {
        const double x = std::exp(y);
        return levy_kernel_value(kind, x, u) * ca * std::exp(-a * y);
    };
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    total += gk::integrate(integrand, std::log(eps), 0.0, levy_quad_depth, levy_quad_rel_tol);
    total += gk::integrate(integrand, 0.0, std::log(big), levy_quad_depth, levy_quad_rel_tol);
    return total;
}

} // namespace detail

// Integral of kind(x, u) against F.
inline double levy_integral(const LevyMeasure& F, double u, LevyKind kind) {
    require(u >= 0.0 && std::isfinite(u), errc::invalid_argument, "levy_integral requires finite u >= 0");
    double s = 0.0;
    for (const auto& a : F.atom_list()) {
        require(a.x > 0.0, errc::non_integrable, "Levy atom at non-positive location");
        s += a.mass * levy_kernel_value(kind, a.x, u);
    }
    for (const auto& t : F.tails()) {
        require(t.index > 0.0 && t.index < 2.0 && t.scale > 0.0, errc::non_integrable,
                "power tail outside the (1 ^ x^2)-integrable range");
        s += detail::power_tail_integral(t, kind, u);
    }
    return s;
}

} // namespace gwve
