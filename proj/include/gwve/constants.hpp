#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "special_functions.hpp"

namespace gwve {

namespace detail {

// Supremum of f over the box [x0,x1] x [y0,y1]: a coarse grid locates the
// best candidates, then each is refined by repeatedly shrinking a local grid.
template <class F>
double grid_sup(F&& f, double x0, double x1, double y0, double y1, double rel_tol = 1e-9) {
    constexpr int coarse = 128;
    struct Cand {
        double v, x, y;
    };
    std::vector<Cand> cands;
    for (int i = 0; i <= coarse; ++i) {
        const double x = x0 + (x1 - x0) * i / coarse;
        for (int j = 0; j <= coarse; ++j) {
            const double y = y1 == y0 ? y0 : y0 + (y1 - y0) * j / coarse;
            cands.push_back({f(x, y), x, y});
            if (y1 == y0) break;
        }
    }
    std::partial_sort(cands.begin(), cands.begin() + std::min<std::size_t>(4, cands.size()), cands.end(),
                      [](const Cand& a, const Cand& b) { return a.v > b.v; });
    double best = cands.front().v;
    for (std::size_t c = 0; c < std::min<std::size_t>(4, cands.size()); ++c) {
        double cx = cands[c].x, cy = cands[c].y, cv = cands[c].v;
        double hx = 2.0 * (x1 - x0) / coarse, hy = 2.0 * (y1 - y0) / coarse;
        constexpr int local = 8;
        for (int iter = 0; iter < 200 && (hx > 1e-15 * std::max(1.0, std::abs(cx)) || hy > 1e-15 * std::max(1.0, std::abs(cy))); ++iter) {
            const double prev = cv;
            for (int i = -local; i <= local; ++i) {
                const double x = std::clamp(cx + hx * i / local, x0, x1);
                for (int j = -local; j <= local; ++j) {
                    const double y = std::clamp(cy + hy * j / local, y0, y1);
                    const double v = f(x, y);
                    if (v > cv) cv = v, cx = x, cy = y;
                }
            }
            hx *= 0.5, hy *= 0.5;
            if (iter > 8 && std::abs(cv - prev) <= rel_tol * 1e-3 * std::max(1.0, std::abs(cv))) break;
        }
        best = std::max(best, cv);
    }
    return best;
}

// x in [-1, inf) through x = tan(theta), theta in [-pi/4, pi/2)
inline constexpr double theta_max = std::numbers::pi / 2 - 1e-9;

} // namespace detail

// sup over x >= -1, 0 <= lam <= C of 2|g(x,lam)|(1+x^2)/x^2
inline double const_c1_prime(double C) {
    require(C >= 0.0 && std::isfinite(C), errc::invalid_argument, "const_c1 requires C >= 0");
    if (C == 0.0) return 0.0;
    auto f = [](double theta, double lam) {
        const double x = std::tan(theta);
        const double v = lam * x;
        return 2.0 * std::abs(-std::expm1(-v) - lam * lam * phi1(v));
    };
    return detail::grid_sup(f, -std::numbers::pi / 4, detail::theta_max, 0.0, C);
}

inline double const_c1(double C) { return C + const_c1_prime(C); }

// sup over x >= 0 and eta <= y, y' <= T of the normalized difference quotient of h,
// evaluated through its y-derivative (mean value theorem).
inline double const_c2(double eta, double T) {
    require(eta > 0.0 && T > eta && std::isfinite(T), errc::invalid_argument, "const_c2 requires 0 < eta < T");
    auto f = [](double theta, double y) { return std::abs(h_normalized_derivative(std::tan(theta), y)); };
    return detail::grid_sup(f, 0.0, detail::theta_max, eta, T);
}

inline double const_c3(double eta, double T) { return 1.0 + T + const_c2(eta, T); }

} // namespace gwve
