#pragma once

#include <array>
#include <cmath>

namespace gwve {

namespace detail {

// 1/(k+2)! for k = 0..N-1
template <std::size_t N>
constexpr std::array<double, N> inv_factorial_shift2() {
    std::array<double, N> c{};
    long double f = 2.0L;
    for (std::size_t k = 0; k < N; ++k) {
        c[k] = static_cast<double>(1.0L / f);
        f *= static_cast<long double>(k + 3);
    }
    return c;
}

inline constexpr std::size_t phi_series_terms = 20;
inline constexpr auto phi_coef = inv_factorial_shift2<phi_series_terms>();

} // namespace detail

// Below this |v| the power series is used. With 20 terms the truncation error
// at |v| = 1 is below 1e-21, so both branches agree to rounding.
inline constexpr double phi_series_switch = 1.0;

// (e^{-v} - 1 + v) / v^2
inline double phi1(double v) {
    if (std::abs(v) < phi_series_switch) {
        double acc = 0.0;
        for (std::size_t k = detail::phi_series_terms; k-- > 0;) acc = acc * (-v) + detail::phi_coef[k];
        return acc;
    }
    return (std::expm1(-v) + v) / (v * v);
}

// (-e^{-v} + 1 - v + v^2/2) / v^2
inline double phi2(double v) {
    if (std::abs(v) < phi_series_switch) {
        double acc = 0.0;
        for (std::size_t k = detail::phi_series_terms; k-- > 1;) acc = acc * (-v) + detail::phi_coef[k];
        return acc * v;
    }
    return (-std::expm1(-v) - v + 0.5 * v * v) / (v * v);
}

inline double eval_phi(int which, double v) { return which == 1 ? phi1(v) : phi2(v); }

// g(x, lam) = 1 - e^{-lam x} - lam x / (1 + x^2)
inline double eval_g(double x, double lam) {
    const double v = lam * x;
    const double x2 = x * x;
    if (std::abs(v) < phi_series_switch) return x2 / (1.0 + x2) * (-std::expm1(-v) - lam * lam * phi1(v));
    return -std::expm1(-v) - v / (1.0 + x2);
}

// h(x, lam) = g(x, lam) + (lam x)^2 / (2 (1 + x^2))
inline double eval_h(double x, double lam) {
    const double v = lam * x;
    const double x2 = x * x;
    if (std::abs(v) < phi_series_switch) return x2 / (1.0 + x2) * (-std::expm1(-v) + lam * lam * phi2(v));
    return -std::expm1(-v) + (0.5 * v * v - v) / (1.0 + x2);
}

// d/dy of h(x, y) (1 + x^2) / x^2, for x > 0.
inline double h_normalized_derivative(double x, double y) {
    const double w = y * x;
    return x * std::exp(-w) + y * w * phi1(w);
}

} // namespace gwve
