#pragma once

// Seeded random-case runner for property tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gwve/environment.hpp"
#include "gwve/measures.hpp"

namespace prop {

inline constexpr std::size_t min_cases = 200;

using Rng = std::mt19937_64;

// Runs body(rng) for every case with its own generator; stops at the first failure.
template <class Body>
::testing::AssertionResult for_all(std::uint64_t seed, Body&& body, std::size_t cases = min_cases) {
    for (std::size_t i = 0; i < cases; ++i) {
        Rng rng(seed * 0x9e3779b97f4a7c15ULL + i);
        const ::testing::AssertionResult r = body(rng);
        if (!r) return ::testing::AssertionFailure() << "case " << i << " of " << cases << " (seed " << seed << "): " << r.message();
    }
    return ::testing::AssertionSuccess();
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

inline std::uint64_t integer(Rng& rng, std::uint64_t lo, std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng); }

inline bool coin(Rng& rng, double p = 0.5) { return uniform(rng, 0.0, 1.0) < p; }

// Finite pmf on up to `support` distinct values in [0, max_k].
inline gwve::FinitePMF finite_pmf(Rng& rng, std::size_t support, std::uint64_t max_k) {
    std::vector<std::uint64_t> ks;
    const std::size_t m = integer(rng, 1, support);
    while (ks.size() < m) {
        const auto k = integer(rng, 0, max_k);
        if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    }
    std::sort(ks.begin(), ks.end());
    std::vector<double> w(m);
    double s = 0.0;
    for (auto& x : w) s += (x = uniform(rng, 0.05, 1.0));
    gwve::FinitePMF f;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double p = j + 1 == m ? 1.0 - acc : w[j] / s;
        f.pmf.push_back({ks[j], p});
        acc += p;
    }
    return f;
}

// Critical pmf on {0, 1, k}.
inline gwve::FinitePMF critical_pmf(Rng& rng) {
    const auto k = integer(rng, 2, 6);
    const double pk = uniform(rng, 0.02, 1.0 / static_cast<double>(k));
    const double p0 = pk * static_cast<double>(k - 1);
    return {{{0, p0}, {1, 1.0 - p0 - pk}, {k, pk}}};
}

inline gwve::OffspringLaw any_law(Rng& rng, double n) {
    switch (integer(rng, 0, 5)) {
    case 0: return finite_pmf(rng, 4, 8);
    case 1: return gwve::Poisson{uniform(rng, 0.2, 3.0)};
    case 2: return gwve::Dirac{integer(rng, 0, 3)};
    case 3: return gwve::Bernoulli01{uniform(rng, 0.0, 1.0)};
    case 4: return gwve::PoissonizedSite{std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n))};
    default: {
        const double a = uniform(rng, 1.1, 2.0);
        return gwve::StablePGF{a, uniform(rng, 0.05, 1.0 / a)};
    }
    }
}

// Environment with uniform rate and a few blocks of random laws.
inline gwve::EnvironmentModel random_env(Rng& rng, bool finite_only = false) {
    const double n = std::round(log_uniform(rng, 2.0, 500.0));
    const double rate = std::round(log_uniform(rng, 2.0, 200.0));
    std::vector<gwve::Block> blocks;
    const std::size_t nb = integer(rng, 1, 4);
    std::uint64_t total = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        const auto c = integer(rng, 1, static_cast<std::uint64_t>(rate));
        blocks.push_back({c, finite_only ? gwve::OffspringLaw{finite_pmf(rng, 4, 5)} : any_law(rng, n)});
        total += c;
    }
    if (total < static_cast<std::uint64_t>(2 * rate)) blocks.push_back({static_cast<std::uint64_t>(2 * rate) - total, gwve::OffspringLaw{critical_pmf(rng)}});
    return gwve::EnvironmentModel(n, gwve::UniformRate{rate}, blocks);
}

inline gwve::LevyMeasure levy(Rng& rng) {
    switch (integer(rng, 0, 3)) {
    case 0: return {};
    case 1: return gwve::LevyMeasure::dirac(log_uniform(rng, 0.1, 5.0), uniform(rng, 0.05, 1.0));
    case 2: return gwve::LevyMeasure::power_tail(uniform(rng, 0.3, 1.9), uniform(rng, 0.02, 0.3));
    default: return gwve::LevyMeasure::dirac(log_uniform(rng, 0.1, 5.0), uniform(rng, 0.05, 1.0)) +
                    gwve::LevyMeasure::power_tail(uniform(rng, 1.1, 1.9), uniform(rng, 0.02, 0.2));
    }
}

inline double x2_mass(const gwve::LevyMeasure& F) { return F.empty() ? 0.0 : gwve::levy_integral(F, 0.0, gwve::LevyKind::x2); }

// Valid triplet on (0, T]: piecewise alpha with atoms > -1, beta with nu-induced part.
inline gwve::LimitTriplet random_triplet(Rng& rng, double T, bool with_nu = true, bool alpha_atoms = true) {
    using namespace gwve;
    LimitTriplet trip;
    std::vector<double> bps{0.0};
    const std::size_t pieces = integer(rng, 1, 3);
    for (std::size_t k = 1; k < pieces; ++k) bps.push_back(T * static_cast<double>(k) / static_cast<double>(pieces) + uniform(rng, -0.1, 0.1) * T / pieces);
    std::vector<double> ar, br;
    for (std::size_t k = 0; k < pieces; ++k) ar.push_back(uniform(rng, -1.0, 1.0));

    std::vector<HomogeneousPiece> hom;
    std::vector<FixedAtom> fixed;
    std::vector<double> induced(pieces, 0.0);
    if (with_nu) {
        for (std::size_t k = 0; k < pieces; ++k) {
            if (!coin(rng, 0.6)) continue;
            const double hi = k + 1 < pieces ? bps[k + 1] : inf;
            hom.push_back({bps[k], hi, levy(rng)});
            induced[k] = 0.5 * x2_mass(hom.back().F);
        }
    }
    for (std::size_t k = 0; k < pieces; ++k) br.push_back(induced[k] + uniform(rng, 0.0, 0.8));

    std::vector<Atom> aa, ba;
    if (alpha_atoms || with_nu) {
        const std::size_t na = integer(rng, 0, 2);
        std::vector<double> times;
        for (std::size_t k = 0; k < na; ++k) times.push_back(std::round(uniform(rng, 0.05, 0.95) * T * 64.0) / 64.0);
        times = detail::sorted_unique(times);
        for (double tau : times) {
            if (std::find(bps.begin(), bps.end(), tau) != bps.end()) continue;
            if (alpha_atoms) aa.push_back({tau, uniform(rng, -0.7, 1.0)});
            if (with_nu && coin(rng)) {
                const auto G = LevyMeasure::dirac(log_uniform(rng, 0.2, 3.0), uniform(rng, 0.1, 1.0));
                fixed.push_back({tau, G});
                ba.push_back({tau, 0.5 * x2_mass(G)});
            }
        }
    }
    trip.alpha = PiecewiseSignedMeasure(bps, ar, aa);
    trip.beta = MonotoneMeasure(bps, br, ba);
    if (!hom.empty() || !fixed.empty()) trip.nu = LevyKernel(hom, fixed);
    return trip;
}

} // namespace prop
