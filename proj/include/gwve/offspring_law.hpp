#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "special_functions.hpp"

namespace gwve {

struct FinitePMF {
    std::vector<std::pair<std::uint64_t, double>> pmf; // (k, P(xi = k))
    bool operator==(const FinitePMF&) const = default;
};
struct Poisson {
    double mean;
    bool operator==(const Poisson&) const = default;
};
struct Dirac {
    std::uint64_t k;
    bool operator==(const Dirac&) const = default;
};
// (1-p) delta_0 + p delta_1
struct Bernoulli01 {
    double p;
    bool operator==(const Bernoulli01&) const = default;
};
// (1 - 1/m) delta_0 + (1/m) delta_m
struct PoissonizedSite {
    std::uint64_t m;
    bool operator==(const PoissonizedSite&) const = default;
};
// f(s) = s + c (1-s)^a
struct StablePGF {
    double a;
    double c;
    bool operator==(const StablePGF&) const = default;
};

using OffspringLaw = std::variant<FinitePMF, Poisson, Dirac, Bernoulli01, PoissonizedSite, StablePGF>;

inline constexpr double law_sum_tol = 1e-12;

inline void validate_law(const OffspringLaw& law) {
    std::visit(
        [](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, FinitePMF>) {
                require(!l.pmf.empty(), errc::invalid_argument, "finite pmf is empty");
                double s = 0.0;
                for (std::size_t k = 0; k < l.pmf.size(); ++k) {
                    require(l.pmf[k].second >= 0.0 && std::isfinite(l.pmf[k].second), errc::invalid_argument,
                            "pmf probabilities must be finite and >= 0");
                    if (k > 0) require(l.pmf[k].first > l.pmf[k - 1].first, errc::invalid_argument, "pmf support must be strictly increasing");
                    s += l.pmf[k].second;
                }
                require(std::abs(s - 1.0) <= law_sum_tol, errc::invalid_argument, "pmf probabilities must sum to 1");
            } else if constexpr (std::is_same_v<T, Poisson>) {
                require(l.mean > 0.0 && std::isfinite(l.mean), errc::invalid_argument, "Poisson mean must be > 0");
            } else if constexpr (std::is_same_v<T, Bernoulli01>) {
                require(l.p >= 0.0 && l.p <= 1.0, errc::invalid_argument, "Bernoulli parameter must lie in [0,1]");
            } else if constexpr (std::is_same_v<T, PoissonizedSite>) {
                require(l.m >= 1, errc::invalid_argument, "poissonized site size must be >= 1");
            } else if constexpr (std::is_same_v<T, StablePGF>) {
                require(l.a > 1.0 && l.a <= 2.0, errc::invalid_argument, "stable pgf index must lie in (1,2]");
                require(l.c > 0.0 && l.c <= 1.0 / l.a, errc::invalid_argument, "stable pgf constant must lie in (0,1/a]");
            }
        },
        law);
}

inline std::string describe(const OffspringLaw& law) {
    return std::visit(
        [](const auto& l) -> std::string {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, FinitePMF>) {
                std::string s = "finite_pmf{";
                for (std::size_t k = 0; k < l.pmf.size(); ++k)
                    s += (k ? ", " : "") + std::to_string(l.pmf[k].first) + ":" + fmt_double(l.pmf[k].second);
                return s + "}";
            } else if constexpr (std::is_same_v<T, Poisson>) {
                return "poisson(" + fmt_double(l.mean) + ")";
            } else if constexpr (std::is_same_v<T, Dirac>) {
                return "dirac(" + std::to_string(l.k) + ")";
            } else if constexpr (std::is_same_v<T, Bernoulli01>) {
                return "bernoulli01(" + fmt_double(l.p) + ")";
            } else if constexpr (std::is_same_v<T, PoissonizedSite>) {
                return "poissonized_site(" + std::to_string(l.m) + ")";
            } else {
                return "stable_pgf(" + fmt_double(l.a) + ", " + fmt_double(l.c) + ")";
            }
        },
        law);
}

struct TruncationPolicy {
    double mass_budget = 1e-14;       // unbounded pmfs keep cumulative mass >= 1 - budget
    std::size_t max_atoms = 1u << 22; // table size cap
    std::uint64_t stable_exact = 1u << 16;
    double stable_bucket_ratio = 1.02;
};

// One entry of a pmf table. Exact atoms have lo == hi == position. Tail
// buckets of heavy-tailed laws cover the integers in [lo, hi] and sit at
// their conditional mean.
struct PmfEntry {
    double position;
    double p;
    std::uint64_t lo;
    std::uint64_t hi;
};

namespace detail {

// Stable pgf tail identities (a in (1,2), where Gamma(-a) > 0):
//   P(xi >= k)      = c Gamma(k-a) / (a Gamma(-a) Gamma(k))           k >= 2
//   E(xi; xi >= k)  = c Gamma(k-a) / ((a-1) Gamma(-a) Gamma(k-1))     k >= 2
inline double stable_tail(double a, double c, double k) {
    return c * std::exp(std::lgamma(k - a) - std::lgamma(k) - std::lgamma(-a)) / a;
}

inline double stable_tail_mean(double a, double c, double k) {
    return c * std::exp(std::lgamma(k - a) - std::lgamma(k - 1.0) - std::lgamma(-a)) / (a - 1.0);
}

inline std::vector<PmfEntry> stable_pmf(const StablePGF& l, const TruncationPolicy& pol) {
    const long double a = l.a, c = l.c;
    std::vector<PmfEntry> out;
    if (l.a == 2.0) {
        out.push_back({0.0, static_cast<double>(c), 0, 0});
        out.push_back({1.0, static_cast<double>(1.0L - 2.0L * c), 1, 1});
        out.push_back({2.0, static_cast<double>(c), 2, 2});
        return out;
    }
    // binomial-series coefficients of (1-s)^a: w_0 = 1, w_k = w_{k-1} (k-1-a)/k
    long double w = 1.0L;
    out.push_back({0.0, static_cast<double>(c), 0, 0});
    w = -a;
    out.push_back({1.0, static_cast<double>(1.0L + c * w), 1, 1});
    std::uint64_t k = 2;
    for (; k < pol.stable_exact; ++k) {
        w *= (static_cast<long double>(k) - 1.0L - a) / static_cast<long double>(k);
        out.push_back({static_cast<double>(k), static_cast<double>(c * w), k, k});
    }
    // geometric buckets driven by the exact tail and tail-mean identities
    double lo = static_cast<double>(k);
    double T_lo = stable_tail(l.a, l.c, lo), M_lo = stable_tail_mean(l.a, l.c, lo);
    while (T_lo > pol.mass_budget) {
        require(out.size() < pol.max_atoms, errc::truncation_loss, "stable pgf tail exceeds the atom cap");
        const double hi = std::floor(lo * pol.stable_bucket_ratio) + 1.0; // bucket covers [lo, hi)
        const double T_hi = stable_tail(l.a, l.c, hi), M_hi = stable_tail_mean(l.a, l.c, hi);
        const double mass = T_lo - T_hi;
        out.push_back({(M_lo - M_hi) / mass, mass, static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi - 1.0)});
        lo = hi, T_lo = T_hi, M_lo = M_hi;
    }
    // remaining tail placed at its conditional mean (keeps mass and mean exact)
    out.push_back({M_lo / T_lo, T_lo, static_cast<std::uint64_t>(lo), std::numeric_limits<std::uint64_t>::max()});
    return out;
}

inline std::vector<PmfEntry> poisson_pmf(double mean, const TruncationPolicy& pol) {
    const double mode = std::floor(mean);
    const double log_mode = -mean + mode * std::log(mean) - std::lgamma(mode + 1.0);
    std::vector<double> down, up;
    // walk outward from the mode until the remaining mass is negligible
    double lp = log_mode;
    for (double k = mode; k >= 0.0; k -= 1.0) {
        down.push_back(std::exp(lp));
        if (k > 0.0) lp += std::log(k / mean);
        if (lp < log_mode - 80.0 && std::exp(lp) * (k + 1.0) < pol.mass_budget * 1e-3) break;
    }
    lp = log_mode;
    for (double k = mode + 1.0;; k += 1.0) {
        lp += std::log(mean / k);
        const double p = std::exp(lp);
        up.push_back(p);
        require(down.size() + up.size() < pol.max_atoms, errc::truncation_loss, "Poisson pmf exceeds the atom cap");
        if (k > mean && p * (k + 1.0) / (k + 1.0 - mean) < pol.mass_budget * 1e-3) break;
    }
    std::vector<PmfEntry> out;
    const std::uint64_t first = static_cast<std::uint64_t>(mode) + 1 - down.size();
    for (std::size_t j = down.size(); j-- > 0;) {
        const std::uint64_t kk = first + (down.size() - 1 - j);
        out.push_back({static_cast<double>(kk), down[j], kk, kk});
    }
    for (std::size_t j = 0; j < up.size(); ++j) {
        const std::uint64_t kk = static_cast<std::uint64_t>(mode) + 1 + j;
        out.push_back({static_cast<double>(kk), up[j], kk, kk});
    }
    // cut the far right tail at cumulative mass 1 - budget, residual to the last atom
    long double cum = 0.0L;
    std::size_t keep = out.size();
    for (std::size_t j = 0; j < out.size(); ++j) {
        cum += out[j].p;
        if (cum >= 1.0L - pol.mass_budget) {
            keep = j + 1;
            break;
        }
    }
    out.resize(keep);
    long double total = 0.0L;
    for (const auto& e : out) total += e.p;
    out.back().p += static_cast<double>(1.0L - total);
    return out;
}

} // namespace detail

// pmf table sorted by position.
inline std::vector<PmfEntry> law_pmf(const OffspringLaw& law, const TruncationPolicy& pol = {}) {
    validate_law(law);
    return std::visit(
        [&](const auto& l) -> std::vector<PmfEntry> {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, FinitePMF>) {
                std::vector<PmfEntry> out;
                for (auto [k, p] : l.pmf)
                    if (p > 0.0) out.push_back({static_cast<double>(k), p, k, k});
                return out;
            } else if constexpr (std::is_same_v<T, Poisson>) {
                return detail::poisson_pmf(l.mean, pol);
            } else if constexpr (std::is_same_v<T, Dirac>) {
                return {{static_cast<double>(l.k), 1.0, l.k, l.k}};
            } else if constexpr (std::is_same_v<T, Bernoulli01>) {
                std::vector<PmfEntry> out;
                if (l.p < 1.0) out.push_back({0.0, 1.0 - l.p, 0, 0});
                if (l.p > 0.0) out.push_back({1.0, l.p, 1, 1});
                return out;
            } else if constexpr (std::is_same_v<T, PoissonizedSite>) {
                if (l.m == 1) return {{1.0, 1.0, 1, 1}};
                const double q = 1.0 / static_cast<double>(l.m);
                return {{0.0, 1.0 - q, 0, 0}, {static_cast<double>(l.m), q, l.m, l.m}};
            } else {
                return detail::stable_pmf(l, pol);
            }
        },
        law);
}

// log E[s^xi] with s = e^{-lam/n}; exact pgf where available.
inline double log_pgf(const OffspringLaw& law, const std::vector<PmfEntry>& table, double lam, double n) {
    const double r = lam / n;
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                return l.mean * std::expm1(-r);
            } else if constexpr (std::is_same_v<T, Dirac>) {
                return l.k == 0 ? 0.0 : -static_cast<double>(l.k) * r;
            } else if constexpr (std::is_same_v<T, Bernoulli01>) {
                return std::log((1.0 - l.p) + l.p * std::exp(-r));
            } else if constexpr (std::is_same_v<T, PoissonizedSite>) {
                const double q = 1.0 / static_cast<double>(l.m);
                return std::log((1.0 - q) + q * std::exp(-r * static_cast<double>(l.m)));
            } else if constexpr (std::is_same_v<T, StablePGF>) {
                const double s = std::exp(-r);
                return std::log(s + l.c * std::pow(-std::expm1(-r), l.a));
            } else {
                // position 0 stays finite at lam = inf
                const auto term = [r](const PmfEntry& e) { return e.position == 0 ? std::log(e.p) : std::log(e.p) - e.position * r; };
                double mx = -std::numeric_limits<double>::infinity();
                for (const auto& e : table) mx = std::max(mx, term(e));
                if (!std::isfinite(mx)) return mx;
                double s = 0.0;
                for (const auto& e : table) s += std::exp(term(e) - mx);
                return mx + std::log(s);
            }
        },
        law);
}

// D(lam) = E[exp(-lam (xi-1)/n)] - 1, written to avoid cancellation for small lam/n.
inline double shifted_laplace_minus_one(const OffspringLaw& law, const std::vector<PmfEntry>& table, double lam, double n) {
    const double r = lam / n;
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                return std::expm1((1.0 - l.mean) * r + l.mean * r * r * phi1(r));
            } else if constexpr (std::is_same_v<T, Dirac>) {
                return std::expm1(-(static_cast<double>(l.k) - 1.0) * r);
            } else if constexpr (std::is_same_v<T, Bernoulli01>) {
                return (1.0 - l.p) * std::expm1(r);
            } else if constexpr (std::is_same_v<T, PoissonizedSite>) {
                const double q = 1.0 / static_cast<double>(l.m);
                return (1.0 - q) * std::expm1(r) + q * std::expm1(-r * (static_cast<double>(l.m) - 1.0));
            } else if constexpr (std::is_same_v<T, StablePGF>) {
                return l.c * std::exp(r) * std::pow(-std::expm1(-r), l.a);
            } else {
                double s = 0.0;
                for (const auto& e : table) s += e.p * std::expm1(-(e.position - 1.0) * r);
                return s;
            }
        },
        law);
}

} // namespace gwve
