#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "environment.hpp"
#include "feller_csbp.hpp"
#include "measures.hpp"

namespace gwve {

enum class ScenarioKind { constant_gw, feller_varying, catastrophe, poisson_site, bottleneck, random_two_law };

inline const char* to_string(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::constant_gw: return "ConstantGW";
    case ScenarioKind::feller_varying: return "FellerVarying";
    case ScenarioKind::catastrophe: return "Catastrophe";
    case ScenarioKind::poisson_site: return "PoissonSite";
    case ScenarioKind::bottleneck: return "Bottleneck";
    case ScenarioKind::random_two_law: return "RandomTwoLaw";
    }
    return "?";
}

inline ScenarioKind scenario_kind_from(const std::string& s) {
    for (auto k : {ScenarioKind::constant_gw, ScenarioKind::feller_varying, ScenarioKind::catastrophe, ScenarioKind::poisson_site,
                   ScenarioKind::bottleneck, ScenarioKind::random_two_law})
        if (s == to_string(k)) return k;
    throw error(errc::unknown_kind, "unknown scenario kind '" + s + "'");
}

// Parameters of every kind; each kind reads only its own fields.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::constant_gw;
    std::vector<double> n_grid{1e2, 1e3, 1e4};
    double horizon = 2.0; // environment covers [0, horizon]

    // ConstantGW
    OffspringLaw law = FinitePMF{{{0, 0.5}, {2, 0.5}}};

    // FellerVarying, and the Feller base of Catastrophe and PoissonSite:
    // alpha and beta rates on (breakpoints[k], breakpoints[k+1]], last one open-ended
    std::vector<double> breakpoints{0.0};
    std::vector<double> alpha_rates{0.0};
    std::vector<double> beta_rates{0.5};

    // Catastrophe and PoissonSite
    double t0 = 1.0;
    double shift = -0.5; // Catastrophe mean 1 + shift at t0

    // Bottleneck: p_n = n^{-p_exponent}; base law StablePGF(stable_a, stable_c)
    double p_exponent = 2.0;
    double stable_a = 1.5;
    double stable_c = 1.0 / 3.0;

    // RandomTwoLaw: Gamma^{(j)}_n = n^{gamma_exponent_j}, law 1 picked with probability p1
    OffspringLaw law1 = FinitePMF{{{0, 0.5}, {2, 0.5}}};
    OffspringLaw law2 = FinitePMF{{{0, 0.25}, {1, 0.5}, {2, 0.25}}};
    double p1 = 1.0 / 3.0;
    double gamma_exponent1 = 1.0;
    double gamma_exponent2 = 1.0;
    std::uint64_t seed = 1;

    void validate() const {
        require(!n_grid.empty(), errc::invalid_argument, "n_grid must not be empty");
        for (std::size_t k = 0; k < n_grid.size(); ++k) {
            require(n_grid[k] >= 1.0, errc::invalid_argument, "n values must be >= 1");
            if (k > 0) require(n_grid[k] > n_grid[k - 1], errc::invalid_argument, "n_grid must be strictly increasing");
        }
        require(horizon > 0.0 && std::isfinite(horizon), errc::invalid_argument, "horizon must be positive");
        require(breakpoints.size() == alpha_rates.size() && breakpoints.size() == beta_rates.size(), errc::invalid_argument,
                "breakpoints, alpha_rates and beta_rates need equal lengths");
        require(!breakpoints.empty() && breakpoints.front() == 0.0, errc::invalid_argument, "breakpoints must start at 0");
        for (double b : beta_rates) require(b >= 0.0, errc::invalid_argument, "beta rates must be >= 0");
        if (kind == ScenarioKind::catastrophe || kind == ScenarioKind::poisson_site)
            require(t0 > 0.0 && t0 <= horizon, errc::invalid_argument, "t0 must lie in (0, horizon]");
        if (kind == ScenarioKind::catastrophe) require(shift >= -1.0 && shift <= 1.0, errc::invalid_argument, "shift must lie in [-1, 1]");
        if (kind == ScenarioKind::bottleneck) {
            require(p_exponent > 0.0, errc::invalid_argument, "p_exponent must be positive");
            require(stable_a > 1.0 && stable_a < 2.0, errc::invalid_argument, "bottleneck base law needs index in (1,2)");
            require(horizon > 2.0, errc::invalid_argument, "bottleneck horizon must exceed 2");
        }
        if (kind == ScenarioKind::random_two_law) require(p1 >= 0.0 && p1 <= 1.0, errc::invalid_argument, "p1 must lie in [0, 1]");
    }
};

struct Expectations {
    bool conservative = true;
    std::optional<double> bottleneck; // time of the last bottleneck, if any
    std::string note;
};

struct ScenarioInstance {
    EnvironmentModel env;
    LimitTriplet trip;
    Expectations expect;
};

// Characteristic (b, c, F) of a CSBP whose mechanism compensates jumps with x 1{x <= 1}.
struct Characteristic {
    double b = 0.0;
    double c = 0.0;
    LevyMeasure F;
};

inline BranchingMechanism to_mechanism(const Characteristic& ch) { return {drift_from_unit_truncation(ch.b, ch.F), 0.5 * ch.c, ch.F}; }

inline Characteristic to_characteristic(const BranchingMechanism& m) { return {drift_to_unit_truncation(m.a, m.F), 2.0 * m.b_tilde, m.F}; }

enum class Regime { first, second, balanced };

struct RegimeResult {
    Regime regime;
    double ell = 0.0; // limit ratio in the balanced case
    std::function<double(double)> Gamma;
    std::string gamma_rule; // "Gamma1/p1" or "Gamma2/p2"
    Characteristic merged;
};

// Chooses the time scale min_j Gamma^{(j)}_n / p^{(j)}_n from the trend of
// r_n = Gamma1 p2 / (Gamma2 p1) over the probe grid.
inline RegimeResult regime_select(const std::function<double(double)>& G1, const std::function<double(double)>& p1, const Characteristic& c1,
                                  const std::function<double(double)>& G2, const std::function<double(double)>& p2, const Characteristic& c2,
                                  const std::vector<double>& n_probe) {
    require(n_probe.size() >= 3, errc::invalid_argument, "regime selection needs at least three probe values of n");
    std::vector<double> r;
    for (double n : n_probe) {
        const double v = G1(n) * p2(n) / (G2(n) * p1(n));
        require(std::isfinite(v) && v > 0.0, errc::unclassifiable, "ratio Gamma1 p2 / (Gamma2 p1) is not positive and finite at n = " + fmt_double(n));
        r.push_back(std::log(v));
    }
    const std::size_t m = r.size();
    std::vector<double> d;
    for (std::size_t k = 1; k < m; ++k) d.push_back(r[k] - r[k - 1]);
    RegimeResult res;
    const bool settling = std::abs(d.back()) <= 1e-3 && std::abs(d.back()) <= std::abs(d.front()) + 1e-15;
    if (settling) {
        res.regime = Regime::balanced;
        res.ell = std::exp(r.back());
        res.Gamma = [G1, p1](double n) { return G1(n) / p1(n); };
        res.gamma_rule = "Gamma1/p1";
        res.merged = {c1.b + res.ell * c2.b, c1.c + res.ell * c2.c, c1.F + c2.F.scaled(res.ell)};
        return res;
    }
    const bool down = std::all_of(d.begin(), d.end(), [](double x) { return x < 0.0; });
    const bool up = std::all_of(d.begin(), d.end(), [](double x) { return x > 0.0; });
    // require a total change of at least a factor e across the grid
    if (down && r.front() - r.back() >= 1.0) {
        res.regime = Regime::first;
        res.Gamma = [G1, p1](double n) { return G1(n) / p1(n); };
        res.gamma_rule = "Gamma1/p1";
        res.merged = c1;
        return res;
    }
    if (up && r.back() - r.front() >= 1.0) {
        res.regime = Regime::second;
        res.Gamma = [G2, p2](double n) { return G2(n) / p2(n); };
        res.gamma_rule = "Gamma2/p2";
        res.merged = c2;
        return res;
    }
    throw error(errc::unclassifiable, "trend of Gamma1 p2 / (Gamma2 p1) over the probe grid is neither settling nor monotone");
}

// I.i.d. choice of law1 (probability p1) or law2 for each of floor(Gamma T) generations.
inline EnvironmentModel realize_random_env(const OffspringLaw& law1, const OffspringLaw& law2, double p1, double p2, double n, double Gamma,
                                           double horizon, std::uint64_t seed) {
    require(std::abs(p1 + p2 - 1.0) <= 1e-12 && p1 >= 0.0 && p2 >= 0.0, errc::invalid_argument, "p1 + p2 must equal 1");
    require(Gamma > 0.0 && horizon > 0.0, errc::invalid_argument, "Gamma and horizon must be positive");
    const auto G = static_cast<std::uint64_t>(std::floor(Gamma * horizon * (1.0 + 1e-12)));
    require(G >= 1, errc::invalid_argument, "horizon covers no generation");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution pick(p1);
    std::vector<Block> blocks;
    for (std::uint64_t i = 0; i < G; ++i) {
        const bool first = pick(rng);
        const OffspringLaw& law = first ? law1 : law2;
        if (!blocks.empty() && blocks.back().law == law)
            ++blocks.back().count;
        else
            blocks.push_back({1, law});
    }
    return EnvironmentModel(n, UniformRate{Gamma}, std::move(blocks));
}

namespace detail {

inline double law_variance(const OffspringLaw& law) {
    return std::visit(
        [](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, FinitePMF>) {
                double m = 0.0, m2 = 0.0;
                for (auto [k, p] : l.pmf) m += p * static_cast<double>(k), m2 += p * static_cast<double>(k) * static_cast<double>(k);
                return m2 - m * m;
            } else if constexpr (std::is_same_v<T, Poisson>) {
                return l.mean;
            } else if constexpr (std::is_same_v<T, Dirac>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, Bernoulli01>) {
                return l.p * (1.0 - l.p);
            } else if constexpr (std::is_same_v<T, PoissonizedSite>) {
                return static_cast<double>(l.m) - 1.0;
            } else {
                return l.a == 2.0 ? 2.0 * l.c : inf;
            }
        },
        law);
}

// Jump measure of the stable limit of StablePGF(a, c) on time scale n^{a-1}.
inline LevyMeasure stable_levy(double a, double c) { return LevyMeasure::power_tail(a, c / (a * std::tgamma(-a))); }

// Per-unit-time characteristics of the critical stable limit.
inline BranchingMechanism stable_mechanism(double a, double c) {
    const auto F = stable_levy(a, c);
    return {-levy_integral(F, 0.0, LevyKind::x3), 0.0, F};
}

// Law on {0, 1, K} with mean m and variance v; K depends only on v so that it
// does not change along an n-grid.
inline OffspringLaw feller_law(double m, double v) {
    const double K = 2.0 + std::floor(v + 1e-12);
    const double pK = (v + m * m - m) / (K * (K - 1.0));
    const double p1 = m - K * pK, p0 = 1.0 - p1 - pK;
    require(pK >= -1e-15 && p1 >= -1e-15 && p0 >= -1e-15, errc::invalid_argument,
            "n is too small for the requested drift and variance (law on {0,1,K} would have negative weights)");
    FinitePMF pmf;
    if (p0 > 0.0) pmf.pmf.push_back({0, std::max(0.0, p0)});
    if (p1 > 0.0) pmf.pmf.push_back({1, std::max(0.0, p1)});
    if (pK > 0.0) pmf.pmf.push_back({static_cast<std::uint64_t>(K), std::max(0.0, pK)});
    double s = 0.0;
    for (auto& e : pmf.pmf) s += e.second;
    for (auto& e : pmf.pmf) e.second /= s;
    return pmf;
}

// Piecewise-constant Feller environment on Gamma_n = n, generations [0, G).
// Special generations replace the base law at the given indices.
inline std::vector<Block> feller_blocks(const ScenarioSpec& sp, double n, std::uint64_t G,
                                        const std::vector<std::pair<std::uint64_t, OffspringLaw>>& special = {}) {
    std::vector<Block> blocks;
    auto push = [&](std::uint64_t count, const OffspringLaw& law) {
        if (count == 0) return;
        if (!blocks.empty() && blocks.back().law == law)
            blocks.back().count += count;
        else
            blocks.push_back({count, law});
    };
    std::uint64_t i = 0;
    std::size_t next_special = 0;
    for (std::size_t k = 0; k < sp.breakpoints.size() && i < G; ++k) {
        const double hi_t = k + 1 < sp.breakpoints.size() ? sp.breakpoints[k + 1] : inf;
        const std::uint64_t hi = std::isfinite(hi_t) ? std::min<std::uint64_t>(G, static_cast<std::uint64_t>(std::llround(std::floor(n * hi_t + 1e-9)))) : G;
        const auto law = feller_law(1.0 + sp.alpha_rates[k] / n, 2.0 * sp.beta_rates[k]);
        while (i < hi) {
            std::uint64_t stop = hi;
            if (next_special < special.size() && special[next_special].first < hi) stop = special[next_special].first;
            push(stop - i, law);
            i = stop;
            if (next_special < special.size() && special[next_special].first == i && i < hi) {
                push(1, special[next_special].second);
                ++i;
                ++next_special;
            }
        }
    }
    return blocks;
}

inline LimitTriplet feller_triplet(const ScenarioSpec& sp) {
    LimitTriplet trip;
    trip.alpha = PiecewiseSignedMeasure(sp.breakpoints, sp.alpha_rates);
    trip.beta = MonotoneMeasure(sp.breakpoints, sp.beta_rates);
    return trip;
}

inline std::uint64_t generations_to(double Gamma, double t) { return static_cast<std::uint64_t>(std::floor(Gamma * t * (1.0 + 1e-12))); }

inline double power_rule(double e, double n) { return std::pow(n, e); }

} // namespace detail

// Environment at scale n together with its limit triplet.
inline ScenarioInstance build(const ScenarioSpec& sp, double n) {
    sp.validate();
    require(n >= 1.0, errc::invalid_argument, "n must be >= 1");
    switch (sp.kind) {
    case ScenarioKind::constant_gw: {
        validate_law(sp.law);
        const auto* st = std::get_if<StablePGF>(&sp.law);
        if (st && st->a < 2.0) {
            const double Gamma = std::pow(n, st->a - 1.0);
            const auto G = detail::generations_to(Gamma, sp.horizon);
            const auto mech = detail::stable_mechanism(st->a, st->c);
            return {EnvironmentModel(n, UniformRate{Gamma}, {{G, sp.law}}), constant_triplet(mech),
                    {true, std::nullopt, "critical stable law on time scale n^(a-1)"}};
        }
        const PreparedLaw probe(sp.law, n);
        require(std::abs(probe.mean() - 1.0) <= 1e-12, errc::invalid_argument, "ConstantGW needs a critical law (mean 1)");
        const double var = detail::law_variance(sp.law);
        require(std::isfinite(var), errc::invalid_argument, "ConstantGW with a finite-variance time scale needs finite variance");
        const auto G = detail::generations_to(n, sp.horizon);
        LimitTriplet trip;
        trip.beta = MonotoneMeasure::constant_rate(0.5 * var);
        return {EnvironmentModel(n, UniformRate{n}, {{G, sp.law}}), trip, {true, std::nullopt, "critical finite-variance law on time scale n"}};
    }
    case ScenarioKind::feller_varying: {
        const auto G = detail::generations_to(n, sp.horizon);
        return {EnvironmentModel(n, UniformRate{n}, detail::feller_blocks(sp, n, G)), detail::feller_triplet(sp),
                {true, std::nullopt, "Feller diffusion with piecewise-constant drift and diffusion"}};
    }
    case ScenarioKind::catastrophe: {
        const auto G = detail::generations_to(n, sp.horizon);
        const std::uint64_t g0 = detail::generations_to(n, sp.t0);
        require(g0 >= 1, errc::invalid_argument, "t0 precedes the first generation at this n");
        const double p2 = 0.5 * (1.0 + sp.shift);
        FinitePMF shift_law;
        if (p2 < 1.0) shift_law.pmf.push_back({0, 1.0 - p2});
        if (p2 > 0.0) shift_law.pmf.push_back({2, p2});
        auto trip = detail::feller_triplet(sp);
        trip.alpha = PiecewiseSignedMeasure(sp.breakpoints, sp.alpha_rates, {{sp.t0, sp.shift}});
        Expectations e{true, std::nullopt, "population multiplied by 1 + shift at t0"};
        if (sp.shift == -1.0) e.bottleneck = sp.t0;
        return {EnvironmentModel(n, UniformRate{n}, detail::feller_blocks(sp, n, G, {{g0 - 1, shift_law}})), trip, e};
    }
    case ScenarioKind::poisson_site: {
        require(n == std::floor(n) && n >= 2.0, errc::invalid_argument, "PoissonSite needs an integer n >= 2");
        const auto G = detail::generations_to(n, sp.horizon);
        const std::uint64_t g0 = detail::generations_to(n, sp.t0);
        require(g0 >= 1, errc::invalid_argument, "t0 precedes the first generation at this n");
        auto trip = detail::feller_triplet(sp);
        trip.alpha = PiecewiseSignedMeasure(sp.breakpoints, sp.alpha_rates, {{sp.t0, -0.5}});
        trip.beta = MonotoneMeasure(sp.breakpoints, sp.beta_rates, {{sp.t0, 0.25}});
        trip.nu = LevyKernel({}, {{sp.t0, LevyMeasure::dirac(1.0)}});
        return {EnvironmentModel(n, UniformRate{n}, detail::feller_blocks(sp, n, G, {{g0 - 1, PoissonizedSite{static_cast<std::uint64_t>(n)}}})),
                trip,
                {true, std::nullopt, "population replaced by a Poisson variable with mean X(t0-) at t0"}};
    }
    case ScenarioKind::bottleneck: {
        const double Gamma = std::max(1.0, std::round(std::pow(n, sp.stable_a - 1.0)));
        const auto Gi = static_cast<std::uint64_t>(Gamma);
        const auto G = detail::generations_to(Gamma, sp.horizon);
        const double pn = std::pow(n, -sp.p_exponent);
        const OffspringLaw q = StablePGF{sp.stable_a, sp.stable_c};
        std::vector<Block> blocks{{Gi, q}};
        if (Gi > 1) blocks.push_back({Gi - 1, Dirac{1}});
        blocks.push_back({1, Bernoulli01{pn}});
        require(G > 2 * Gi, errc::invalid_argument, "bottleneck horizon covers no generation after the catastrophe");
        blocks.push_back({G - 2 * Gi, q});
        const auto mech = detail::stable_mechanism(sp.stable_a, sp.stable_c);
        const double x2 = levy_integral(mech.F, 0.0, LevyKind::x2);
        LimitTriplet trip;
        trip.alpha = PiecewiseSignedMeasure({0.0, 1.0, 2.0}, {mech.a, 0.0, mech.a}, {{2.0, -1.0}});
        trip.beta = MonotoneMeasure({0.0, 1.0, 2.0}, {0.5 * x2, 0.0, 0.5 * x2});
        trip.nu = LevyKernel({{0.0, 1.0, mech.F}, {2.0, inf, mech.F}}, {});
        return {EnvironmentModel(n, UniformRate{Gamma}, std::move(blocks)), trip,
                {true, 2.0, "catastrophe with mean p_n at t = 2; u is undetermined for s < 2"}};
    }
    case ScenarioKind::random_two_law: {
        validate_law(sp.law1);
        validate_law(sp.law2);
        auto finite_char = [&](const OffspringLaw& l) {
            const PreparedLaw probe(l, n);
            require(std::abs(probe.mean() - 1.0) <= 1e-12, errc::invalid_argument, "RandomTwoLaw laws must be critical");
            const double var = detail::law_variance(l);
            require(std::isfinite(var), errc::invalid_argument, "RandomTwoLaw laws must have finite variance");
            return Characteristic{0.0, var, {}};
        };
        const double e1 = sp.gamma_exponent1, e2 = sp.gamma_exponent2, q1 = sp.p1;
        const auto sel = regime_select([e1](double m) { return std::pow(m, e1); }, [q1](double) { return q1; }, finite_char(sp.law1),
                                       [e2](double m) { return std::pow(m, e2); }, [q1](double) { return 1.0 - q1; }, finite_char(sp.law2),
                                       {1e2, 1e3, 1e4, 1e5, 1e6});
        const double Gamma = sel.Gamma(n);
        return {realize_random_env(sp.law1, sp.law2, sp.p1, 1.0 - sp.p1, n, Gamma, sp.horizon, sp.seed), constant_triplet(to_mechanism(sel.merged)),
                {true, std::nullopt, std::string("i.i.d. mixture; time scale ") + sel.gamma_rule}};
    }
    }
    throw error(errc::unknown_kind, "unknown scenario kind");
}

struct BuiltinScenario {
    std::string name;
    std::string description;
    ScenarioSpec spec;
};

inline std::vector<BuiltinScenario> builtin_scenarios() {
    std::vector<BuiltinScenario> out;
    {
        ScenarioSpec s;
        out.push_back({"constant-binary", "binary GW (0 or 2 children), time scale n; limit beta(t) = t/2", s});
    }
    {
        ScenarioSpec s;
        s.law = StablePGF{1.5, 1.0 / 3.0};
        s.n_grid = {1e2, 1e4, 1e6};
        out.push_back({"constant-stable", "critical stable GW f(s) = s + (1-s)^1.5/3, time scale n^0.5", s});
    }
    {
        ScenarioSpec s;
        s.kind = ScenarioKind::feller_varying;
        s.breakpoints = {0.0, 1.0};
        s.alpha_rates = {-0.5, 1.0};
        s.beta_rates = {0.25, 0.5};
        out.push_back({"feller-varying", "Feller diffusion with drift -0.5 then 1 and diffusion 0.25 then 0.5", s});
    }
    {
        ScenarioSpec s;
        s.kind = ScenarioKind::feller_varying;
        s.alpha_rates = {1.0};
        s.beta_rates = {1.0};
        s.horizon = 20.0;
        s.n_grid = {50, 100, 200};
        out.push_back({"feller-supercritical", "drift 1, diffusion 1; extinction probability e^{-x}", s});
    }
    {
        ScenarioSpec s;
        s.kind = ScenarioKind::catastrophe;
        s.alpha_rates = {0.0};
        s.beta_rates = {0.5};
        out.push_back({"catastrophe", "Feller base with one generation of mean 0.5 at t0 = 1", s});
    }
    {
        ScenarioSpec s;
        s.kind = ScenarioKind::poisson_site;
        s.n_grid = {1e2, 1e3, 1e4};
        out.push_back({"poisson-site", "Feller base with one generation (1-1/n) delta_0 + (1/n) delta_n at t0 = 1", s});
    }
    {
        ScenarioSpec s;
        s.kind = ScenarioKind::bottleneck;
        s.horizon = 3.0;
        out.push_back({"bottleneck", "stable GW, frozen on (1,2], catastrophe with mean n^-2 at t = 2", s});
    }
    {
        ScenarioSpec s;
        s.kind = ScenarioKind::random_two_law;
        s.horizon = 1.0;
        out.push_back({"random-two-law", "i.i.d. mixture of two critical laws, balanced ratio 2; merged diffusion 1", s});
    }
    return out;
}

inline const BuiltinScenario& builtin_scenario(const std::string& name) {
    static const auto all = builtin_scenarios();
    for (const auto& b : all)
        if (b.name == name) return b;
    throw error(errc::unknown_kind, "no built-in scenario named '" + name + "'");
}

} // namespace gwve
