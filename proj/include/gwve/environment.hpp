#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "measures.hpp"
#include "offspring_law.hpp"

namespace gwve {

struct NuAtom {
    double x;
    double mass;
};

// Per-generation characteristics alpha_{i,n}, beta_{i,n}, nu_{i,n}.
struct DiscreteGenCharacteristics {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<NuAtom> nu; // atoms at (k-1)/n with mass n P(xi = k)
};

// A law bound to a scale n with everything the recursions need precomputed.
class PreparedLaw {
public:
    PreparedLaw(OffspringLaw law, double n, const TruncationPolicy& pol = {})
        : law_(std::move(law)), n_(n), table_(law_pmf(law_, pol)) {
        require(n > 0.0 && std::isfinite(n), errc::invalid_argument, "scale n must be positive");
        mean_ = exact_mean();
        long double a3 = 0.0L, b = 0.0L, abs_dev = 0.0L;
        for (const auto& e : table_) {
            const long double xb = (static_cast<long double>(e.position) - 1.0L) / n_;
            const long double x2 = xb * xb;
            a3 += e.p * xb * x2 / (1.0L + x2);
            b += e.p * x2 / (1.0L + x2);
            abs_dev += e.p * std::fabs(xb);
        }
        // n E[xb/(1+xb^2)] = (m - 1) - n E[xb^3/(1+xb^2)]
        alpha_ = (mean_ - 1.0) - n_ * static_cast<double>(a3);
        beta_ = 0.5 * n_ * static_cast<double>(b);
        abs_dev_ = static_cast<double>(abs_dev);
        suffix_.assign(table_.size() + 1, 0.0);
        for (std::size_t j = table_.size(); j-- > 0;) suffix_[j] = suffix_[j + 1] + static_cast<long double>(table_[j].p);
    }

    const OffspringLaw& law() const { return law_; }
    double n() const { return n_; }
    const std::vector<PmfEntry>& table() const { return table_; }

    double mean() const { return mean_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    // E|xi - 1| / n
    double abs_deviation() const { return abs_dev_; }

    DiscreteGenCharacteristics characteristics() const {
        DiscreteGenCharacteristics c{alpha_, beta_, {}};
        c.nu.reserve(table_.size());
        for (const auto& e : table_) c.nu.push_back({(e.position - 1.0) / n_, n_ * e.p});
        return c;
    }

    // P(xi >= k)
    double tail_count(double k) const {
        if (k <= 0.0) return 1.0;
        if (const auto* st = std::get_if<StablePGF>(&law_); st && st->a < 2.0 && k >= 2.0) {
            const double kk = std::ceil(k);
            if (kk >= static_cast<double>(TruncationPolicy{}.stable_exact)) return detail::stable_tail(st->a, st->c, kk);
        }
        const auto it = std::lower_bound(table_.begin(), table_.end(), k, [](const PmfEntry& e, double v) { return e.position < v; });
        return static_cast<double>(suffix_[static_cast<std::size_t>(it - table_.begin())]);
    }

    // nu_{i,n}([x, inf)) = n P(xb >= x)
    double nu_tail(double x) const {
        // P(xi >= 1 + n x), snapped so that atom positions count as included
        const double k = 1.0 + n_ * x;
        const double snapped = std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k)) ? std::round(k) : k;
        return n_ * tail_count(snapped);
    }

    // E(xi; xi <= K)
    double truncated_mean(double K) const {
        if (K < 0.0) return 0.0;
        if (const auto* st = std::get_if<StablePGF>(&law_); st && st->a < 2.0) {
            const double k1 = std::floor(K) + 1.0;
            if (k1 >= static_cast<double>(TruncationPolicy{}.stable_exact)) return 1.0 - detail::stable_tail_mean(st->a, st->c, k1);
        }
        long double s = 0.0L;
        for (const auto& e : table_) {
            if (e.position > K) break;
            s += static_cast<long double>(e.p) * e.position;
        }
        return static_cast<double>(s);
    }

    // log E[exp(-lam xb)]
    double log_shifted(double lam) const {
        const double r = lam / n_;
        if (const auto* d = std::get_if<Dirac>(&law_)) return -(static_cast<double>(d->k) - 1.0) * r;
        if (const auto* p = std::get_if<Poisson>(&law_)) return (1.0 - p->mean) * r + p->mean * r * r * phi1(r);
        if (r > 30.0) return r + log_pgf(law_, table_, lam, n_);
        return std::log1p(shifted_laplace_minus_one(law_, table_, lam, n_));
    }

    // psi_{i,n}(lam) = -n log E[exp(-lam xb)]
    double psi(double lam) const {
        if (lam == 0.0) return 0.0;
        return -n_ * log_shifted(lam);
    }

    // One backwards generation: u_i = u_{i+1} + psi(u_{i+1}) = -n log f(exp(-u/n))
    double step(double u) const {
        if (u == 0.0) return 0.0;
        // u + psi(u) cancels once u / n is large
        if (u > n_) return -n_ * log_pgf(law_, table_, u, n_);
        return std::max(0.0, u + psi(u));
    }

    // D(lam) = E[exp(-lam xb)] - 1 = -(1/n) int (1 - e^{-lam x}) nu(dx)
    double shifted_minus_one(double lam) const {
        if (std::holds_alternative<Poisson>(law_) || std::holds_alternative<Dirac>(law_)) return std::expm1(log_shifted(lam));
        return shifted_laplace_minus_one(law_, table_, lam, n_);
    }

    // eps_{i,n}(lam) with psi = (1 + eps) int (1 - e^{-lam x}) nu(dx)
    double epsilon(double lam) const {
        const double D = shifted_minus_one(lam);
        if (D == 0.0) return 0.0;
        if (std::abs(D) < 1e-4) {
            // log1p(D)/D - 1 = -D/2 + D^2/3 - D^3/4 + ...
            double term = -D / 2.0, sum = 0.0;
            for (int k = 2; k < 12; ++k) {
                sum += term;
                term *= -D * k / (k + 1.0);
            }
            return sum;
        }
        return std::log1p(D) / D - 1.0;
    }

private:
    double exact_mean() const {
        return std::visit(
            [&](const auto& l) -> double {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Poisson>) return l.mean;
                else if constexpr (std::is_same_v<T, Dirac>) return static_cast<double>(l.k);
                else if constexpr (std::is_same_v<T, Bernoulli01>) return l.p;
                else if constexpr (std::is_same_v<T, PoissonizedSite>) return 1.0;
                else if constexpr (std::is_same_v<T, StablePGF>) return 1.0;
                else {
                    long double s = 0.0L;
                    for (auto [k, p] : l.pmf) s += static_cast<long double>(p) * static_cast<long double>(k);
                    return static_cast<double>(s);
                }
            },
            law_);
    }

    OffspringLaw law_;
    double n_;
    std::vector<PmfEntry> table_;
    std::vector<long double> suffix_;
    double mean_ = 1.0, alpha_ = 0.0, beta_ = 0.0, abs_dev_ = 0.0;
};

inline DiscreteGenCharacteristics gen_characteristics(const OffspringLaw& law, double n, const TruncationPolicy& pol = {}) {
    return PreparedLaw(law, n, pol).characteristics();
}

// alpha and beta recomputed from the nu atoms alone.
inline std::pair<double, double> characteristics_from_nu(const std::vector<NuAtom>& nu, double n) {
    long double a = 0.0L, b = 0.0L;
    for (const auto& at : nu) {
        const long double x = at.x, x2 = x * x;
        a += at.mass * x / (1.0L + x2);
        b += at.mass * x2 / (1.0L + x2);
    }
    (void)n;
    return {static_cast<double>(a), static_cast<double>(0.5L * b)};
}

// gamma_n(t) = floor(rate t)
struct UniformRate {
    double rate;
};
// t_0 = 0 < t_1 < ...; gamma_n(t) = max{i : t_i <= t}
struct ExplicitTimes {
    std::vector<double> times;
};
using TimeChange = std::variant<UniformRate, ExplicitTimes>;

struct Block {
    std::uint64_t count;
    OffspringLaw law;
};

inline constexpr double grid_snap_tol = 1e-9;

class EnvironmentModel {
public:
    EnvironmentModel(double n, TimeChange tc, std::vector<Block> blocks, const TruncationPolicy& pol = {})
        : n_(n), tc_(std::move(tc)), blocks_(std::move(blocks)) {
        require(n > 0.0 && std::isfinite(n), errc::invalid_argument, "n must be positive");
        if (const auto* u = std::get_if<UniformRate>(&tc_)) {
            require(u->rate > 0.0 && std::isfinite(u->rate), errc::invalid_argument, "time change rate must be positive");
        } else {
            const auto& ts = std::get<ExplicitTimes>(tc_).times;
            require(!ts.empty() && ts.front() == 0.0, errc::invalid_argument, "explicit times must start at t_0 = 0");
            for (std::size_t i = 1; i < ts.size(); ++i)
                require(ts[i] > ts[i - 1], errc::invalid_argument, "explicit times must be strictly increasing");
        }
        std::uint64_t acc = 0;
        for (const auto& b : blocks_) {
            require(b.count > 0, errc::invalid_argument, "block counts must be positive");
            std::shared_ptr<const PreparedLaw> shared;
            for (std::size_t j = 0; j < prepared_.size(); ++j)
                if (blocks_[j].law == b.law) shared = prepared_[j];
            prepared_.push_back(shared ? shared : std::make_shared<const PreparedLaw>(b.law, n, pol));
            acc += b.count;
            ends_.push_back(acc);
        }
    }

    double n() const { return n_; }
    const TimeChange& time_change() const { return tc_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    std::uint64_t generations() const { return ends_.empty() ? 0 : ends_.back(); }

    std::uint64_t gamma(double t) const {
        require(t >= 0.0, errc::invalid_argument, "time must be >= 0");
        if (const auto* u = std::get_if<UniformRate>(&tc_)) {
            const double x = u->rate * t;
            const double r = std::round(x);
            if (std::abs(x - r) <= grid_snap_tol * std::max(1.0, r)) return static_cast<std::uint64_t>(r);
            return static_cast<std::uint64_t>(std::floor(x));
        }
        const auto& ts = std::get<ExplicitTimes>(tc_).times;
        auto it = std::upper_bound(ts.begin(), ts.end(), t * (1.0 + grid_snap_tol) + grid_snap_tol * 1e-3);
        return static_cast<std::uint64_t>(it - ts.begin()) - 1;
    }

    double time_of(std::uint64_t i) const {
        if (const auto* u = std::get_if<UniformRate>(&tc_)) return static_cast<double>(i) / u->rate;
        const auto& ts = std::get<ExplicitTimes>(tc_).times;
        require(i < ts.size(), errc::invalid_argument, "generation index beyond the explicit time grid");
        return ts[i];
    }

    std::size_t block_index(std::uint64_t i) const {
        const auto it = std::upper_bound(ends_.begin(), ends_.end(), i);
        require(it != ends_.end(), errc::invalid_argument, "environment does not cover generation " + std::to_string(i));
        return static_cast<std::size_t>(it - ends_.begin());
    }

    const PreparedLaw& law_at(std::uint64_t i) const { return *prepared_[block_index(i)]; }

    // Visit maximal runs [lo, hi) of identical laws intersected with [g0, g1).
    template <class F>
    void for_each_run(std::uint64_t g0, std::uint64_t g1, F&& f) const {
        if (g1 <= g0) return;
        require(g1 <= generations(), errc::invalid_argument, "environment does not cover generation " + std::to_string(g1 - 1));
        std::uint64_t start = 0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            const std::uint64_t lo = std::max(start, g0), hi = std::min(ends_[b], g1);
            if (lo < hi) f(lo, hi, *prepared_[b]);
            start = ends_[b];
            if (start >= g1) break;
        }
    }

private:
    double n_;
    TimeChange tc_;
    std::vector<Block> blocks_;
    std::vector<std::shared_ptr<const PreparedLaw>> prepared_;
    std::vector<std::uint64_t> ends_;
};

// x -> nu_n([x, inf) x (0, t]) as a sum over generation runs.
class TailFunction {
public:
    void add(const PreparedLaw* law, double count) { terms_.push_back({law, count}); }
    double operator()(double x) const {
        double s = 0.0;
        for (const auto& [law, count] : terms_) s += count * law->nu_tail(x);
        return s;
    }

private:
    std::vector<std::pair<const PreparedLaw*, double>> terms_;
};

struct CumulativeTriplet {
    double alpha = 0.0;
    double tv_alpha = 0.0;
    double beta = 0.0;
    TailFunction tail;
};

inline CumulativeTriplet cumulative_over(const EnvironmentModel& env, std::uint64_t g0, std::uint64_t g1) {
    CumulativeTriplet c;
    env.for_each_run(g0, g1, [&](std::uint64_t lo, std::uint64_t hi, const PreparedLaw& law) {
        const double k = static_cast<double>(hi - lo);
        c.alpha += k * law.alpha();
        c.tv_alpha += k * std::abs(law.alpha());
        c.beta += k * law.beta();
        c.tail.add(&law, k);
    });
    return c;
}

// Sums over generations i < gamma_n(t).
inline CumulativeTriplet cumulative_triplet(const EnvironmentModel& env, double t) { return cumulative_over(env, 0, env.gamma(t)); }

struct NoBottleneckRow {
    double C;
    double inf_truncated_mean;
    std::uint64_t argmin;
};

// inf over i <= gamma_n(t) of E(xi_i; xi_i <= C n)
inline std::vector<NoBottleneckRow> check_no_bottleneck(const EnvironmentModel& env, double t, const std::vector<double>& Cs) {
    require(!Cs.empty(), errc::invalid_argument, "C list must be nonempty");
    std::vector<NoBottleneckRow> out;
    const std::uint64_t g = std::min(env.gamma(t) + 1, env.generations());
    for (double C : Cs) {
        require(C > 0.0, errc::invalid_argument, "C values must be positive");
        NoBottleneckRow row{C, inf, 0};
        env.for_each_run(0, g, [&](std::uint64_t lo, std::uint64_t, const PreparedLaw& law) {
            const double v = law.truncated_mean(C * env.n());
            if (v < row.inf_truncated_mean) row.inf_truncated_mean = v, row.argmin = lo;
        });
        out.push_back(row);
    }
    return out;
}

// n sum_{i < gamma_n(t)} E|xb_{i,n}|
inline double check_first_moment(const EnvironmentModel& env, double t) {
    double s = 0.0;
    env.for_each_run(0, env.gamma(t), [&](std::uint64_t lo, std::uint64_t hi, const PreparedLaw& law) {
        s += static_cast<double>(hi - lo) * law.abs_deviation();
    });
    return env.n() * s;
}

struct B1Row {
    double n;
    double Gamma;
    double a;
    double b;
    std::vector<double> F_tail; // per probe x
};

struct B1Report {
    std::vector<double> probe_xs;
    std::vector<B1Row> rows;
    // |value(n_k) - value(n_{k-1})| for a, b and the largest tail difference
    std::vector<double> cauchy_a, cauchy_b, cauchy_F;
    // least-squares slope of log F_tail against log x at the largest n (nan if undefined)
    double tail_log_slope = std::numeric_limits<double>::quiet_NaN();
};

inline B1Report check_B1(const std::vector<EnvironmentModel>& family, const std::vector<double>& probe_xs) {
    require(!family.empty(), errc::invalid_argument, "B1 check needs at least one environment");
    B1Report rep;
    rep.probe_xs = probe_xs;
    for (const auto& env : family) {
        const auto* u = std::get_if<UniformRate>(&env.time_change());
        require(u != nullptr, errc::invalid_argument, "B1 check requires a uniform-rate time change");
        require(env.blocks().size() == 1, errc::invalid_argument, "B1 check requires a constant law");
        const PreparedLaw& law = env.law_at(0);
        B1Row row{env.n(), u->rate, u->rate * law.alpha(), 2.0 * u->rate * law.beta(), {}};
        for (double x : probe_xs) {
            require(x > 0.0, errc::invalid_argument, "probe points must be positive");
            row.F_tail.push_back(u->rate * law.nu_tail(x));
        }
        rep.rows.push_back(std::move(row));
    }
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        const auto &p = rep.rows[k - 1], &c = rep.rows[k];
        rep.cauchy_a.push_back(std::abs(c.a - p.a));
        rep.cauchy_b.push_back(std::abs(c.b - p.b));
        double d = 0.0;
        for (std::size_t j = 0; j < probe_xs.size(); ++j) d = std::max(d, std::abs(c.F_tail[j] - p.F_tail[j]));
        rep.cauchy_F.push_back(d);
    }
    const auto& last = rep.rows.back();
    std::vector<std::pair<double, double>> pts;
    for (std::size_t j = 0; j < probe_xs.size(); ++j)
        if (last.F_tail[j] > 0.0) pts.push_back({std::log(probe_xs[j]), std::log(last.F_tail[j])});
    if (pts.size() >= 2) {
        double mx = 0, my = 0;
        for (auto [x, y] : pts) mx += x, my += y;
        mx /= pts.size(), my /= pts.size();
        double sxy = 0, sxx = 0;
        for (auto [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
        if (sxx > 0) rep.tail_log_slope = sxy / sxx;
    }
    return rep;
}

struct A1Row {
    double n;
    double t;
    double err_alpha;
    double err_tv_alpha;
    double err_beta;
    std::vector<double> err_tail; // per probe x
};

struct A2Row {
    double n;
    double tau;
    std::uint64_t generation;
    double err_alpha;
    double err_beta;
    std::vector<double> err_tail;
};

struct AssumptionReport {
    std::vector<double> times, xs;
    std::vector<A1Row> a1;
    std::vector<A2Row> a2;
    std::vector<double> max_error_per_n;
    bool monotone_decrease = true;
};

namespace detail {

inline bool kernel_has_atom_in_x(const LevyKernel& nu, double x) {
    for (const auto& piece : nu.homogeneous())
        if (piece.F.has_atom_at(x)) return true;
    for (const auto& fa : nu.fixed_atoms())
        if (fa.G.has_atom_at(x)) return true;
    return false;
}

} // namespace detail

// A1 errors at the given times and A2 errors at every triplet atom tau <= max(times).
// The special generation of an atom at tau is gamma_n(tau) - 1, the last one
// summed into alpha_n(tau).
inline AssumptionReport assumption_diagnostics(const std::vector<EnvironmentModel>& family, const LimitTriplet& trip,
                                               const std::vector<double>& times, const std::vector<double>& xs) {
    for (double x : xs) {
        require(x > 0.0, errc::invalid_argument, "probe points must be positive");
        if (detail::kernel_has_atom_in_x(trip.nu, x))
            throw error(errc::probe_point_on_atom, "probe x = " + fmt_double(x) + " coincides with an atom of nu");
    }
    AssumptionReport rep;
    rep.times = times;
    rep.xs = xs;
    const double tmax = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
    const auto taus = detail::atom_times(trip);
    for (const auto& env : family) {
        double worst = 0.0;
        for (double t : times) {
            const auto c = cumulative_triplet(env, t);
            A1Row row{env.n(), t, std::abs(c.alpha - trip.alpha.cumulative(t)),
                      std::abs(c.tv_alpha - trip.alpha.total_variation(t)), std::abs(c.beta - trip.beta.cumulative(t)), {}};
            for (double x : xs) row.err_tail.push_back(std::abs(c.tail(x) - trip.nu.tail(x, 0.0, t)));
            worst = std::max({worst, row.err_alpha, row.err_tv_alpha, row.err_beta});
            for (double e : row.err_tail) worst = std::max(worst, e);
            rep.a1.push_back(std::move(row));
        }
        for (double tau : taus) {
            if (tau > tmax) continue;
            const std::uint64_t g = env.gamma(tau);
            require(g >= 1, errc::invalid_argument, "atom time precedes the first generation");
            const PreparedLaw& law = env.law_at(g - 1);
            const LevyMeasure* G = trip.nu.atom_at(tau);
            A2Row row{env.n(), tau, g - 1, std::abs(law.alpha() - trip.alpha.atom_at(tau)), std::abs(law.beta() - trip.beta.atom_at(tau)), {}};
            for (double x : xs) row.err_tail.push_back(std::abs(law.nu_tail(x) - (G ? G->tail(x) : 0.0)));
            worst = std::max({worst, row.err_alpha, row.err_beta});
            for (double e : row.err_tail) worst = std::max(worst, e);
            rep.a2.push_back(std::move(row));
        }
        if (!rep.max_error_per_n.empty() && worst > rep.max_error_per_n.back()) rep.monotone_decrease = false;
        rep.max_error_per_n.push_back(worst);
    }
    return rep;
}

} // namespace gwve
