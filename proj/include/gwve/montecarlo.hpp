#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "environment.hpp"

namespace gwve {

// splitmix64 stream keyed by (seed, path, generation).
class Substream {
public:
    using result_type = std::uint64_t;

    Substream(std::uint64_t seed, std::uint64_t path, std::uint64_t gen)
        : state_(mix(mix(seed ^ 0x243f6a8885a308d3ULL) ^ mix(path + 0x13198a2e03707344ULL) ^ mix(gen * 0x9e3779b97f4a7c15ULL + 0xa4093822299f31d0ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform on [0, 1) with 53 random bits
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

inline constexpr std::uint64_t default_population_cap = 1ULL << 53;

namespace detail {

inline std::uint64_t binomial(Substream& rng, std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p == 0.5 && n <= (1u << 16)) {
        std::uint64_t k = 0, left = n;
        for (; left >= 64; left -= 64) k += static_cast<std::uint64_t>(std::popcount(rng()));
        if (left > 0) k += static_cast<std::uint64_t>(std::popcount(rng() & ((1ULL << left) - 1)));
        return k;
    }
    boost::random::binomial_distribution<std::int64_t> d(static_cast<std::int64_t>(n), p);
    return static_cast<std::uint64_t>(d(rng));
}

inline std::uint64_t poisson(Substream& rng, double mean) {
    if (mean <= 0.0) return 0;
    boost::random::poisson_distribution<std::int64_t> d(mean);
    return static_cast<std::uint64_t>(d(rng));
}

// Offspring-sum sampler for one law.
class OffspringSampler {
public:
    explicit OffspringSampler(const PreparedLaw& law) {
        if (const auto* p = std::get_if<Poisson>(&law.law())) {
            poisson_mean_ = p->mean;
            return;
        }
        if (const auto* d = std::get_if<Dirac>(&law.law())) {
            dirac_ = d->k;
            return;
        }
        double acc = 0.0;
        for (const auto& e : law.table()) {
            acc += e.p;
            entries_.push_back(e);
            cdf_.push_back(acc);
        }
        // sampling always lands on a table entry
        cdf_.back() = std::numeric_limits<double>::infinity();
    }

    // Sum of z independent offspring counts; returns false if it exceeds cap.
    bool sample_sum(Substream& rng, std::uint64_t z, std::uint64_t cap, std::uint64_t& out) const {
        if (z == 0) {
            out = 0;
            return true;
        }
        if (poisson_mean_ >= 0.0) {
            const double m = static_cast<double>(z) * poisson_mean_;
            if (m > static_cast<double>(cap)) return false;
            out = poisson(rng, m);
            return out <= cap;
        }
        if (dirac_) {
            if (*dirac_ != 0 && z > cap / *dirac_) return false;
            out = z * *dirac_;
            return true;
        }
        long double sum = 0.0L;
        if (z <= 64 && entries_.size() > 4) {
            for (std::uint64_t k = 0; k < z; ++k) {
                const double v = rng.uniform();
                const auto j = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), v) - cdf_.begin());
                sum += value_of(rng, entries_[std::min(j, entries_.size() - 1)], 1);
            }
        } else {
            // multinomial category counts by sequential binomials
            std::uint64_t left = z;
            double mass_left = 1.0;
            for (std::size_t j = 0; j < entries_.size() && left > 0; ++j) {
                const double p = entries_[j].p;
                const std::uint64_t c = j + 1 == entries_.size() ? left : binomial(rng, left, std::clamp(p / mass_left, 0.0, 1.0));
                if (c > 0) sum += value_of(rng, entries_[j], c);
                left -= c;
                mass_left -= p;
                if (mass_left <= 0.0) mass_left = std::numeric_limits<double>::min();
            }
        }
        if (sum > static_cast<long double>(cap)) return false;
        out = static_cast<std::uint64_t>(sum);
        return true;
    }

private:
    // Sum of c draws from one table entry. Buckets sit at a fractional conditional
    // mean; each draw is floor or ceil of it with the matching probability.
    static long double value_of(Substream& rng, const PmfEntry& e, std::uint64_t c) {
        if (e.lo == e.hi) return static_cast<long double>(e.lo) * c;
        const double fl = std::floor(e.position), frac = e.position - fl;
        return static_cast<long double>(fl) * c + static_cast<long double>(binomial(rng, c, frac));
    }

    double poisson_mean_ = -1.0;
    std::optional<std::uint64_t> dirac_;
    std::vector<PmfEntry> entries_;
    std::vector<double> cdf_;
};

inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += v[k];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

} // namespace detail

struct SimOptions {
    std::uint64_t start_gen = 0;
    std::vector<std::uint64_t> record; // generations to keep; empty keeps all
    std::uint64_t cap = default_population_cap;
    unsigned threads = 1;
};

struct PathBatch {
    const EnvironmentModel* env = nullptr;
    std::uint64_t z0 = 0;
    std::uint64_t start_gen = 0;
    std::uint64_t max_gen = 0;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    std::vector<std::uint64_t> gens;     // recorded generations, ascending
    std::vector<std::uint64_t> pop;      // pop[path * gens.size() + k]
    std::vector<std::uint8_t> overflowed; // per path

    std::size_t column(std::uint64_t g) const {
        const auto it = std::lower_bound(gens.begin(), gens.end(), g);
        require(it != gens.end() && *it == g, errc::invalid_argument, "generation " + std::to_string(g) + " was not recorded");
        return static_cast<std::size_t>(it - gens.begin());
    }
    std::uint64_t at(std::size_t path, std::size_t col) const { return pop[path * gens.size() + col]; }
    std::size_t overflow_count() const { return static_cast<std::size_t>(std::count(overflowed.begin(), overflowed.end(), 1)); }
};

// Simulates n_paths populations from z0 individuals at opt.start_gen up to max_gen.
// Path p uses only substreams keyed by (seed, p, generation), so the batch does not
// depend on the thread count.
inline PathBatch simulate(const EnvironmentModel& env, std::uint64_t z0, std::uint64_t max_gen, std::uint64_t seed, std::size_t n_paths,
                          const SimOptions& opt = {}) {
    require(max_gen >= opt.start_gen, errc::invalid_argument, "max_gen must be >= the start generation");
    require(max_gen <= env.generations(), errc::invalid_argument, "environment does not cover generation " + std::to_string(max_gen));
    require(n_paths > 0, errc::invalid_argument, "need at least one path");
    require(opt.cap > 0, errc::invalid_argument, "population cap must be positive");
    require(z0 <= opt.cap, errc::invalid_argument, "z0 exceeds the population cap");
    PathBatch b;
    b.env = &env;
    b.z0 = z0;
    b.start_gen = opt.start_gen;
    b.max_gen = max_gen;
    b.seed = seed;
    b.n_paths = n_paths;
    if (opt.record.empty()) {
        for (std::uint64_t g = opt.start_gen; g <= max_gen; ++g) b.gens.push_back(g);
    } else {
        b.gens = opt.record;
        std::sort(b.gens.begin(), b.gens.end());
        b.gens.erase(std::unique(b.gens.begin(), b.gens.end()), b.gens.end());
        require(b.gens.front() >= opt.start_gen && b.gens.back() <= max_gen, errc::invalid_argument, "recorded generations outside the simulated range");
    }
    const std::size_t G = b.gens.size();
    b.pop.assign(n_paths * G, 0);
    b.overflowed.assign(n_paths, 0);

    struct Run {
        std::uint64_t lo, hi;
        std::size_t sampler;
    };
    std::vector<Run> runs;
    std::vector<detail::OffspringSampler> samplers;
    std::map<const PreparedLaw*, std::size_t> index;
    env.for_each_run(opt.start_gen, max_gen, [&](std::uint64_t lo, std::uint64_t hi, const PreparedLaw& law) {
        auto [it, fresh] = index.try_emplace(&law, samplers.size());
        if (fresh) samplers.emplace_back(law);
        runs.push_back({lo, hi, it->second});
    });

    auto one_path = [&](std::size_t p) {
        std::uint64_t z = z0;
        std::size_t col = 0;
        std::uint64_t g = opt.start_gen;
        auto record = [&] {
            while (col < G && b.gens[col] == g) b.pop[p * G + col++] = z;
        };
        record();
        for (const auto& r : runs) {
            const auto& s = samplers[r.sampler];
            for (g = r.lo; g < r.hi;) {
                if (z == 0) {
                    g = r.hi;
                    break;
                }
                Substream rng(seed, p, g);
                std::uint64_t next = 0;
                if (!s.sample_sum(rng, z, opt.cap, next)) {
                    b.overflowed[p] = 1;
                    z = opt.cap;
                    // frozen at the cap for the remaining recorded generations
                    for (; col < G; ++col) b.pop[p * G + col] = z;
                    return;
                }
                z = next;
                ++g;
                record();
            }
            if (z == 0) {
                for (; col < G; ++col) b.pop[p * G + col] = 0;
                return;
            }
        }
    };

    const unsigned T = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n_paths)));
    if (T == 1) {
        for (std::size_t p = 0; p < n_paths; ++p) one_path(p);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < T; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t p = w; p < n_paths; p += T) one_path(p);
            });
        for (auto& th : pool) th.join();
    }
    return b;
}

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

namespace detail {

template <class F>
Estimate estimate_over_paths(const PathBatch& b, F&& value) {
    std::vector<double> v;
    v.reserve(b.n_paths);
    Estimate e;
    for (std::size_t p = 0; p < b.n_paths; ++p) {
        if (b.overflowed[p]) {
            ++e.excluded;
            continue;
        }
        v.push_back(value(p));
    }
    e.used = v.size();
    if (v.empty()) throw error(errc::all_paths_overflowed, "all " + std::to_string(b.n_paths) + " paths exceeded the population cap");
    e.mean = pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (v.size() > 1 && *lo != *hi) {
        for (auto& x : v) x = (x - e.mean) * (x - e.mean);
        const double var = pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size() - 1);
        e.se = std::sqrt(var / static_cast<double>(v.size()));
    }
    return e;
}

} // namespace detail

// Mean of exp(-sum lam_i Z_{gamma(t_i)} / n) over non-overflowed paths. The batch
// must start at generation gamma(s).
inline Estimate empirical_fdd(const PathBatch& b, double s, const std::vector<std::pair<double, double>>& pairs) {
    require(b.env != nullptr, errc::invalid_argument, "batch has no environment");
    require(b.env->gamma(s) == b.start_gen, errc::invalid_argument, "batch does not start at generation gamma(s)");
    require(!pairs.empty(), errc::invalid_argument, "need at least one (t, lambda) pair");
    std::vector<std::pair<std::size_t, double>> cols;
    for (const auto& [t, lam] : pairs) {
        require(t >= s && lam >= 0.0, errc::invalid_argument, "need t >= s and lambda >= 0");
        if (lam > 0.0) cols.push_back({b.column(b.env->gamma(t)), lam});
    }
    if (cols.empty()) {
        Estimate e;
        e.mean = 1.0;
        e.excluded = b.overflow_count();
        e.used = b.n_paths - e.excluded;
        return e;
    }
    const double n = b.env->n();
    return detail::estimate_over_paths(b, [&](std::size_t p) {
        double x = 0.0;
        for (const auto& [c, lam] : cols) x += lam * static_cast<double>(b.at(p, c)) / n;
        return std::exp(-x);
    });
}

inline Estimate empirical_laplace(const PathBatch& b, double t, double lam) {
    require(b.env != nullptr, errc::invalid_argument, "batch has no environment");
    return empirical_fdd(b, b.env->time_of(b.start_gen), {{t, lam}});
}

inline Estimate survival_estimate(const PathBatch& b, double t) {
    require(b.env != nullptr, errc::invalid_argument, "batch has no environment");
    const std::size_t c = b.column(b.env->gamma(t));
    return detail::estimate_over_paths(b, [&](std::size_t p) { return b.at(p, c) > 0 ? 1.0 : 0.0; });
}

// Mean and standard error of Z_g / n for every recorded generation.
struct BatchSummary {
    std::size_t paths = 0;
    std::size_t overflowed = 0;
    std::vector<std::uint64_t> gens;
    std::vector<double> means;
    std::vector<double> se;
};

inline BatchSummary summarize(const PathBatch& b) {
    BatchSummary s;
    s.paths = b.n_paths;
    s.overflowed = b.overflow_count();
    s.gens = b.gens;
    if (s.overflowed == s.paths) return s;
    for (std::size_t c = 0; c < b.gens.size(); ++c) {
        const auto e = detail::estimate_over_paths(b, [&](std::size_t p) { return static_cast<double>(b.at(p, c)) / b.env->n(); });
        s.means.push_back(e.mean);
        s.se.push_back(e.se);
    }
    return s;
}

} // namespace gwve
