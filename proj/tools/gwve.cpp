#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gwve/discrete_laplace.hpp"
#include "gwve/environment.hpp"
#include "gwve/feller_csbp.hpp"
#include "gwve/io.hpp"
#include "gwve/limit_solver.hpp"
#include "gwve/montecarlo.hpp"
#include "gwve/scenarios.hpp"

using namespace gwve;
namespace fs = std::filesystem;

namespace {

struct Common {
    double tol = 1e-10;
    double mesh = 0.0;
    std::uint64_t seed = 1;
    std::size_t paths = 10000;
    unsigned threads = 1;
    std::string out;
    std::string format = "csv";
};

Common common;

bool as_json() { return common.format == "json"; }

// Writes to DIR/file with --out, otherwise to stdout (pieces separated by a blank line).
void emit(const std::string& file, const std::string& content) {
    static bool first = true;
    if (common.out.empty()) {
        if (!first) std::cout << '\n';
        first = false;
        std::cout << content;
        return;
    }
    fs::create_directories(common.out);
    const auto path = fs::path(common.out) / file;
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), errc::invalid_argument, "cannot write '" + path.string() + "'");
    os << content;
}

void emit_json(const std::string& file, const json& j) { emit(file, j.dump(2) + "\n"); }

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto& c : cells) s += (s.empty() ? "" : ",") + c;
    return s + "\n";
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ",") + fmt_double(x);
    return s;
}

SolverOptions solver_options(double s) {
    SolverOptions o;
    o.s = s;
    o.tol = common.tol;
    o.mesh.h = common.mesh;
    return o;
}

ScenarioSpec resolve_scenario(const std::string& arg) {
    for (const auto& b : builtin_scenarios())
        if (b.name == arg) return b.spec;
    return load_scenario_spec(arg);
}

std::vector<std::pair<double, double>> parse_pairs(const std::vector<std::string>& items) {
    std::vector<std::pair<double, double>> out;
    for (const auto& it : items) {
        const auto c = it.find(':');
        require(c != std::string::npos, errc::invalid_argument, "pairs are written t:lambda, got '" + it + "'");
        try {
            out.push_back({std::stod(it.substr(0, c)), std::stod(it.substr(c + 1))});
        } catch (const std::exception&) {
            throw error(errc::invalid_argument, "cannot parse pair '" + it + "'");
        }
    }
    return out;
}

// ---- commands ----

void cmd_triplet(const std::string& env_file, double t, const std::vector<double>& xs) {
    const auto env = load_environment(env_file);
    const auto c = cumulative_triplet(env, t);
    std::vector<double> tails;
    for (double x : xs) {
        require(x > 0.0, errc::invalid_argument, "tail probe points must be positive");
        tails.push_back(c.tail(x));
    }
    struct Run {
        std::uint64_t lo, hi;
        const PreparedLaw* law;
    };
    std::vector<Run> runs;
    env.for_each_run(0, env.gamma(t), [&](std::uint64_t lo, std::uint64_t hi, const PreparedLaw& law) { runs.push_back({lo, hi, &law}); });
    if (as_json()) {
        json rs = json::array();
        for (const auto& r : runs)
            rs.push_back({{"g_lo", r.lo}, {"g_hi", r.hi}, {"t_lo", env.time_of(r.lo)}, {"law", describe(r.law->law())},
                          {"alpha_i", r.law->alpha()}, {"beta_i", r.law->beta()}, {"mean", r.law->mean()}});
        emit_json("triplet.json", {{"t", t}, {"alpha", c.alpha}, {"tv_alpha", c.tv_alpha}, {"beta", c.beta}, {"x", xs}, {"nu_tail", tails},
                                   {"generations", rs}});
        return;
    }
    std::string head = "t,alpha,tv_alpha,beta", row = fmt_double(t) + "," + fmt_double(c.alpha) + "," + fmt_double(c.tv_alpha) + "," + fmt_double(c.beta);
    for (std::size_t k = 0; k < xs.size(); ++k) head += ",nu_tail_" + fmt_double(xs[k]), row += "," + fmt_double(tails[k]);
    emit("triplet.csv", head + "\n" + row + "\n");
    std::string g = "g_lo,g_hi,t_lo,law,alpha_i,beta_i,mean\n";
    for (const auto& r : runs)
        g += csv_row({std::to_string(r.lo), std::to_string(r.hi), fmt_double(env.time_of(r.lo)), "\"" + describe(r.law->law()) + "\"",
                      fmt_double(r.law->alpha()), fmt_double(r.law->beta()), fmt_double(r.law->mean())});
    emit("generations.csv", g);
}

void cmd_un(const std::string& env_file, double s, double t, double lam, bool table) {
    const auto env = load_environment(env_file);
    const auto r = u_discrete(env, s, t, lam, table);
    if (r.table.overflow) std::cerr << "warning: u_n overflowed to inf\n";
    if (as_json()) {
        json j{{"s", s}, {"t", t}, {"lambda", lam}, {"u_n", std::isfinite(r.value) ? json(r.value) : json(nullptr)}};
        if (table) j["table"] = {{"i_lo", r.table.g_lo}, {"t_i", r.table.times}, {"u", r.table.u}};
        emit_json("un.json", j);
        return;
    }
    emit("un.csv", "s,t,lambda,u_n\n" + csv_row({fmt_double(s), fmt_double(t), fmt_double(lam), fmt_double(r.value)}));
    if (table) {
        std::ostringstream os;
        write_csv(os, r.table);
        emit("un_table.csv", os.str());
    }
}

void cmd_profile(const std::string& env_file, double t, double lam, double s_lo) {
    const auto env = load_environment(env_file);
    const auto p = u_profile(env, t, lam, s_lo);
    std::cerr << "min u_n = " << fmt_double(p.min_u) << " at t = " << fmt_double(p.argmin_time) << '\n';
    if (as_json()) {
        emit_json("profile.json", {{"t", t}, {"lambda", lam}, {"min_u", p.min_u}, {"argmin_time", p.argmin_time}, {"i", p.gen}, {"t_i", p.time}, {"u", p.u}});
        return;
    }
    std::string s = "i,t_i,u\n";
    for (std::size_t k = 0; k < p.u.size(); ++k) s += csv_row({std::to_string(p.gen[k]), fmt_double(p.time[k]), fmt_double(p.u[k])});
    emit("profile.csv", s);
}

void cmd_solve(const std::string& trip_file, double s, double t, double lam, SolveMode mode) {
    const auto trip = load_triplet(trip_file);
    auto opt = solver_options(s);
    opt.mode = mode;
    const auto sol = solve_u(trip, t, lam, opt);
    std::ostringstream csv;
    write_csv(csv, sol);
    if (as_json()) {
        auto j = metadata_json(sol);
        j["s"] = sol.u.y;
        j["u_left"] = sol.u.left;
        j["u_right"] = sol.u.right;
        emit_json("solution.json", j);
    } else {
        emit("solution.csv", csv.str());
        if (!common.out.empty()) emit_json("solution.json", metadata_json(sol));
    }
    std::cerr << "residual " << fmt_double(sol.residual) << ", iterations " << sol.iterations << ", ode discrepancy " << fmt_double(sol.ode_discrepancy)
              << ", error bound " << fmt_double(sol.error_bound) << '\n';
    for (const auto& w : sol.warnings) std::cerr << "warning: " << w << '\n';
    const double head = sol.value(s);
    std::cerr << "u(" << fmt_double(s) << ") = " << fmt_double(head) << '\n';
}

void cmd_fdd(const std::string& trip_file, double s, double x, const std::vector<std::string>& items) {
    const auto trip = load_triplet(trip_file);
    const auto pairs = parse_pairs(items);
    const double v = fdd_laplace(trip, s, pairs, x, solver_options(s));
    if (as_json()) {
        json ps = json::array();
        for (const auto& [t, l] : pairs) ps.push_back({t, l});
        emit_json("fdd.json", {{"s", s}, {"x", x}, {"pairs", ps}, {"value", v}});
        return;
    }
    emit("fdd.csv", "s,x,value\n" + csv_row({fmt_double(s), fmt_double(x), fmt_double(v)}));
}

void cmd_feller(const std::string& trip_file, double s, double t, double lam) {
    const auto trip = load_triplet(trip_file);
    require(trip.nu.empty(), errc::invalid_argument, "the closed form needs nu = 0");
    const double u = u_feller(trip.alpha, trip.beta, s, t, lam);
    if (as_json())
        emit_json("feller.json", {{"s", s}, {"t", t}, {"lambda", lam}, {"u", u}});
    else
        emit("feller.csv", "s,t,lambda,u\n" + csv_row({fmt_double(s), fmt_double(t), fmt_double(lam), fmt_double(u)}));
}

void cmd_extinction(const std::string& trip_file, double s, double x, const std::string& horizon) {
    const auto trip = load_triplet(trip_file);
    require(trip.nu.empty(), errc::invalid_argument, "the closed form needs nu = 0");
    std::optional<double> T;
    if (horizon != "inf") {
        try {
            T = std::stod(horizon);
        } catch (const std::exception&) {
            throw error(errc::invalid_argument, "horizon must be a number or 'inf'");
        }
    }
    const double p = extinction_prob(trip.alpha, trip.beta, s, x, T);
    if (as_json())
        emit_json("extinction.json", {{"s", s}, {"x", x}, {"horizon", T ? json(*T) : json("inf")}, {"probability", p}});
    else
        emit("extinction.csv", "s,x,horizon,probability\n" + csv_row({fmt_double(s), fmt_double(x), T ? fmt_double(*T) : "inf", fmt_double(p)}));
}

void cmd_mc(const std::string& env_file, double x, double s, double t, const std::vector<double>& lams, bool dump) {
    const auto env = load_environment(env_file);
    const auto z0 = static_cast<std::uint64_t>(std::llround(x * env.n()));
    SimOptions o;
    o.start_gen = env.gamma(s);
    o.threads = common.threads;
    const auto b = simulate(env, z0, env.gamma(t), common.seed, common.paths, o);
    const auto sum = summarize(b);
    if (sum.overflowed == sum.paths) throw error(errc::all_paths_overflowed, "all " + std::to_string(sum.paths) + " paths exceeded the population cap");
    json lap = json::array();
    for (double lam : lams) {
        const auto e = empirical_laplace(b, t, lam);
        lap.push_back({{"t", t}, {"lambda", lam}, {"mean", e.mean}, {"se", e.se}});
    }
    if (as_json()) {
        auto j = to_json(sum);
        j["z0"] = z0;
        j["seed"] = common.seed;
        if (!lams.empty()) j["laplace"] = lap;
        emit_json("batch.json", j);
    } else {
        std::string c = "generation,t,mean,se\n";
        for (std::size_t k = 0; k < sum.gens.size(); ++k)
            c += csv_row({std::to_string(sum.gens[k]), fmt_double(env.time_of(sum.gens[k])), fmt_double(sum.means[k]), fmt_double(sum.se[k])});
        emit("batch.csv", c);
        if (!common.out.empty()) emit_json("batch.json", to_json(sum));
        if (!lams.empty()) {
            std::string l = "t,lambda,mean,se\n";
            for (const auto& e : lap) l += csv_row({fmt_double(e["t"]), fmt_double(e["lambda"]), fmt_double(e["mean"]), fmt_double(e["se"])});
            emit("laplace.csv", l);
        }
    }
    if (sum.overflowed) std::cerr << "warning: " << sum.overflowed << " paths overflowed and were excluded\n";
    if (dump) {
        require(!common.out.empty(), errc::invalid_argument, "--dump-paths needs --out");
        std::ostringstream os;
        write_paths_csv(os, b);
        emit("paths.csv", os.str());
    }
}

void cmd_compare(const std::string& scen, std::vector<double> grid, double t, double lam, std::size_t mc_paths) {
    const auto spec = resolve_scenario(scen);
    if (grid.empty()) grid = spec.n_grid;
    const auto first = build(spec, grid.front());
    const double u = solve_u(first.trip, t, lam, solver_options(0.0)).value(0.0);
    struct Row {
        double n, un, err, mc_mean = std::nan(""), mc_se = std::nan("");
    };
    std::vector<Row> rows;
    for (double n : grid) {
        const auto inst = build(spec, n);
        Row r{n, u_n(inst.env, 0.0, t, lam), 0.0};
        r.err = std::abs(r.un - u);
        if (mc_paths > 0) {
            SimOptions o;
            o.threads = common.threads;
            o.record = {inst.env.gamma(t)};
            const auto b = simulate(inst.env, static_cast<std::uint64_t>(std::llround(n)), inst.env.gamma(t), common.seed, mc_paths, o);
            const auto e = empirical_laplace(b, t, lam);
            r.mc_mean = e.mean, r.mc_se = e.se;
        }
        rows.push_back(r);
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < rows.size(); ++k) decreasing = decreasing && rows[k].err < rows[k - 1].err;
    const std::string trend = rows.size() < 2 ? "none" : decreasing ? "strictly_decreasing" : "not_decreasing";
    std::cerr << "limit u = " << fmt_double(u) << ", error trend: " << trend << '\n';
    if (as_json()) {
        json rs = json::array();
        for (const auto& r : rows) {
            json row{{"n", r.n}, {"u_n", r.un}, {"abs_err", r.err}};
            if (mc_paths > 0) row["mc_mean"] = r.mc_mean, row["mc_se"] = r.mc_se, row["exp_minus_u_n"] = std::exp(-r.un);
            rs.push_back(row);
        }
        emit_json("compare.json", {{"scenario", scen}, {"t", t}, {"lambda", lam}, {"u", u}, {"trend", trend}, {"rows", rs}});
        return;
    }
    std::string c = "n,u_n,abs_err,mc_mean,mc_se\n";
    for (const auto& r : rows)
        c += csv_row({fmt_double(r.n), fmt_double(r.un), fmt_double(r.err), mc_paths ? fmt_double(r.mc_mean) : "", mc_paths ? fmt_double(r.mc_se) : ""});
    emit("compare.csv", c);
}

void cmd_scenario_list() {
    const auto all = builtin_scenarios();
    if (as_json()) {
        json j = json::array();
        for (const auto& b : all) j.push_back({{"name", b.name}, {"description", b.description}, {"spec", to_json(b.spec)}});
        emit_json("scenarios.json", j);
        return;
    }
    std::string c = "name,kind,description\n";
    for (const auto& b : all) c += csv_row({b.name, to_string(b.spec.kind), "\"" + b.description + "\""});
    emit("scenarios.csv", c);
}

void cmd_scenario_run(const std::string& scen, double n, double t, double lam) {
    const auto spec = resolve_scenario(scen);
    if (n <= 0.0) n = spec.n_grid.back();
    if (t <= 0.0) t = spec.horizon;
    const auto inst = build(spec, n);
    const double un = u_n(inst.env, 0.0, t, lam);
    const auto sol = solve_u(inst.trip, t, lam, solver_options(0.0));
    std::optional<double> u;
    if (!sol.possible_bottleneck) u = sol.value(0.0);
    json j{{"scenario", scen},
           {"kind", to_string(spec.kind)},
           {"n", n},
           {"t", t},
           {"lambda", lam},
           {"generations", inst.env.gamma(t)},
           {"u_n", un},
           {"u", u ? json(*u) : json(nullptr)},
           {"abs_err", u ? json(std::abs(un - *u)) : json(nullptr)},
           {"solver_domain_start", sol.domain_start},
           {"conservative", inst.expect.conservative},
           {"bottleneck", inst.expect.bottleneck ? json(*inst.expect.bottleneck) : json(nullptr)},
           {"note", inst.expect.note}};
    if (!common.out.empty()) {
        emit_json("spec.json", to_json(spec));
        emit_json("environment.json", to_json(inst.env));
        emit_json("triplet.json", to_json(inst.trip));
    }
    if (as_json()) {
        emit_json("run.json", j);
        return;
    }
    emit("run.csv", "scenario,kind,n,t,lambda,generations,u_n,u,abs_err\n" +
                        csv_row({scen, to_string(spec.kind), fmt_double(n), fmt_double(t), fmt_double(lam), std::to_string(inst.env.gamma(t)), fmt_double(un),
                                 u ? fmt_double(*u) : "", u ? fmt_double(std::abs(un - *u)) : ""}));
    if (!u) std::cerr << "limit not evaluated at s = 0: possible bottleneck, solver domain starts at " << fmt_double(sol.domain_start) << '\n';
}

// Environments from files, or the scenario's family over its n-grid.
std::vector<EnvironmentModel> family_of(const std::string& scen, const std::vector<std::string>& files, LimitTriplet* trip) {
    std::vector<EnvironmentModel> fam;
    if (!scen.empty()) {
        const auto spec = resolve_scenario(scen);
        for (double n : spec.n_grid) {
            auto inst = build(spec, n);
            if (trip) *trip = inst.trip;
            fam.push_back(std::move(inst.env));
        }
    }
    for (const auto& f : files) fam.push_back(load_environment(f));
    require(!fam.empty(), errc::invalid_argument, "give environment files or --scenario");
    return fam;
}

void cmd_check_b1(const std::string& scen, const std::vector<std::string>& files, const std::vector<double>& xs) {
    const auto fam = family_of(scen, files, nullptr);
    const auto rep = check_B1(fam, xs);
    if (as_json()) {
        json rows = json::array();
        for (const auto& r : rep.rows) rows.push_back({{"n", r.n}, {"Gamma", r.Gamma}, {"a", r.a}, {"b", r.b}, {"F_tail", r.F_tail}});
        emit_json("b1.json", {{"x", xs}, {"rows", rows}, {"cauchy_a", rep.cauchy_a}, {"cauchy_b", rep.cauchy_b}, {"cauchy_F", rep.cauchy_F},
                              {"tail_log_slope", std::isnan(rep.tail_log_slope) ? json(nullptr) : json(rep.tail_log_slope)}});
        return;
    }
    std::string head = "n,Gamma,a,b";
    for (double x : xs) head += ",F_tail_" + fmt_double(x);
    std::string c = head + "\n";
    for (const auto& r : rep.rows) c += fmt_double(r.n) + "," + fmt_double(r.Gamma) + "," + fmt_double(r.a) + "," + fmt_double(r.b) + (xs.empty() ? "" : "," + join(r.F_tail)) + "\n";
    emit("b1.csv", c);
    std::cerr << "tail log slope " << fmt_double(rep.tail_log_slope) << '\n';
}

void cmd_check_a1a2(const std::string& scen, const std::vector<std::string>& files, const std::string& trip_file, const std::vector<double>& times,
                    const std::vector<double>& xs) {
    LimitTriplet trip;
    auto fam = family_of(scen, files, &trip);
    if (!trip_file.empty()) trip = load_triplet(trip_file);
    require(!scen.empty() || !trip_file.empty(), errc::invalid_argument, "a1a2 needs --scenario or --triplet");
    const auto rep = assumption_diagnostics(fam, trip, times, xs);
    if (as_json()) {
        json a1 = json::array(), a2 = json::array();
        for (const auto& r : rep.a1)
            a1.push_back({{"n", r.n}, {"t", r.t}, {"err_alpha", r.err_alpha}, {"err_tv_alpha", r.err_tv_alpha}, {"err_beta", r.err_beta}, {"err_tail", r.err_tail}});
        for (const auto& r : rep.a2)
            a2.push_back({{"n", r.n}, {"tau", r.tau}, {"generation", r.generation}, {"err_alpha", r.err_alpha}, {"err_beta", r.err_beta}, {"err_tail", r.err_tail}});
        emit_json("a1a2.json", {{"times", times}, {"x", xs}, {"a1", a1}, {"a2", a2}, {"max_error_per_n", rep.max_error_per_n},
                                {"monotone_decrease", rep.monotone_decrease}});
        return;
    }
    std::string c = "n,t,err_alpha,err_tv_alpha,err_beta,max_err_tail\n";
    auto mx = [](const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); };
    for (const auto& r : rep.a1) c += csv_row({fmt_double(r.n), fmt_double(r.t), fmt_double(r.err_alpha), fmt_double(r.err_tv_alpha), fmt_double(r.err_beta), fmt_double(mx(r.err_tail))});
    emit("a1.csv", c);
    std::string d = "n,tau,generation,err_alpha,err_beta,max_err_tail\n";
    for (const auto& r : rep.a2) d += csv_row({fmt_double(r.n), fmt_double(r.tau), std::to_string(r.generation), fmt_double(r.err_alpha), fmt_double(r.err_beta), fmt_double(mx(r.err_tail))});
    emit("a2.csv", d);
    std::cerr << "errors " << (rep.monotone_decrease ? "decrease" : "do not decrease") << " along n\n";
}

void cmd_check_bottleneck(const std::string& env_file, double t, const std::vector<double>& Cs) {
    const auto env = load_environment(env_file);
    const auto rows = check_no_bottleneck(env, t, Cs);
    if (as_json()) {
        json j = json::array();
        for (const auto& r : rows) j.push_back({{"C", r.C}, {"inf_truncated_mean", r.inf_truncated_mean}, {"argmin", r.argmin}});
        emit_json("bottleneck.json", {{"t", t}, {"rows", j}});
        return;
    }
    std::string c = "C,inf_truncated_mean,argmin\n";
    for (const auto& r : rows) c += csv_row({fmt_double(r.C), fmt_double(r.inf_truncated_mean), std::to_string(r.argmin)});
    emit("bottleneck.csv", c);
}

void cmd_check_moment(const std::string& env_file, double t) {
    const auto env = load_environment(env_file);
    const double v = check_first_moment(env, t);
    if (as_json())
        emit_json("moment.json", {{"t", t}, {"first_moment", v}});
    else
        emit("moment.csv", "t,first_moment\n" + csv_row({fmt_double(t), fmt_double(v)}));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Galton-Watson processes in varying environment: discrete Laplace exponents, scaling limits and Monte Carlo"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--tol", common.tol, "solver tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--mesh", common.mesh, "solver mesh step; 0 means (t - s) / 2048")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--seed", common.seed, "Monte Carlo seed")->capture_default_str();
    app.add_option("--paths", common.paths, "Monte Carlo paths")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--threads", common.threads, "Monte Carlo threads (results do not depend on it)")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", common.out, "write result files into this directory instead of stdout");
    app.add_option("--format", common.format, "output format")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));

    std::string file, scen, horizon = "inf", trip_file;
    double s = 0.0, t = 1.0, lam = 1.0, x = 1.0, s_lo = 0.0, n = 0.0, run_t = 0.0;
    std::vector<double> xs, grid, times, Cs{1.0};
    std::vector<std::string> items, files;
    bool table = false, dump = false, ode = false, picard = false, both = false;
    std::size_t mc_paths = 0;
    std::vector<double> lams;

    auto* triplet = app.add_subcommand("triplet", "cumulative triplet of an environment up to t, plus the per-generation table");
    triplet->add_option("env", file, "environment JSON")->required();
    triplet->add_option("--t", t)->capture_default_str();
    triplet->add_option("--x", xs, "points x for nu_n([x, inf) x (0, t])");

    auto* un = app.add_subcommand("un", "u_n(s, t, lambda) by backward recursion");
    un->add_option("env", file)->required();
    un->add_option("--s", s)->capture_default_str();
    un->add_option("--t", t)->capture_default_str();
    un->add_option("--lambda", lam)->capture_default_str();
    un->add_flag("--table", table, "also write the per-generation table i, t_i, u");

    auto* profile = app.add_subcommand("profile", "y -> u_n(y, t, lambda) on [s-lo, t]");
    profile->add_option("env", file)->required();
    profile->add_option("--t", t)->capture_default_str();
    profile->add_option("--lambda", lam)->capture_default_str();
    profile->add_option("--s-lo", s_lo)->capture_default_str();

    auto* solve = app.add_subcommand("solve", "solve the limit equation for u(., t, lambda)");
    solve->add_option("triplet", file, "triplet JSON")->required();
    solve->add_option("--s", s)->capture_default_str();
    solve->add_option("--t", t)->capture_default_str();
    solve->add_option("--lambda", lam)->capture_default_str();
    auto* f_ode = solve->add_flag("--ode", ode, "RK4 sweep only");
    auto* f_picard = solve->add_flag("--picard", picard, "Picard iteration only");
    auto* f_both = solve->add_flag("--both", both, "both, asserting agreement (default)");
    f_ode->excludes(f_picard)->excludes(f_both);
    f_picard->excludes(f_both);

    auto* fdd = app.add_subcommand("fdd", "E exp(-sum lambda_i X(t_i)) under X(s) = x");
    fdd->add_option("triplet", file)->required();
    fdd->add_option("--s", s)->capture_default_str();
    fdd->add_option("--x", x)->capture_default_str();
    fdd->add_option("--pair", items, "t:lambda, repeatable, times increasing")->required();

    auto* feller = app.add_subcommand("feller", "closed-form u for nu = 0");
    feller->add_option("triplet", file)->required();
    feller->add_option("--s", s)->capture_default_str();
    feller->add_option("--t", t)->capture_default_str();
    feller->add_option("--lambda", lam)->capture_default_str();

    auto* ext = app.add_subcommand("extinction", "P(X(T) = 0 | X(s) = x) for nu = 0");
    ext->add_option("triplet", file)->required();
    ext->add_option("--s", s)->capture_default_str();
    ext->add_option("--x", x)->capture_default_str();
    ext->add_option("--horizon", horizon, "T, or inf for eventual extinction")->capture_default_str();

    auto* mc = app.add_subcommand("mc", "simulate Z from round(x n) individuals at generation gamma(s) up to gamma(t)");
    mc->add_option("env", file)->required();
    mc->add_option("--x", x)->capture_default_str();
    mc->add_option("--s", s)->capture_default_str();
    mc->add_option("--t", t)->capture_default_str();
    mc->add_option("--lambda", lams, "also estimate E exp(-lambda Z_{gamma(t)} / n)");
    mc->add_flag("--dump-paths", dump, "write paths.csv into --out");

    auto* compare = app.add_subcommand("compare", "u_n(0, t, lambda) along an n-grid against the limit u");
    compare->add_option("scenario", scen, "built-in name or scenario JSON")->required();
    compare->add_option("--n-grid", grid, "defaults to the scenario's grid");
    compare->add_option("--t", t)->capture_default_str();
    compare->add_option("--lambda", lam)->capture_default_str();
    compare->add_option("--mc", mc_paths, "add a Monte Carlo column with this many paths");

    auto* scenario = app.add_subcommand("scenario", "built-in and file scenarios");
    scenario->require_subcommand(1);
    auto* s_list = scenario->add_subcommand("list", "list built-in scenarios");
    auto* s_run = scenario->add_subcommand("run", "build a scenario at one n and compare u_n with u");
    s_run->add_option("scenario", scen)->required();
    s_run->add_option("--n", n, "defaults to the last grid value");
    s_run->add_option("--t", run_t, "defaults to the horizon");
    s_run->add_option("--lambda", lam)->capture_default_str();

    auto* check = app.add_subcommand("check", "assumption diagnostics");
    check->require_subcommand(1);
    auto* c_b1 = check->add_subcommand("b1", "constant-law characteristics along a family");
    c_b1->add_option("envs", files, "environment JSON files, increasing n");
    c_b1->add_option("--scenario", scen);
    c_b1->add_option("--x", xs, "tail probe points");
    auto* c_a = check->add_subcommand("a1a2", "convergence of the cumulative triplet and of its atoms");
    c_a->add_option("envs", files);
    c_a->add_option("--scenario", scen);
    c_a->add_option("--triplet", trip_file);
    c_a->add_option("--times", times, "times t for the cumulative errors")->required();
    c_a->add_option("--x", xs, "tail probe points");
    auto* c_bn = check->add_subcommand("bottleneck", "inf over generations of E(xi; xi <= C n)");
    c_bn->add_option("env", file)->required();
    c_bn->add_option("--t", t)->capture_default_str();
    c_bn->add_option("--C", Cs)->capture_default_str();
    auto* c_m = check->add_subcommand("moment", "first absolute moment n sum_i E|xi_i/n - 1/n| over generations up to gamma(t)");
    c_m->add_option("env", file)->required();
    c_m->add_option("--t", t)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*triplet) cmd_triplet(file, t, xs);
        else if (*un) cmd_un(file, s, t, lam, table);
        else if (*profile) cmd_profile(file, t, lam, s_lo);
        else if (*solve) cmd_solve(file, s, t, lam, ode ? SolveMode::ode : picard ? SolveMode::picard : SolveMode::both);
        else if (*fdd) cmd_fdd(file, s, x, items);
        else if (*feller) cmd_feller(file, s, t, lam);
        else if (*ext) cmd_extinction(file, s, x, horizon);
        else if (*mc) cmd_mc(file, x, s, t, lams, dump);
        else if (*compare) cmd_compare(scen, grid, t, lam, mc_paths);
        else if (*s_list) cmd_scenario_list();
        else if (*s_run) cmd_scenario_run(scen, n, run_t, lam);
        else if (*c_b1) cmd_check_b1(scen, files, xs);
        else if (*c_a) cmd_check_a1a2(scen, files, trip_file, times, xs);
        else if (*c_bn) cmd_check_bottleneck(file, t, Cs);
        else if (*c_m) cmd_check_moment(file, t);
    } catch (const error& e) {
        std::cerr << "gwve: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const json::exception& e) {
        std::cerr << "gwve: ParseError: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gwve: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
