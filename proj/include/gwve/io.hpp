#pragma once

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <rapidjson/error/en.h>
#include <rapidjson/reader.h>

#include "discrete_laplace.hpp"
#include "environment.hpp"
#include "limit_solver.hpp"
#include "measures.hpp"
#include "montecarlo.hpp"
#include "scenarios.hpp"

namespace gwve {

using json = nlohmann::json;

namespace detail {

// rapidjson input stream that tracks the current line.
class LineStream {
public:
    using Ch = char;
    explicit LineStream(const std::string& s) : s_(s) {}
    Ch Peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    Ch Take() {
        if (pos_ >= s_.size()) return '\0';
        const Ch c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }
    std::size_t Tell() const { return pos_; }
    Ch* PutBegin() { return nullptr; }
    void Put(Ch) {}
    void Flush() {}
    std::size_t PutEnd(Ch*) { return 0; }
    std::size_t line() const { return line_; }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

// Records the line of every value, keyed by JSON pointer.
class LineIndexer : public rapidjson::BaseReaderHandler<rapidjson::UTF8<>, LineIndexer> {
public:
    LineIndexer(const LineStream& is, std::map<std::string, std::size_t>& out) : is_(is), out_(out) {}

    bool Default() { return value(); }
    bool String(const char*, rapidjson::SizeType, bool) { return value(); }
    bool StartObject() {
        value();
        stack_.push_back({false, 0, {}, path()});
        return true;
    }
    bool Key(const char* s, rapidjson::SizeType len, bool) {
        stack_.back().key = escape(std::string(s, len));
        return true;
    }
    bool EndObject(rapidjson::SizeType) {
        stack_.pop_back();
        return true;
    }
    bool StartArray() {
        value();
        stack_.push_back({true, 0, {}, path()});
        return true;
    }
    bool EndArray(rapidjson::SizeType) {
        stack_.pop_back();
        return true;
    }

private:
    struct Frame {
        bool array;
        std::size_t index;
        std::string key;
        std::string base;
    };

    static std::string escape(const std::string& k) {
        std::string r;
        for (char c : k) r += c == '~' ? "~0" : c == '/' ? "~1" : std::string(1, c);
        return r;
    }

    std::string path() const { return last_; }

    bool value() {
        if (stack_.empty()) {
            last_ = "";
        } else {
            auto& f = stack_.back();
            last_ = f.base + "/" + (f.array ? std::to_string(f.index++) : f.key);
        }
        out_.emplace(last_, is_.line());
        return true;
    }

    const LineStream& is_;
    std::map<std::string, std::size_t>& out_;
    std::vector<Frame> stack_;
    std::string last_;
};

} // namespace detail

// A parsed JSON document that remembers the source line of every value.
class JsonSource {
public:
    JsonSource(std::string text, std::string name) : name_(std::move(name)) {
        detail::LineStream is(text);
        detail::LineIndexer h(is, lines_);
        rapidjson::Reader reader;
        const auto res = reader.Parse<rapidjson::kParseFullPrecisionFlag>(is, h);
        if (res.IsError()) {
            const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(res.Offset(), text.size()), '\n'));
            throw error(errc::parse_error, name_ + ":" + std::to_string(line) + ": " + rapidjson::GetParseError_En(res.Code()));
        }
        root_ = json::parse(text);
    }

    static JsonSource from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        require(static_cast<bool>(in), errc::parse_error, "cannot open '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return JsonSource(ss.str(), path);
    }

    const json& root() const { return root_; }
    const std::string& name() const { return name_; }

    std::size_t line(const std::string& ptr) const {
        for (std::string p = ptr;; p = p.substr(0, p.rfind('/'))) {
            const auto it = lines_.find(p);
            if (it != lines_.end()) return it->second;
            if (p.empty()) return 1;
        }
    }

    [[noreturn]] void fail(const std::string& ptr, const std::string& msg, errc code = errc::parse_error) const {
        throw error(code, name_ + ":" + std::to_string(line(ptr)) + ": " + msg + (ptr.empty() ? "" : " (at " + ptr + ")"));
    }

private:
    std::string name_;
    json root_;
    std::map<std::string, std::size_t> lines_;
};

// Typed access into a JsonSource at a JSON pointer; semantic errors carry the line.
class Node {
public:
    Node(const JsonSource& src, const json& v, std::string ptr) : src_(&src), v_(&v), ptr_(std::move(ptr)) {}
    explicit Node(const JsonSource& src) : Node(src, src.root(), "") {}

    const json& raw() const { return *v_; }
    const std::string& pointer() const { return ptr_; }
    [[noreturn]] void fail(const std::string& msg, errc code = errc::parse_error) const { src_->fail(ptr_, msg, code); }

    bool has(const std::string& key) const { return v_->is_object() && v_->contains(key); }

    Node operator[](const std::string& key) const {
        if (!v_->is_object()) fail("expected an object");
        const auto it = v_->find(key);
        if (it == v_->end()) fail("missing key '" + key + "'");
        return {*src_, *it, ptr_ + "/" + key};
    }

    Node operator[](std::size_t i) const { return {*src_, v_->at(i), ptr_ + "/" + std::to_string(i)}; }

    std::size_t size() const {
        if (!v_->is_array()) fail("expected an array");
        return v_->size();
    }

    // Numbers; null, "inf" and "-inf" map to infinities when allowed.
    double number(bool allow_inf = false) const {
        if (v_->is_number()) return v_->get<double>();
        if (allow_inf && v_->is_null()) return inf;
        if (allow_inf && v_->is_string()) {
            const auto s = v_->get<std::string>();
            if (s == "inf") return inf;
            if (s == "-inf") return -inf;
        }
        fail(allow_inf ? "expected a number, null or \"inf\"" : "expected a number");
    }

    std::uint64_t count() const {
        if (v_->is_number_unsigned()) return v_->get<std::uint64_t>();
        if (v_->is_number_float()) {
            const double d = v_->get<double>();
            if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
        }
        fail("expected a nonnegative integer");
    }

    std::string string() const {
        if (!v_->is_string()) fail("expected a string");
        return v_->get<std::string>();
    }

    std::vector<double> numbers(bool allow_inf = false) const {
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number(allow_inf));
        return out;
    }

    double number_or(const std::string& key, double def) const { return has(key) ? (*this)[key].number() : def; }

    // Runs f, re-raising library errors at this node's line.
    template <class F>
    auto guard(F&& f) const -> decltype(f()) {
        try {
            return f();
        } catch (const error& e) {
            if (e.code() == errc::parse_error) throw;
            src_->fail(ptr_, e.detail(), e.code());
        }
    }

private:
    const JsonSource* src_;
    const json* v_;
    std::string ptr_;
};

// ---- Lévy measures ----

inline LevyMeasure read_levy_measure(const Node& n) {
    if (n.raw().is_array()) {
        LevyMeasure m;
        for (std::size_t i = 0; i < n.size(); ++i) m += read_levy_measure(n[i]);
        return m;
    }
    const std::string type = n["type"].string();
    if (type == "atoms") {
        std::vector<LevyAtom> list;
        const Node as = n["atoms"];
        for (std::size_t i = 0; i < as.size(); ++i) list.push_back({as[i]["x"].number(), as[i]["mass"].number()});
        return n.guard([&] { return LevyMeasure::atoms(list); });
    }
    if (type == "power_tail") {
        const double index = n["index"].number(), scale = n["scale"].number();
        return n.guard([&] { return LevyMeasure::power_tail(index, scale); });
    }
    if (type == "zero") return {};
    n["type"].fail("unknown measure type '" + type + "'", errc::unknown_kind);
}

inline json to_json(const LevyMeasure& m) {
    json terms = json::array();
    if (!m.atom_list().empty()) {
        json as = json::array();
        for (const auto& a : m.atom_list()) as.push_back({{"x", a.x}, {"mass", a.mass}});
        terms.push_back({{"type", "atoms"}, {"atoms", as}});
    }
    for (const auto& t : m.tails()) terms.push_back({{"type", "power_tail"}, {"index", t.index}, {"scale", t.scale}});
    if (terms.empty()) return {{"type", "zero"}};
    if (terms.size() == 1) return terms[0];
    return terms;
}

// ---- measures in time ----

inline std::vector<Atom> read_atoms(const Node& n) {
    std::vector<Atom> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back({n[i]["time"].number(), n[i]["mass"].number()});
    return out;
}

inline PiecewiseSignedMeasure read_signed_measure(const Node& n) {
    const auto bps = n["breakpoints"].numbers();
    const auto rates = n["rates"].numbers();
    const auto atoms = n.has("atoms") ? read_atoms(n["atoms"]) : std::vector<Atom>{};
    return n.guard([&] { return PiecewiseSignedMeasure(bps, rates, atoms); });
}

inline MonotoneMeasure read_monotone_measure(const Node& n) {
    auto m = read_signed_measure(n);
    return n.guard([&] { return MonotoneMeasure(std::move(m)); });
}

inline json to_json(const PiecewiseSignedMeasure& m) {
    json atoms = json::array();
    for (const auto& a : m.atoms()) atoms.push_back({{"time", a.time}, {"mass", a.mass}});
    return {{"breakpoints", m.breakpoints()}, {"rates", m.rates()}, {"atoms", atoms}};
}

inline LevyKernel read_kernel(const Node& n) {
    std::vector<HomogeneousPiece> hom;
    std::vector<FixedAtom> fixed;
    if (n.has("homogeneous")) {
        const Node hs = n["homogeneous"];
        for (std::size_t i = 0; i < hs.size(); ++i) {
            const Node iv = hs[i]["interval"];
            if (iv.size() != 2) iv.fail("interval must have two entries");
            hom.push_back({iv[0].number(), iv[1].number(true), read_levy_measure(hs[i]["measure"])});
        }
    }
    if (n.has("fixed_atoms")) {
        const Node fs = n["fixed_atoms"];
        for (std::size_t i = 0; i < fs.size(); ++i) fixed.push_back({fs[i]["time"].number(), read_levy_measure(fs[i]["measure"])});
    }
    return n.guard([&] { return LevyKernel(hom, fixed); });
}

inline json to_json(const LevyKernel& k) {
    json hom = json::array(), fixed = json::array();
    for (const auto& p : k.homogeneous())
        hom.push_back({{"interval", {p.lo, std::isinf(p.hi) ? json(nullptr) : json(p.hi)}}, {"measure", to_json(p.F)}});
    for (const auto& a : k.fixed_atoms()) fixed.push_back({{"time", a.time}, {"measure", to_json(a.G)}});
    return {{"homogeneous", hom}, {"fixed_atoms", fixed}};
}

// Missing components default to zero. The result satisfies validate().
inline LimitTriplet read_triplet(const Node& n) {
    LimitTriplet t;
    if (n.has("alpha")) t.alpha = read_signed_measure(n["alpha"]);
    if (n.has("beta")) t.beta = read_monotone_measure(n["beta"]);
    if (n.has("nu")) t.nu = read_kernel(n["nu"]);
    const Node where = n.has("nu") ? n["nu"] : n.has("beta") ? n["beta"] : n;
    where.guard([&] { validate(t); });
    return t;
}

inline LimitTriplet load_triplet(const std::string& path) {
    const auto src = JsonSource::from_file(path);
    return read_triplet(Node(src));
}

inline json to_json(const LimitTriplet& t) { return {{"alpha", to_json(t.alpha)}, {"beta", to_json(t.beta)}, {"nu", to_json(t.nu)}}; }

// ---- offspring laws and environments ----

inline OffspringLaw read_law(const Node& n) {
    const std::string type = n["type"].string();
    OffspringLaw law;
    if (type == "finite_pmf") {
        FinitePMF f;
        const Node p = n["pmf"];
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i].size() != 2) p[i].fail("pmf entries are [k, probability] pairs");
            f.pmf.push_back({p[i][0].count(), p[i][1].number()});
        }
        law = f;
    } else if (type == "poisson") {
        law = Poisson{n["mean"].number()};
    } else if (type == "dirac") {
        law = Dirac{n["k"].count()};
    } else if (type == "bernoulli01") {
        law = Bernoulli01{n["p"].number()};
    } else if (type == "poissonized_site") {
        law = PoissonizedSite{n["m"].count()};
    } else if (type == "stable_pgf") {
        law = StablePGF{n["a"].number(), n["c"].number()};
    } else {
        n["type"].fail("unknown law type '" + type + "'", errc::unknown_kind);
    }
    n.guard([&] { validate_law(law); });
    return law;
}

inline json to_json(const OffspringLaw& law) {
    return std::visit(
        [](const auto& l) -> json {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, FinitePMF>) {
                json p = json::array();
                for (const auto& [k, q] : l.pmf) p.push_back({k, q});
                return {{"type", "finite_pmf"}, {"pmf", p}};
            } else if constexpr (std::is_same_v<T, Poisson>) {
                return {{"type", "poisson"}, {"mean", l.mean}};
            } else if constexpr (std::is_same_v<T, Dirac>) {
                return {{"type", "dirac"}, {"k", l.k}};
            } else if constexpr (std::is_same_v<T, Bernoulli01>) {
                return {{"type", "bernoulli01"}, {"p", l.p}};
            } else if constexpr (std::is_same_v<T, PoissonizedSite>) {
                return {{"type", "poissonized_site"}, {"m", l.m}};
            } else {
                return {{"type", "stable_pgf"}, {"a", l.a}, {"c", l.c}};
            }
        },
        law);
}

inline EnvironmentModel read_environment(const Node& n) {
    const double scale = n["n"].number();
    const Node tcn = n["time_change"];
    const std::string type = tcn["type"].string();
    TimeChange tc;
    if (type == "uniform")
        tc = UniformRate{tcn["rate"].number()};
    else if (type == "explicit")
        tc = ExplicitTimes{tcn["times"].numbers()};
    else
        tcn["type"].fail("unknown time change type '" + type + "'", errc::unknown_kind);
    std::vector<Block> blocks;
    const Node bs = n["blocks"];
    for (std::size_t i = 0; i < bs.size(); ++i) blocks.push_back({bs[i]["count"].count(), read_law(bs[i]["law"])});
    TruncationPolicy pol;
    if (n.has("truncation")) {
        const Node t = n["truncation"];
        pol.mass_budget = t.number_or("mass_budget", pol.mass_budget);
        if (t.has("max_atoms")) pol.max_atoms = t["max_atoms"].count();
    }
    return n.guard([&] { return EnvironmentModel(scale, tc, blocks, pol); });
}

inline EnvironmentModel load_environment(const std::string& path) {
    const auto src = JsonSource::from_file(path);
    return read_environment(Node(src));
}

inline json to_json(const EnvironmentModel& env) {
    json tc;
    if (const auto* u = std::get_if<UniformRate>(&env.time_change()))
        tc = {{"type", "uniform"}, {"rate", u->rate}};
    else
        tc = {{"type", "explicit"}, {"times", std::get<ExplicitTimes>(env.time_change()).times}};
    json blocks = json::array();
    for (const auto& b : env.blocks()) blocks.push_back({{"count", b.count}, {"law", to_json(b.law)}});
    return {{"n", env.n()}, {"time_change", tc}, {"blocks", blocks}};
}

// ---- scenario specs ----

// Fields absent from the document keep the defaults of ScenarioSpec.
inline ScenarioSpec read_scenario_spec(const Node& n) {
    ScenarioSpec s;
    if (n.has("builtin")) s = n["builtin"].guard([&] { return builtin_scenario(n["builtin"].string()).spec; });
    if (n.has("kind")) s.kind = n["kind"].guard([&] { return scenario_kind_from(n["kind"].string()); });
    if (n.has("n_grid")) s.n_grid = n["n_grid"].numbers();
    s.horizon = n.number_or("horizon", s.horizon);
    if (n.has("law")) s.law = read_law(n["law"]);
    if (n.has("breakpoints")) s.breakpoints = n["breakpoints"].numbers();
    if (n.has("alpha_rates")) s.alpha_rates = n["alpha_rates"].numbers();
    if (n.has("beta_rates")) s.beta_rates = n["beta_rates"].numbers();
    s.t0 = n.number_or("t0", s.t0);
    s.shift = n.number_or("shift", s.shift);
    s.p_exponent = n.number_or("p_exponent", s.p_exponent);
    s.stable_a = n.number_or("stable_a", s.stable_a);
    s.stable_c = n.number_or("stable_c", s.stable_c);
    if (n.has("law1")) s.law1 = read_law(n["law1"]);
    if (n.has("law2")) s.law2 = read_law(n["law2"]);
    s.p1 = n.number_or("p1", s.p1);
    s.gamma_exponent1 = n.number_or("gamma_exponent1", s.gamma_exponent1);
    s.gamma_exponent2 = n.number_or("gamma_exponent2", s.gamma_exponent2);
    if (n.has("seed")) s.seed = n["seed"].count();
    n.guard([&] { s.validate(); });
    return s;
}

inline ScenarioSpec load_scenario_spec(const std::string& path) {
    const auto src = JsonSource::from_file(path);
    return read_scenario_spec(Node(src));
}

inline json to_json(const ScenarioSpec& s) {
    return {{"kind", to_string(s.kind)},
            {"n_grid", s.n_grid},
            {"horizon", s.horizon},
            {"law", to_json(s.law)},
            {"breakpoints", s.breakpoints},
            {"alpha_rates", s.alpha_rates},
            {"beta_rates", s.beta_rates},
            {"t0", s.t0},
            {"shift", s.shift},
            {"p_exponent", s.p_exponent},
            {"stable_a", s.stable_a},
            {"stable_c", s.stable_c},
            {"law1", to_json(s.law1)},
            {"law2", to_json(s.law2)},
            {"p1", s.p1},
            {"gamma_exponent1", s.gamma_exponent1},
            {"gamma_exponent2", s.gamma_exponent2},
            {"seed", s.seed}};
}

// ---- result exports ----

inline void write_csv(std::ostream& os, const StepTable& tab) {
    os << "i,t_i,u\n";
    for (std::size_t k = 0; k < tab.u.size(); ++k) os << tab.g_lo + k << ',' << fmt_double(tab.times[k]) << ',' << fmt_double(tab.u[k]) << '\n';
}

inline void write_csv(std::ostream& os, const LaplaceSolution& sol) {
    os << "s,u_left,u_right\n";
    for (std::size_t j = 0; j < sol.u.size(); ++j)
        os << fmt_double(sol.u.y[j]) << ',' << fmt_double(sol.u.left[j]) << ',' << fmt_double(sol.u.right[j]) << '\n';
}

inline json metadata_json(const LaplaceSolution& sol) {
    return {{"t", sol.t},
            {"lambda", sol.lambda},
            {"residual", sol.residual},
            {"iterations", sol.iterations},
            {"warnings", sol.warnings},
            {"ode_discrepancy", sol.ode_discrepancy},
            {"error_bound", std::isfinite(sol.error_bound) ? json(sol.error_bound) : json(nullptr)},
            {"domain_start", sol.domain_start},
            {"possible_bottleneck", sol.possible_bottleneck}};
}

inline json to_json(const BatchSummary& s) {
    return {{"paths", s.paths}, {"overflowed", s.overflowed}, {"generations", s.gens}, {"means", s.means}, {"se", s.se}};
}

// One row per path: overflow flag, then Z at each recorded generation.
inline void write_paths_csv(std::ostream& os, const PathBatch& b) {
    os << "path,overflowed";
    for (auto g : b.gens) os << ",z" << g;
    os << '\n';
    for (std::size_t p = 0; p < b.n_paths; ++p) {
        os << p << ',' << int(b.overflowed[p]);
        for (std::size_t c = 0; c < b.gens.size(); ++c) os << ',' << b.at(p, c);
        os << '\n';
    }
}

} // namespace gwve
