#include "decum/config.hpp"
#include "decum/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace decum {

using nlohmann::json;

namespace {

struct Source {
    const std::string& text;
    const std::string& origin;

    // Best-effort line of the first occurrence of a quoted key after the section start.
    std::size_t line_of(const std::string& section, const std::string& key) const {
        std::size_t from = 0;
        if (!section.empty()) {
            const auto s = text.find('"' + section + '"');
            if (s != std::string::npos) from = s;
        }
        auto at = text.find('"' + key + '"', from);
        if (at == std::string::npos) at = from;
        return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(at), '\n'));
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
        const std::string where = section.empty() ? key : section + "." + key;
        throw ConfigError(origin + ":" + std::to_string(line_of(section, key)) + ": '" + where + "': " + msg);
    }
};

class Section {
public:
    Section(const Source& src, const json& root, const std::string& name) : src_(src), name_(name) {
        if (name.empty()) {
            node_ = &root;
        } else if (root.contains(name)) {
            node_ = &root.at(name);
            if (!node_->is_object()) src.fail("", name, "expected an object");
        }
    }

    bool present() const { return node_ != nullptr; }

    template <class T>
    bool get(const std::string& key, T& out) {
        used_.insert(key);
        if (!node_ || !node_->contains(key)) return false;
        try {
            out = node_->at(key).get<T>();
        } catch (const json::exception&) {
            src_.fail(name_, key, std::string("expected ") + expected<T>());
        }
        return true;
    }

    void allow(const std::string& key) { used_.insert(key); }

    void finish() const {
        if (!node_) return;
        for (const auto& item : node_->items()) {
            if (!used_.count(item.key())) src_.fail(name_, item.key(), "unknown key");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const { src_.fail(name_, key, msg); }

private:
    template <class T>
    static const char* expected() {
        if constexpr (std::is_same_v<T, bool>) return "true or false";
        else if constexpr (std::is_same_v<T, std::string>) return "a string";
        else if constexpr (std::is_integral_v<T>) return "an integer";
        else if constexpr (std::is_floating_point_v<T>) return "a number";
        else return "a list of numbers";
    }

    const Source& src_;
    std::string name_;
    const json* node_ = nullptr;
    std::set<std::string> used_;
};

void read_asset(Section& s, const char* suffix, KouJumpParams& p) {
    const std::string x(suffix);
    s.get("mu_" + x, p.mu);
    s.get("sigma_" + x, p.sigma);
    s.get("lambda_" + x, p.lambda);
    s.get("u_" + x, p.u);
    s.get("eta1_" + x, p.eta1);
    s.get("eta2_" + x, p.eta2);
}

template <class F>
void checked(Section& s, const std::string& key, F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        s.fail(key, e.what());
    } catch (const std::domain_error& e) {
        s.fail(key, e.what());
    }
}

} // namespace

void RunConfig::validate() const {
    market.validate();
    scenario.validate();
    objective.validate();
    resolution.validate();
    if (grid_bounds_explicit) grid.validate();
    for (double k : kappas) {
        if (!(k > 0.0)) throw std::invalid_argument("kappa list must be strictly positive");
    }
    bootstrap_spec().validate();
    if (monte_carlo.n_paths < 1) throw std::invalid_argument("monte_carlo.n_paths must be >= 1");
}

GridSpec RunConfig::resolved_grid() const {
    if (grid_bounds_explicit) return grid;
    return GridSpec::localized(grid.n_s, grid.n_b, market, scenario.W0, scenario.T);
}

BootstrapSpec RunConfig::bootstrap_spec() const {
    BootstrapSpec b;
    b.expected_blocksize = bootstrap.expected_blocksize_years * 12.0;
    b.paired = bootstrap.paired;
    b.n_paths = bootstrap.n_paths;
    b.seed = bootstrap.seed.value_or(seed);
    return b;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw ConfigError(origin + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin + ":1: the config must be a JSON object");
    const Source src{text, origin};
    RunConfig c;

    Section top(src, root, "");
    for (const char* k : {"market", "scenario", "grid", "objective", "frontier", "es_search", "controls",
                          "monte_carlo", "bootstrap"}) {
        top.allow(k);
    }
    top.get("output_dir", c.output_dir);
    top.get("seed", c.seed);
    top.finish();
    c.monte_carlo.seed = c.seed;

    Section market(src, root, "market");
    read_asset(market, "s", c.market.stock);
    read_asset(market, "b", c.market.bond);
    market.get("rho_sb", c.market.rho_sb);
    market.get("mu_c_b", c.market.mu_c_b);
    market.finish();
    checked(market, "mu_s", [&] { c.market.validate(); });

    Section sc(src, root, "scenario");
    sc.get("T", c.scenario.T);
    sc.get("M", c.scenario.M);
    sc.get("W0", c.scenario.W0);
    sc.get("q_min", c.scenario.q_min);
    sc.get("q_max", c.scenario.q_max);
    sc.get("p_min", c.scenario.p_min);
    sc.get("p_max", c.scenario.p_max);
    sc.get("epsilon", c.scenario.epsilon);
    sc.get("real_estate", c.scenario.real_estate);
    sc.finish();
    checked(sc, "T", [&] { c.scenario.validate(); });

    Section grid(src, root, "grid");
    grid.get("n_s", c.grid.n_s);
    grid.get("n_b", c.grid.n_b);
    int bounds = 0;
    bounds += grid.get("s_min", c.grid.s_min);
    bounds += grid.get("s_max", c.grid.s_max);
    bounds += grid.get("b_min", c.grid.b_min);
    bounds += grid.get("b_max", c.grid.b_max);
    grid.finish();
    if (bounds != 0 && bounds != 4) grid.fail("s_min", "give all four bounds or none");
    c.grid_bounds_explicit = bounds == 4;
    checked(grid, "n_s", [&] { c.resolved_grid().validate(); });

    Section obj(src, root, "objective");
    std::string risk = to_string(c.objective.kind);
    obj.get("risk", risk);
    obj.get("W_target", c.objective.W_target);
    obj.get("alpha", c.objective.alpha);
    obj.get("kappa", c.objective.kappa);
    obj.finish();
    checked(obj, "risk", [&] { c.objective.kind = risk_kind_from_string(risk); });
    checked(obj, "kappa", [&] { c.objective.validate(); });
    c.monte_carlo.alpha = c.objective.alpha;
    c.monte_carlo.W_target = c.objective.kind == RiskKind::ES ? 0.0 : c.objective.W_target;

    Section fr(src, root, "frontier");
    fr.get("kappas", c.kappas);
    fr.finish();
    for (double k : c.kappas) {
        if (!(k > 0.0)) fr.fail("kappas", "every kappa must be > 0");
    }

    Section es(src, root, "es_search");
    es.get("lo", c.es_search.lo);
    es.get("hi", c.es_search.hi);
    es.get("scan_points", c.es_search.scan_points);
    es.get("tolerance", c.es_search.tolerance);
    es.finish();
    if (!(c.es_search.hi > c.es_search.lo) || c.es_search.scan_points < 3 || !(c.es_search.tolerance > 0.0)) {
        es.fail("lo", "need lo < hi, scan_points >= 3 and tolerance > 0");
    }

    Section ctl(src, root, "controls");
    ctl.get("n_q", c.resolution.n_q);
    ctl.get("n_p", c.resolution.n_p);
    ctl.finish();
    checked(ctl, "n_q", [&] { c.resolution.validate(); });

    Section mc(src, root, "monte_carlo");
    mc.get("n_paths", c.monte_carlo.n_paths);
    mc.get("seed", c.monte_carlo.seed);
    mc.get("alpha", c.monte_carlo.alpha);
    mc.get("W_target", c.monte_carlo.W_target);
    mc.get("fan_paths", c.monte_carlo.fan_paths);
    mc.get("threads", c.monte_carlo.threads);
    mc.finish();
    if (c.monte_carlo.n_paths < 1) mc.fail("n_paths", "must be >= 1");
    if (!(c.monte_carlo.alpha > 0.0 && c.monte_carlo.alpha < 1.0)) mc.fail("alpha", "need 0 < alpha < 1");

    Section bs(src, root, "bootstrap");
    bs.get("returns", c.bootstrap.returns);
    bs.get("expected_blocksize_years", c.bootstrap.expected_blocksize_years);
    bs.get("paired", c.bootstrap.paired);
    bs.get("n_paths", c.bootstrap.n_paths);
    std::uint64_t bseed = 0;
    if (bs.get("seed", bseed)) c.bootstrap.seed = bseed;
    bs.finish();
    checked(bs, "expected_blocksize_years", [&] { c.bootstrap_spec().validate(); });

    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path);
}

std::string dump_config(const RunConfig& c) {
    const auto asset = [](json& j, const char* x, const KouJumpParams& p) {
        const std::string s(x);
        j["mu_" + s] = p.mu;
        j["sigma_" + s] = p.sigma;
        j["lambda_" + s] = p.lambda;
        j["u_" + s] = p.u;
        j["eta1_" + s] = p.eta1;
        j["eta2_" + s] = p.eta2;
    };
    json market;
    asset(market, "s", c.market.stock);
    asset(market, "b", c.market.bond);
    market["rho_sb"] = c.market.rho_sb;
    market["mu_c_b"] = c.market.mu_c_b;
    json grid{{"n_s", c.grid.n_s}, {"n_b", c.grid.n_b}};
    if (c.grid_bounds_explicit) {
        grid["s_min"] = c.grid.s_min;
        grid["s_max"] = c.grid.s_max;
        grid["b_min"] = c.grid.b_min;
        grid["b_max"] = c.grid.b_max;
    }
    json boot{{"returns", c.bootstrap.returns},
              {"expected_blocksize_years", c.bootstrap.expected_blocksize_years},
              {"paired", c.bootstrap.paired},
              {"n_paths", c.bootstrap.n_paths}};
    if (c.bootstrap.seed) boot["seed"] = *c.bootstrap.seed;
    json j{{"market", market},
           {"scenario",
            {{"T", c.scenario.T},
             {"M", c.scenario.M},
             {"W0", c.scenario.W0},
             {"q_min", c.scenario.q_min},
             {"q_max", c.scenario.q_max},
             {"p_min", c.scenario.p_min},
             {"p_max", c.scenario.p_max},
             {"epsilon", c.scenario.epsilon},
             {"real_estate", c.scenario.real_estate}}},
           {"grid", grid},
           {"objective",
            {{"risk", to_string(c.objective.kind)},
             {"W_target", c.objective.W_target},
             {"alpha", c.objective.alpha},
             {"kappa", c.objective.kappa}}},
           {"frontier", {{"kappas", c.kappas}}},
           {"es_search",
            {{"lo", c.es_search.lo},
             {"hi", c.es_search.hi},
             {"scan_points", c.es_search.scan_points},
             {"tolerance", c.es_search.tolerance}}},
           {"controls", {{"n_q", c.resolution.n_q}, {"n_p", c.resolution.n_p}}},
           {"monte_carlo",
            {{"n_paths", c.monte_carlo.n_paths},
             {"seed", c.monte_carlo.seed},
             {"alpha", c.monte_carlo.alpha},
             {"W_target", c.monte_carlo.W_target},
             {"fan_paths", c.monte_carlo.fan_paths},
             {"threads", c.monte_carlo.threads}}},
           {"bootstrap", boot},
           {"output_dir", c.output_dir},
           {"seed", c.seed}};
    return j.dump(2) + "\n";
}

} // namespace decum
