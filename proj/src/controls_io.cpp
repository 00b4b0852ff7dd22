#include "decum/control_solver.hpp"
#include "decum/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace decum {

using nlohmann::json;

namespace {

constexpr int controls_version = 1;

json grid_json(const GridSpec& g) {
    return {{"n_s", g.n_s}, {"n_b", g.n_b}, {"s_min", g.s_min}, {"s_max", g.s_max}, {"b_min", g.b_min},
            {"b_max", g.b_max}};
}

json scenario_json(const Scenario& s) {
    return {{"T", s.T},         {"M", s.M},         {"W0", s.W0},           {"q_min", s.q_min},
            {"q_max", s.q_max}, {"p_min", s.p_min}, {"p_max", s.p_max},     {"epsilon", s.epsilon},
            {"real_estate", s.real_estate}};
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("controls: missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("controls: bad value for '") + key + "': " + e.what());
    }
}

} // namespace

void save_controls(const ControlField& c, const std::string& path) {
    c.validate();
    json dates = json::array();
    for (std::size_t i = 0; i < c.q.size(); ++i) {
        dates.push_back({{"time", static_cast<double>(i) * c.scenario.dt()}, {"q", c.q[i]}, {"p", c.p[i]}});
    }
    json j{{"format", "decum-controls"},
           {"version", controls_version},
           {"grid", grid_json(c.grid)},
           {"scenario", scenario_json(c.scenario)},
           {"objective",
            {{"kind", to_string(c.objective.kind)},
             {"W_target", c.objective.W_target},
             {"alpha", c.objective.alpha},
             {"kappa", c.objective.kappa}}},
           {"W_star", c.W_star ? json(*c.W_star) : json(nullptr)},
           {"strategy", c.strategy == StrategyKind::Optimal ? "optimal" : "constant"},
           {"control_resolution", {{"n_q", c.resolution.n_q}, {"n_p", c.resolution.n_p}}},
           {"wealth", std::vector<double>(c.wealth.nodes().begin(), c.wealth.nodes().end())},
           {"dates", dates}};

    const std::filesystem::path target(path);
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << j.dump() << '\n';
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

ControlField load_controls(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("controls: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw FormatError("controls: " + path + " is not valid JSON (" + e.what() + ")");
    }
    if (!j.is_object() || j.value("format", "") != "decum-controls") {
        throw FormatError("controls: " + path + " is not a decum control file");
    }
    const int version = field<int>(j, "version");
    if (version != controls_version) {
        throw FormatError("controls: unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(controls_version) + ")");
    }

    ControlField c;
    const json& g = j.at("grid");
    c.grid = {field<std::size_t>(g, "n_s"), field<std::size_t>(g, "n_b"), field<double>(g, "s_min"),
              field<double>(g, "s_max"),    field<double>(g, "b_min"),    field<double>(g, "b_max")};
    const json& s = j.at("scenario");
    c.scenario = {field<double>(s, "T"),     field<int>(s, "M"),         field<double>(s, "W0"),
                  field<double>(s, "q_min"), field<double>(s, "q_max"),  field<double>(s, "p_min"),
                  field<double>(s, "p_max"), field<double>(s, "epsilon"), field<double>(s, "real_estate")};
    const json& o = field<json>(j, "objective");
    try {
        c.objective = {risk_kind_from_string(field<std::string>(o, "kind")), field<double>(o, "W_target"),
                       field<double>(o, "alpha"), field<double>(o, "kappa")};
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("controls: ") + e.what());
    }
    if (!j.at("W_star").is_null()) c.W_star = field<double>(j, "W_star");
    const auto strategy = field<std::string>(j, "strategy");
    if (strategy == "optimal") {
        c.strategy = StrategyKind::Optimal;
    } else if (strategy == "constant") {
        c.strategy = StrategyKind::Constant;
    } else {
        throw FormatError("controls: unknown strategy '" + strategy + "'");
    }
    const json& r = field<json>(j, "control_resolution");
    c.resolution = {field<int>(r, "n_q"), field<int>(r, "n_p")};
    try {
        c.grid.validate();
        c.scenario.validate();
        c.wealth = WealthAxis(field<std::vector<double>>(j, "wealth"));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("controls: ") + e.what());
    }
    const json& dates = field<json>(j, "dates");
    if (!dates.is_array()) throw FormatError("controls: 'dates' must be an array");
    for (const auto& d : dates) {
        c.q.push_back(field<std::vector<double>>(d, "q"));
        c.p.push_back(field<std::vector<double>>(d, "p"));
    }
    c.validate();
    return c;
}

} // namespace decum
