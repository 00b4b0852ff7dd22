#include "decum/reporting.hpp"
#include "decum/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace decum {

namespace {

std::ostringstream make_stream_17() {
    std::ostringstream os;
    os << std::setprecision(17);
    return os;
}

void row(std::ostringstream& os, const char* key, double v) { os << key << ',' << v << '\n'; }

void fan_rows(std::ostringstream& os, const char* name, const PercentileFan& f) {
    for (std::size_t k = 0; k < f.time.size(); ++k) {
        os << name << ',' << f.time[k] << ',' << f.p5[k] << ',' << f.p50[k] << ',' << f.p95[k] << '\n';
    }
}

std::string fmt_optional(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os << std::setprecision(17) << *v;
    return os.str();
}

} // namespace

void write_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << content;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

std::string summary_csv(const SummaryStats& s) {
    auto os = make_stream_17();
    os << "metric,value\n";
    row(os, "n_paths", static_cast<double>(s.n_paths));
    row(os, "M", s.M);
    row(os, "alpha", s.alpha);
    row(os, "W_target", s.W_target);
    row(os, "ew_total", s.ew_total);
    row(os, "ew_per_period", s.ew_per_period);
    row(os, "ew_per_period_se", s.ew_se);
    row(os, "ls", s.ls);
    row(os, "ls_se", s.ls_se);
    row(os, "es_alpha", s.es_alpha);
    row(os, "var_alpha", s.var_alpha);
    row(os, "ps", s.ps);
    row(os, "ps_se", s.ps_se);
    row(os, "mean_terminal_wealth", s.mean_terminal_wealth);
    row(os, "median_terminal_wealth", s.median_terminal_wealth);
    row(os, "interior_q_fraction", s.interior_q_fraction);
    return os.str();
}

std::string solve_summary_csv(const SolveResult& r) {
    auto os = make_stream_17();
    const auto& o = r.controls.objective;
    os << "metric,value\n";
    os << "risk," << to_string(o.kind) << '\n';
    row(os, "kappa", o.kappa);
    row(os, "alpha", o.alpha);
    row(os, "W_target", o.W_target);
    row(os, "value", r.value);
    row(os, "ew_total", r.ew_component);
    row(os, "ew_per_period", r.ew_per_period());
    row(os, "risk_component", r.risk_component);
    row(os, "expected_terminal_wealth", r.expected_terminal_wealth);
    os << "W_star," << fmt_optional(r.W_star) << '\n';
    return os.str();
}

std::string decomposition_log(const SolveResult& r) {
    const auto& o = r.controls.objective;
    const auto& sc = r.controls.scenario;
    std::ostringstream os;
    os << std::setprecision(10);
    os << "objective       EW-" << to_string(o.kind) << " kappa=" << o.kappa;
    if (o.kind == RiskKind::ES) os << " alpha=" << o.alpha;
    else os << " W_target=" << o.W_target;
    os << '\n';
    os << "grid            " << r.controls.grid.n_s << " x " << r.controls.grid.n_b << '\n';
    os << "value           " << r.value << '\n';
    os << "  EW            " << r.ew_component << "  (per period " << r.ew_per_period() << ")\n";
    os << "  kappa * risk  " << o.kappa * r.risk_component << "  (risk " << r.risk_component << ")\n";
    os << "  eps * E[W_T]  " << sc.epsilon * r.expected_terminal_wealth << "  (E[W_T] " << r.expected_terminal_wealth
       << ")\n";
    if (r.W_star) os << "W_star          " << *r.W_star << '\n';
    if (!r.outer_profile.empty()) {
        os << "outer search    " << r.outer_profile.size() << " evaluations\n";
        for (const auto& [w, v] : r.outer_profile) os << "  W'=" << w << "  value=" << v << '\n';
    }
    return os.str();
}

std::string cdf_csv(const SummaryStats& s, std::size_t max_rows) {
    auto os = make_stream_17();
    os << "x,F\n";
    const std::size_t n = s.cdf_samples.size();
    if (n == 0) return os.str();
    const std::size_t rows = std::max<std::size_t>(2, std::min(n, max_rows));
    std::size_t last = n;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t k = static_cast<std::size_t>(
            std::llround(static_cast<double>(r) * static_cast<double>(n - 1) / static_cast<double>(rows - 1)));
        if (k == last) continue;
        last = k;
        os << s.cdf_samples[k] << ',' << static_cast<double>(k + 1) / static_cast<double>(n) << '\n';
    }
    return os.str();
}

std::string percentiles_csv(const SummaryStats& s) {
    auto os = make_stream_17();
    os << "quantity,time,p5,p50,p95\n";
    fan_rows(os, "wealth", s.wealth_fan);
    fan_rows(os, "stock_fraction", s.stock_fraction_fan);
    fan_rows(os, "withdrawal", s.withdrawal_fan);
    return os.str();
}

std::string heatmap_q_csv(const ControlField& c) {
    auto os = make_stream_17();
    const auto& sc = c.scenario;
    const double span = sc.q_max - sc.q_min;
    os << "time,wealth,q,q_normalized\n";
    for (std::size_t i = 0; i < c.q.size(); ++i) {
        const double t = static_cast<double>(i) * sc.dt();
        for (std::size_t k = 0; k < c.wealth.size(); ++k) {
            const double q = c.q[i][k];
            os << t << ',' << c.wealth[k] << ',' << q << ',' << (span > 0.0 ? (q - sc.q_min) / span : 0.0) << '\n';
        }
    }
    return os.str();
}

std::string heatmap_p_csv(const ControlField& c) {
    auto os = make_stream_17();
    os << "time,wealth,p\n";
    for (std::size_t i = 0; i < c.p.size(); ++i) {
        const double t = static_cast<double>(i) * c.scenario.dt();
        for (std::size_t k = 0; k < c.wealth.size(); ++k) os << t << ',' << c.wealth[k] << ',' << c.p[i][k] << '\n';
    }
    return os.str();
}

HeatmapTables read_heatmap_csv(const std::string& path, const std::string& column) {
    std::ifstream is(path);
    if (!is) throw FormatError("heat map: cannot open " + path);
    std::string line;
    std::getline(is, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    const auto col = std::find(header.begin(), header.end(), column);
    if (header.size() < 3 || header[0] != "time" || header[1] != "wealth" || col == header.end()) {
        throw FormatError("heat map: " + path + " lacks column '" + column + "'");
    }
    const auto idx = static_cast<std::size_t>(col - header.begin());
    HeatmapTables t;
    std::size_t row_no = 1;
    while (std::getline(is, line)) {
        ++row_no;
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        try {
            while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw FormatError("heat map: row " + std::to_string(row_no) + " is not numeric");
        }
        if (cells.size() != header.size()) throw FormatError("heat map: row " + std::to_string(row_no) + " is short");
        if (t.time.empty() || cells[0] != t.time.back()) {
            t.time.push_back(cells[0]);
            t.values.emplace_back();
        }
        if (t.time.size() == 1) t.wealth.push_back(cells[1]);
        t.values.back().push_back(cells[idx]);
    }
    return t;
}

FrontierPoint evaluate_point(const ControlField& c, const SummaryStats& s, double kappa, double dp_value) {
    FrontierPoint p;
    p.kappa = kappa;
    p.kind = c.objective.kind;
    p.dp_value = dp_value;
    p.ew_total = s.ew_total;
    p.ew_per_period = s.ew_per_period;
    p.ls = s.ls;
    p.ps = s.ps;
    p.es = s.es_alpha;
    p.var = s.var_alpha;
    p.W_star = c.W_star;
    switch (p.kind) {
    case RiskKind::LS: p.native_risk = s.ls; break;
    case RiskKind::PS: p.native_risk = s.ps; break;
    case RiskKind::ES: p.native_risk = s.es_alpha; break;
    }
    return p;
}

std::vector<FrontierPoint> run_frontier(const RunConfig& cfg, const GreensFunction& green,
                                        const std::function<void(const FrontierPoint&)>& on_point) {
    if (cfg.kappas.empty()) throw std::invalid_argument("frontier: kappa list is empty");
    std::vector<double> kappas = cfg.kappas;
    std::sort(kappas.begin(), kappas.end());
    const StateGrid grid(cfg.resolved_grid());
    std::vector<FrontierPoint> out;
    for (double kappa : kappas) {
        FrontierPoint point;
        point.kappa = kappa;
        point.kind = cfg.objective.kind;
        try {
            ObjectiveSpec obj = cfg.objective;
            obj.kappa = kappa;
            const SolveResult r = obj.kind == RiskKind::ES
                                      ? solve_ew_es(obj.alpha, kappa, cfg.scenario, grid, green, cfg.es_search,
                                                    cfg.resolution)
                                      : solve_fixed(obj, cfg.scenario, grid, green, std::nullopt, cfg.resolution);
            SimulationOptions mc = cfg.monte_carlo;
            mc.fan_paths = 0;
            const SummaryStats s = simulate_synthetic(r.controls, cfg.market, cfg.scenario, mc);
            point = evaluate_point(r.controls, s, kappa, r.value);
        } catch (const std::exception& e) {
            point.status = std::string("error: ") + e.what();
        }
        if (on_point) on_point(point);
        out.push_back(point);
    }
    return out;
}

std::string frontier_csv(const std::vector<FrontierPoint>& points) {
    auto os = make_stream_17();
    os << "kappa,risk,dp_value,ew_total,ew_per_period,native_risk,ls,ps,es,var,W_star,status\n";
    for (const auto& p : points) {
        std::string status = p.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        os << p.kappa << ',' << to_string(p.kind) << ',' << p.dp_value << ',' << p.ew_total << ',' << p.ew_per_period
           << ',' << p.native_risk << ',' << p.ls << ',' << p.ps << ',' << p.es << ',' << p.var << ','
           << fmt_optional(p.W_star) << ',' << status << '\n';
    }
    return os.str();
}

} // namespace decum
