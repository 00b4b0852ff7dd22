#pragma once

#include "decum/config.hpp"
#include "decum/control_solver.hpp"
#include "decum/simulation.hpp"

#include <functional>
#include <string>
#include <vector>

namespace decum {

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

/// Two-column `metric,value` table.
std::string summary_csv(const SummaryStats& s);

/// `metric,value` table of the DP value and its decomposition at W0.
std::string solve_summary_csv(const SolveResult& r);

/// Human-readable decomposition log.
std::string decomposition_log(const SolveResult& r);

/// `x,F` rows of the empirical terminal-wealth CDF, thinned to at most max_rows.
std::string cdf_csv(const SummaryStats& s, std::size_t max_rows = 2000);

/// `quantity,time,p5,p50,p95` rows for wealth, stock fraction and withdrawals.
std::string percentiles_csv(const SummaryStats& s);

/// `time,wealth,q,q_normalized` rows.
std::string heatmap_q_csv(const ControlField& c);

/// `time,wealth,p` rows.
std::string heatmap_p_csv(const ControlField& c);

/// Tables read back from heat-map files: [date][wealth node].
struct HeatmapTables {
    std::vector<double> time;
    std::vector<double> wealth;
    std::vector<std::vector<double>> values;
};
HeatmapTables read_heatmap_csv(const std::string& path, const std::string& column);

struct FrontierPoint {
    double kappa = 0.0;
    RiskKind kind = RiskKind::LS;
    double dp_value = 0.0;
    double ew_total = 0.0;
    double ew_per_period = 0.0;
    double native_risk = 0.0; ///< LS, PS or ES of the simulated terminal wealth
    double ls = 0.0;
    double ps = 0.0;
    double es = 0.0;
    double var = 0.0;
    std::optional<double> W_star;
    std::string status = "ok";
};

/// One solve plus one Monte Carlo evaluation per kappa, sorted by kappa. A
/// failing point is recorded with its error and the sweep continues.
std::vector<FrontierPoint> run_frontier(const RunConfig& cfg, const GreensFunction& green,
                                        const std::function<void(const FrontierPoint&)>& on_point = {});

std::string frontier_csv(const std::vector<FrontierPoint>& points);

/// Frontier of a fixed strategy is a single point; used for the Bengen baseline.
FrontierPoint evaluate_point(const ControlField& c, const SummaryStats& s, double kappa, double dp_value);

} // namespace decum
