#pragma once

#include "decum/bootstrap.hpp"
#include "decum/control_solver.hpp"
#include "decum/lattice.hpp"
#include "decum/market_model.hpp"
#include "decum/simulation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace decum {

struct BootstrapConfig {
    std::string returns;                  ///< path of the monthly returns CSV; empty means none
    double expected_blocksize_years = 2.0;
    bool paired = true;
    std::size_t n_paths = 10000;
    std::optional<std::uint64_t> seed;    ///< falls back to RunConfig::seed
};

/// Everything a CLI run needs. Every section is optional in the file and falls
/// back to the base case.
struct RunConfig {
    MarketParams market = MarketParams::crsp_calibration();
    Scenario scenario;
    GridSpec grid;
    bool grid_bounds_explicit = false;
    ObjectiveSpec objective{RiskKind::LS, 0.0, 0.05, 30.0};
    std::vector<double> kappas;
    OuterSearch es_search;
    ControlResolution resolution;
    SimulationOptions monte_carlo;
    BootstrapConfig bootstrap;
    std::string output_dir = "out";
    std::uint64_t seed = 42;

    void validate() const;

    /// Grid after localization when bounds were not given explicitly.
    GridSpec resolved_grid() const;

    BootstrapSpec bootstrap_spec() const;
};

/// Parses a JSON config. Errors are ConfigError with the key path and line.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// Serializes a config so a run can be reproduced from its output directory.
std::string dump_config(const RunConfig& c);

} // namespace decum
