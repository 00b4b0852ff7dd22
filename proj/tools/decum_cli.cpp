// Command-line front end: solve, frontier, simulate, bootstrap, export-heatmap, compare.
#include "decum/bootstrap.hpp"
#include "decum/config.hpp"
#include "decum/control_solver.hpp"
#include "decum/errors.hpp"
#include "decum/pide_engine.hpp"
#include "decum/reporting.hpp"
#include "decum/simulation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace decum;

namespace {

enum Exit { ok = 0, other = 1, config_error = 2, data_error = 3, numerical_error = 4 };

struct Common {
    std::string config;
    std::string out;
    bool force = false;
    bool dry_run = false;
    std::size_t grid = 0;
    std::size_t paths = 0;
    long long seed = -1;
};

void add_common(CLI::App* cmd, Common& c, bool with_grid) {
    cmd->add_option("-c,--config", c.config, "JSON run configuration");
    cmd->add_option("-o,--out", c.out, "output directory (overrides the config)");
    cmd->add_flag("--force", c.force, "overwrite an existing output directory");
    cmd->add_flag("--dry-run", c.dry_run, "validate inputs and stop");
    cmd->add_option("--paths", c.paths, "Monte Carlo or bootstrap path count");
    cmd->add_option("--seed", c.seed, "random seed");
    if (with_grid) cmd->add_option("--grid", c.grid, "lattice nodes per axis (power of two)");
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.grid) {
        cfg.grid.n_s = c.grid;
        cfg.grid.n_b = c.grid;
    }
    if (c.paths) {
        cfg.monte_carlo.n_paths = c.paths;
        cfg.bootstrap.n_paths = c.paths;
    }
    if (c.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(c.seed);
        cfg.monte_carlo.seed = cfg.seed;
        cfg.bootstrap.seed = cfg.seed;
    }
    try {
        cfg.validate();
        cfg.resolved_grid().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

void prepare_output(const std::string& dir, bool force) {
    if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
        throw ConfigError("output directory '" + dir + "' already exists; pass --force to overwrite");
    }
    fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

GreensFunction make_green(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    GreensFunction g = build_green(cfg.market, cfg.resolved_grid(), cfg.scenario.dt());
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "kernel built in " << std::fixed << std::setprecision(2) << s << " s\n";
    return g;
}

ControlField controls_for(const RunConfig& cfg, const std::string& path, bool bengen, bool allow_foreign) {
    if (bengen) return bengen_strategy(cfg.scenario, cfg.resolved_grid());
    if (path.empty()) throw ConfigError("a control file (--controls) or --bengen is required");
    ControlField c = load_controls(path);
    if (!(c.grid == cfg.resolved_grid()) && !allow_foreign) {
        throw FormatError("control file " + path +
                          " was computed on a different grid; pass --allow-foreign-grid to interpolate it");
    }
    return c;
}

void write_stats(const std::string& dir, const SummaryStats& s) {
    write_atomic(join(dir, "summary.csv"), summary_csv(s));
    write_atomic(join(dir, "cdf.csv"), cdf_csv(s));
    write_atomic(join(dir, "percentiles.csv"), percentiles_csv(s));
}

void print_stats(const SummaryStats& s) {
    std::cout << std::setprecision(6) << "EW/M " << s.ew_per_period << " (se " << s.ew_se << ")  LS " << s.ls
              << "  ES(" << s.alpha << ") " << s.es_alpha << "  VaR " << s.var_alpha << "  PS " << s.ps << '\n';
}

std::string blocksize_label(double years) {
    std::ostringstream os;
    os << "blocksize_" << years;
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal retirement decumulation: dynamic programming, Monte Carlo and bootstrap"};
    app.require_subcommand(1);

    Common solve_opt;
    auto* solve = app.add_subcommand("solve", "solve the configured problem and store its controls");
    add_common(solve, solve_opt, true);

    Common frontier_opt;
    auto* frontier = app.add_subcommand("frontier", "sweep kappa and evaluate each control by Monte Carlo");
    add_common(frontier, frontier_opt, true);

    Common sim_opt;
    std::string sim_controls;
    bool sim_bengen = false, sim_foreign = false;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo in the parametric market");
    add_common(simulate, sim_opt, true);
    simulate->add_option("--controls", sim_controls, "control file from solve");
    simulate->add_flag("--bengen", sim_bengen, "use the constant 4% / 50-50 strategy");
    simulate->add_flag("--allow-foreign-grid", sim_foreign, "accept controls computed on another grid");

    Common boot_opt;
    std::string boot_controls, boot_returns;
    std::vector<double> boot_blocks;
    std::size_t boot_synthetic = 0;
    bool boot_bengen = false, boot_foreign = false;
    auto* boot = app.add_subcommand("bootstrap", "stationary block bootstrap of monthly returns");
    add_common(boot, boot_opt, true);
    boot->add_option("--controls", boot_controls, "control file from solve");
    boot->add_flag("--bengen", boot_bengen, "use the constant 4% / 50-50 strategy");
    boot->add_flag("--allow-foreign-grid", boot_foreign, "accept controls computed on another grid");
    boot->add_option("--returns", boot_returns, "CSV with date,stock_real_return,bond_real_return");
    boot->add_option("--blocksize", boot_blocks, "expected blocksize in years (repeatable)");
    boot->add_option("--synthetic-months", boot_synthetic, "resample a series of this length drawn from the model");

    std::string heat_controls, heat_out;
    bool heat_force = false;
    auto* heat = app.add_subcommand("export-heatmap", "write the control tables in long format");
    heat->add_option("--controls", heat_controls, "control file")->required();
    heat->add_option("-o,--out", heat_out, "output directory")->required();
    heat->add_flag("--force", heat_force, "overwrite an existing output directory");

    Common cmp_opt;
    std::vector<std::string> cmp_controls;
    bool cmp_bengen = false, cmp_foreign = false;
    auto* compare = app.add_subcommand("compare", "evaluate several controls on common random numbers");
    add_common(compare, cmp_opt, true);
    compare->add_option("--controls", cmp_controls, "control files");
    compare->add_flag("--bengen", cmp_bengen, "include the constant 4% / 50-50 strategy");
    compare->add_flag("--allow-foreign-grid", cmp_foreign, "accept controls computed on another grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*solve) {
            const RunConfig cfg = resolve(solve_opt);
            if (solve_opt.dry_run) {
                std::cout << "configuration valid\n";
                return ok;
            }
            prepare_output(cfg.output_dir, solve_opt.force);
            const GreensFunction g = make_green(cfg);
            const StateGrid grid(cfg.resolved_grid());
            const auto t0 = std::chrono::steady_clock::now();
            const SolveResult r =
                cfg.objective.kind == RiskKind::ES
                    ? solve_ew_es(cfg.objective.alpha, cfg.objective.kappa, cfg.scenario, grid, g, cfg.es_search,
                                  cfg.resolution)
                    : solve_fixed(cfg.objective, cfg.scenario, grid, g, std::nullopt, cfg.resolution);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            save_controls(r.controls, join(cfg.output_dir, "controls.json"));
            write_atomic(join(cfg.output_dir, "summary.csv"), solve_summary_csv(r));
            write_atomic(join(cfg.output_dir, "decomposition.log"), decomposition_log(r));
            write_atomic(join(cfg.output_dir, "config.json"), dump_config(cfg));
            std::cout << decomposition_log(r) << "solve time      " << secs << " s\n";
        } else if (*frontier) {
            const RunConfig cfg = resolve(frontier_opt);
            if (cfg.kappas.empty()) throw ConfigError("frontier.kappas is empty");
            if (frontier_opt.dry_run) {
                std::cout << "configuration valid\n";
                return ok;
            }
            prepare_output(cfg.output_dir, frontier_opt.force);
            const GreensFunction g = make_green(cfg);
            const auto points = run_frontier(cfg, g, [](const FrontierPoint& p) {
                std::cout << "kappa " << p.kappa << ": EW/M " << p.ew_per_period << "  native risk " << p.native_risk
                          << "  " << p.status << std::endl;
            });
            write_atomic(join(cfg.output_dir, "frontier.csv"), frontier_csv(points));
            write_atomic(join(cfg.output_dir, "config.json"), dump_config(cfg));
        } else if (*simulate) {
            const RunConfig cfg = resolve(sim_opt);
            const ControlField c = controls_for(cfg, sim_controls, sim_bengen, sim_foreign);
            if (sim_opt.dry_run) {
                std::cout << "inputs valid\n";
                return ok;
            }
            prepare_output(cfg.output_dir, sim_opt.force);
            const SummaryStats s = simulate_synthetic(c, cfg.market, c.scenario, cfg.monte_carlo);
            write_stats(cfg.output_dir, s);
            print_stats(s);
        } else if (*boot) {
            RunConfig cfg = resolve(boot_opt);
            const ControlField c = controls_for(cfg, boot_controls, boot_bengen, boot_foreign);
            if (!boot_returns.empty()) cfg.bootstrap.returns = boot_returns;
            if (cfg.bootstrap.returns.empty() && boot_synthetic == 0) {
                throw ConfigError("bootstrap needs a returns CSV (--returns or bootstrap.returns) or --synthetic-months");
            }
            const ReturnSeries series = boot_synthetic > 0
                                            ? generate_synthetic_series(cfg.market, boot_synthetic, cfg.seed)
                                            : load_return_series(cfg.bootstrap.returns);
            if (boot_blocks.empty()) boot_blocks.push_back(cfg.bootstrap.expected_blocksize_years);
            for (double b : boot_blocks) {
                if (!(b * 12.0 >= 1.0)) throw ConfigError("--blocksize must be at least one month (1/12 year)");
            }
            if (boot_opt.dry_run) {
                std::cout << "inputs valid (" << series.size() << " monthly observations)\n";
                return ok;
            }
            prepare_output(cfg.output_dir, boot_opt.force);
            for (double b : boot_blocks) {
                cfg.bootstrap.expected_blocksize_years = b;
                const std::string dir =
                    boot_blocks.size() == 1 ? cfg.output_dir : join(cfg.output_dir, blocksize_label(b));
                const SummaryStats s =
                    simulate_bootstrap(c, series, cfg.bootstrap_spec(), c.scenario, cfg.market.mu_c_b, cfg.monte_carlo);
                write_stats(dir, s);
                std::cout << "blocksize " << b << " years: ";
                print_stats(s);
            }
        } else if (*heat) {
            const ControlField c = load_controls(heat_controls);
            prepare_output(heat_out, heat_force);
            write_atomic(join(heat_out, "heatmap_q.csv"), heatmap_q_csv(c));
            write_atomic(join(heat_out, "heatmap_p.csv"), heatmap_p_csv(c));
        } else if (*compare) {
            const RunConfig cfg = resolve(cmp_opt);
            std::vector<std::pair<std::string, ControlField>> strategies;
            for (const auto& path : cmp_controls) strategies.emplace_back(path, controls_for(cfg, path, false, cmp_foreign));
            if (cmp_bengen) strategies.emplace_back("bengen", bengen_strategy(cfg.scenario, cfg.resolved_grid()));
            if (strategies.empty()) throw ConfigError("compare needs --controls and/or --bengen");
            if (cmp_opt.dry_run) {
                std::cout << "inputs valid\n";
                return ok;
            }
            prepare_output(cfg.output_dir, cmp_opt.force);
            std::ostringstream os;
            os << std::setprecision(17) << "strategy,ew_per_period,ew_per_period_se,ls,es_alpha,var_alpha,ps\n";
            for (const auto& [label, c] : strategies) {
                SimulationOptions mc = cfg.monte_carlo;
                mc.fan_paths = 0;
                const SummaryStats s = simulate_synthetic(c, cfg.market, c.scenario, mc);
                os << label << ',' << s.ew_per_period << ',' << s.ew_se << ',' << s.ls << ',' << s.es_alpha << ','
                   << s.var_alpha << ',' << s.ps << '\n';
                std::cout << label << ": ";
                print_stats(s);
            }
            write_atomic(join(cfg.output_dir, "compare.csv"), os.str());
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return other;
    }
    return ok;
}
