#pragma once

#include "decum/control_solver.hpp"
#include "decum/market_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace decum {

/// 5th, 50th and 95th percentiles of one quantity per rebalance date.
struct PercentileFan {
    std::vector<double> time;
    std::vector<double> p5, p50, p95;
};

struct SummaryStats {
    std::size_t n_paths = 0;
    int M = 0;
    double alpha = 0.05;
    double W_target = 0.0;

    double ew_total = 0.0;      ///< E[sum q_i]
    double ew_per_period = 0.0; ///< E[sum q_i] / M
    double ew_se = 0.0;         ///< standard error of ew_per_period
    double ls = 0.0;            ///< E[min(W_T - W_target, 0)]
    double ls_se = 0.0;
    double es_alpha = 0.0;      ///< mean of the worst ceil(alpha N) terminal wealths
    double var_alpha = 0.0;     ///< ceil(alpha N)-th smallest terminal wealth
    double ps = 0.0;            ///< Prob[W_T < W_target]
    double ps_se = 0.0;
    double mean_terminal_wealth = 0.0;
    double median_terminal_wealth = 0.0;
    double interior_q_fraction = 0.0; ///< share of path-dates with q strictly inside the withdrawal band

    std::vector<double> cdf_samples; ///< sorted terminal wealths
    PercentileFan wealth_fan, stock_fraction_fan, withdrawal_fan;

    /// Empirical CDF of terminal wealth at x.
    double cdf(double x) const;
};

/// Sample statistics of terminal wealth and total withdrawals. Throws when
/// alpha * N < 1.
SummaryStats summary(std::span<const double> terminal_wealth, std::span<const double> withdrawal_sums,
                     double alpha, double W_target, int M);

struct SimulationOptions {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 42;
    double alpha = 0.05;
    double W_target = 0.0;
    std::size_t fan_paths = 20000; ///< leading paths recorded for the percentile fans
    unsigned threads = 0;          ///< 0 selects the hardware concurrency
};

/// Paths are simulated in blocks of this size, each block on its own stream.
inline constexpr std::size_t simulation_block = 4096;

/// Forward Monte Carlo of the stored controls in the parametric market.
SummaryStats simulate_synthetic(const ControlField& controls, const MarketParams& m, const Scenario& sc,
                                const SimulationOptions& opt);

struct AlphaStar {
    double probability = 0.0;
    double standard_error = 0.0;
};

/// Prob[W_T < W_target] under EW-LS controls, with W_target taken from the controls.
AlphaStar estimate_alpha_star(const ControlField& controls, const MarketParams& m, const Scenario& sc,
                              std::size_t n_paths, std::uint64_t seed);

/// Sup-norm distance between two empirical CDFs given as sorted samples.
double cdf_sup_distance(std::span<const double> a, std::span<const double> b);

/// Sup-norm distance restricted to x <= x_max.
double cdf_sup_distance_below(std::span<const double> a, std::span<const double> b, double x_max);

namespace detail {

/// Per-path control application shared by the synthetic and bootstrap engines.
class PathPolicy {
public:
    PathPolicy(const ControlField& controls, const Scenario& sc);

    double withdrawal(int date, double w_minus) const;
    double stock_fraction(int date, double w_plus) const;
    bool interior_q(double q) const;

private:
    const ControlField& c_;
    const Scenario& sc_;
    double delta_ = 0.0;
};

struct PathRecord {
    std::vector<double> wealth, fraction, withdrawal;
};

/// Reduces per-path outputs into SummaryStats, with the fans taken from the recorded paths.
SummaryStats finish(std::vector<double> terminal, std::vector<double> withdrawals, std::size_t interior_count,
                    const std::vector<PathRecord>& fans, const Scenario& sc, double alpha, double W_target);

unsigned resolve_threads(unsigned requested, std::size_t blocks);

} // namespace detail

} // namespace decum
