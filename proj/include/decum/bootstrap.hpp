#pragma once

#include "decum/simulation.hpp"

#include <string>
#include <vector>

namespace decum {

/// Monthly real total returns (simple, decimal) of the stock and bond indices.
struct ReturnSeries {
    std::vector<std::string> dates;
    std::vector<double> stock;
    std::vector<double> bond;
    std::string source;

    std::size_t size() const { return stock.size(); }
    void validate() const;
};

/// Reads `date,stock_real_return,bond_real_return`. Errors name the offending row.
ReturnSeries load_return_series(const std::string& path);
void save_return_series(const ReturnSeries& series, const std::string& path);

/// Monthly series drawn from the parametric model itself.
ReturnSeries generate_synthetic_series(const MarketParams& m, std::size_t months, std::uint64_t seed);

struct BootstrapSpec {
    double expected_blocksize = 24.0; ///< months; block lengths are geometric with this mean
    bool paired = true;               ///< draw stock and bond at identical indices
    bool wrap = true;                 ///< circular wrap-around at the series end
    std::size_t n_paths = 10000;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Stationary block bootstrap index generator for one asset column.
class BlockSampler {
public:
    BlockSampler(std::size_t series_length, const BootstrapSpec& spec);

    /// Forget the current block; the next draw starts a new one.
    void restart() { remaining_ = 0; }
    std::size_t next(Rng& rng);
    std::size_t blocks_started() const { return blocks_; }

private:
    std::size_t n_;
    bool wrap_;
    std::geometric_distribution<std::size_t> length_;
    std::uniform_int_distribution<std::size_t> start_;
    std::size_t pos_ = 0;
    std::size_t remaining_ = 0;
    std::size_t blocks_ = 0;
};

/// One resampled path of `horizon_years * 12` monthly (stock, bond) returns.
struct ReturnPath {
    std::vector<double> stock;
    std::vector<double> bond;
};

/// Generates resampled paths; path k is drawn from its own stream, so the
/// sequence is reproducible for a given seed.
class BootstrapStream {
public:
    BootstrapStream(const ReturnSeries& series, const BootstrapSpec& spec, int horizon_years);

    ReturnPath path(std::size_t k) const;
    void fill(std::size_t k, ReturnPath& out) const;

private:
    const ReturnSeries& series_;
    BootstrapSpec spec_;
    std::size_t months_;
};

/// Replays the stored controls against resampled returns. Within each year the
/// twelve monthly returns compound; insolvent debt grows at the bond return
/// plus the borrowing spread.
SummaryStats simulate_bootstrap(const ControlField& controls, const ReturnSeries& series, const BootstrapSpec& spec,
                                const Scenario& sc, double mu_c_b, const SimulationOptions& opt = {});

} // namespace decum
