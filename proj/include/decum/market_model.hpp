#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace decum {

/// Jump-diffusion parameters of one asset. Log jump sizes follow an asymmetric
/// double exponential law: up with probability u (rate eta1), down otherwise
/// (rate eta2).
struct KouJumpParams {
    double mu = 0.0;     ///< uncompensated drift, per year
    double sigma = 0.0;  ///< diffusive volatility, per sqrt(year)
    double lambda = 0.0; ///< jump intensity, per year
    double u = 0.5;      ///< probability of an up jump
    double eta1 = 2.0;   ///< up-jump decay, must exceed 1
    double eta2 = 2.0;   ///< down-jump decay

    void validate() const;
};

/// Stock and bond index dynamics. Jumps of the two assets are independent;
/// the diffusions are correlated through rho_sb.
struct MarketParams {
    KouJumpParams stock;
    KouJumpParams bond;
    double rho_sb = 0.0;
    double mu_c_b = 0.0; ///< borrowing spread added to the bond drift when B < 0

    void validate() const;

    /// Real CRSP value-weighted index / 30-day T-bill calibration, 1926:1-2023:12.
    static MarketParams crsp_calibration();
};

struct LogIncrement {
    double ds = 0.0;
    double db = 0.0;
};

/// Mean and variance of a log increment over one period.
struct LogMoments {
    double mean = 0.0;
    double variance = 0.0;
};

using Rng = std::mt19937_64;

/// E[xi - 1] for the jump multiplier xi = exp(y).
double jump_compensator(const KouJumpParams& p);

/// E[y] and E[y^2] of the log jump size.
double jump_log_mean(const KouJumpParams& p);
double jump_log_second_moment(const KouJumpParams& p);

/// Characteristic function E[exp(i omega y)] of the log jump size.
std::complex<double> jump_log_char(const KouJumpParams& p, double omega);

/// Drift of log(amount) per year: mu - lambda*gamma - sigma^2/2 (+ spread).
double log_drift(const KouJumpParams& p, double extra_drift = 0.0);

/// Joint characteristic function of (dlog S, dlog B) over dt. With insolvent set
/// the bond drift carries the borrowing spread.
std::complex<double> joint_char(const MarketParams& m, double omega_s, double omega_b,
                                double dt, bool insolvent);

/// Analytic moments of the stock (ds) and bond (db) log increments.
LogMoments stock_log_moments(const MarketParams& m, double dt);
LogMoments bond_log_moments(const MarketParams& m, double dt, bool insolvent);

/// Exact draw of one period's log increments. Only the caller's stream mutates.
LogIncrement sample_increment(const MarketParams& m, double dt, bool insolvent, Rng& rng);

/// Independent stream for a (seed, stream index) pair.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

} // namespace decum
