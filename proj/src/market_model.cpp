#include "decum/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace decum {

namespace {

using cplx = std::complex<double>;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

double sample_log_jump(const KouJumpParams& p, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(rng) < p.u) {
        return std::exponential_distribution<double>(p.eta1)(rng);
    }
    return -std::exponential_distribution<double>(p.eta2)(rng);
}

double sample_jump_sum(const KouJumpParams& p, double dt, Rng& rng) {
    if (p.lambda <= 0.0) return 0.0;
    const int n = std::poisson_distribution<int>(p.lambda * dt)(rng);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += sample_log_jump(p, rng);
    return sum;
}

} // namespace

void KouJumpParams::validate() const {
    require(std::isfinite(mu), "jump params: mu must be finite");
    require(sigma >= 0.0, "jump params: sigma must be >= 0");
    require(lambda >= 0.0, "jump params: lambda must be >= 0");
    require(u >= 0.0 && u <= 1.0, "jump params: u must lie in [0,1]");
    if (!(eta1 > 1.0)) throw std::domain_error("jump params: eta1 must exceed 1 (divergent mean jump)");
    require(eta2 > 0.0, "jump params: eta2 must be > 0");
}

void MarketParams::validate() const {
    stock.validate();
    bond.validate();
    require(std::abs(rho_sb) <= 1.0, "market params: |rho_sb| must be <= 1");
    require(mu_c_b >= 0.0, "market params: mu_c_b must be >= 0");
}

MarketParams MarketParams::crsp_calibration() {
    MarketParams m;
    m.stock = {0.087323, 0.147716, 0.316326, 0.225806, 4.3591, 5.53370};
    m.bond = {0.0032, 0.0140, 0.3878, 0.3947, 61.5350, 53.4043};
    m.rho_sb = 0.095933;
    m.mu_c_b = 0.03;
    return m;
}

double jump_compensator(const KouJumpParams& p) {
    if (!(p.eta1 > 1.0)) throw std::domain_error("jump_compensator: eta1 <= 1 gives a divergent mean jump");
    if (!(p.eta2 > 0.0)) throw std::invalid_argument("jump_compensator: eta2 must be > 0");
    return p.u * p.eta1 / (p.eta1 - 1.0) + (1.0 - p.u) * p.eta2 / (p.eta2 + 1.0) - 1.0;
}

double jump_log_mean(const KouJumpParams& p) {
    return p.u / p.eta1 - (1.0 - p.u) / p.eta2;
}

double jump_log_second_moment(const KouJumpParams& p) {
    return 2.0 * p.u / (p.eta1 * p.eta1) + 2.0 * (1.0 - p.u) / (p.eta2 * p.eta2);
}

cplx jump_log_char(const KouJumpParams& p, double omega) {
    const cplx i(0.0, 1.0);
    return p.u * p.eta1 / (p.eta1 - i * omega) + (1.0 - p.u) * p.eta2 / (p.eta2 + i * omega);
}

double log_drift(const KouJumpParams& p, double extra_drift) {
    const double gamma = p.lambda > 0.0 ? jump_compensator(p) : 0.0;
    return p.mu + extra_drift - p.lambda * gamma - 0.5 * p.sigma * p.sigma;
}

cplx joint_char(const MarketParams& m, double omega_s, double omega_b, double dt, bool insolvent) {
    if (!(dt > 0.0)) throw std::invalid_argument("joint_char: dt must be > 0");
    const cplx i(0.0, 1.0);
    const auto& s = m.stock;
    const auto& b = m.bond;
    const double a_s = log_drift(s);
    const double a_b = log_drift(b, insolvent ? m.mu_c_b : 0.0);
    const double quad = s.sigma * s.sigma * omega_s * omega_s
                      + 2.0 * m.rho_sb * s.sigma * b.sigma * omega_s * omega_b
                      + b.sigma * b.sigma * omega_b * omega_b;
    cplx exponent = i * (omega_s * a_s + omega_b * a_b) - 0.5 * quad;
    if (s.lambda > 0.0) exponent += s.lambda * (jump_log_char(s, omega_s) - 1.0);
    if (b.lambda > 0.0) exponent += b.lambda * (jump_log_char(b, omega_b) - 1.0);
    return std::exp(dt * exponent);
}

LogMoments stock_log_moments(const MarketParams& m, double dt) {
    const auto& s = m.stock;
    return {dt * (log_drift(s) + s.lambda * jump_log_mean(s)),
            dt * (s.sigma * s.sigma + s.lambda * jump_log_second_moment(s))};
}

LogMoments bond_log_moments(const MarketParams& m, double dt, bool insolvent) {
    const auto& b = m.bond;
    return {dt * (log_drift(b, insolvent ? m.mu_c_b : 0.0) + b.lambda * jump_log_mean(b)),
            dt * (b.sigma * b.sigma + b.lambda * jump_log_second_moment(b))};
}

LogIncrement sample_increment(const MarketParams& m, double dt, bool insolvent, Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be > 0");
    const auto& s = m.stock;
    const auto& b = m.bond;
    std::normal_distribution<double> normal(0.0, 1.0);
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double sq = std::sqrt(dt);
    const double zb = m.rho_sb * z1 + std::sqrt(std::max(0.0, 1.0 - m.rho_sb * m.rho_sb)) * z2;

    LogIncrement inc;
    inc.ds = log_drift(s) * dt + s.sigma * sq * z1 + sample_jump_sum(s, dt, rng);
    inc.db = log_drift(b, insolvent ? m.mu_c_b : 0.0) * dt + b.sigma * sq * zb
           + sample_jump_sum(b, dt, rng);
    return inc;
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedU};
    return Rng(seq);
}

} // namespace decum
