#include "decum/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace decum {

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
    if (v.empty()) return 0.0;
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

PercentileFan make_fan(const std::vector<detail::PathRecord>& paths,
                       std::vector<double> detail::PathRecord::*member, double dt) {
    PercentileFan fan;
    if (paths.empty()) return fan;
    const std::size_t n_dates = (paths.front().*member).size();
    std::vector<double> column(paths.size());
    for (std::size_t d = 0; d < n_dates; ++d) {
        for (std::size_t k = 0; k < paths.size(); ++k) column[k] = (paths[k].*member)[d];
        std::sort(column.begin(), column.end());
        fan.time.push_back(static_cast<double>(d) * dt);
        fan.p5.push_back(quantile_sorted(column, 0.05));
        fan.p50.push_back(quantile_sorted(column, 0.50));
        fan.p95.push_back(quantile_sorted(column, 0.95));
    }
    return fan;
}

// Kahan-compensated mean and variance so the reduction does not depend on block scheduling.
void mean_and_se(std::span<const double> x, double& mean, double& se) {
    double sum = 0.0, c = 0.0;
    for (double v : x) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    mean = sum / static_cast<double>(x.size());
    double ss = 0.0;
    c = 0.0;
    for (double v : x) {
        const double y = (v - mean) * (v - mean) - c;
        const double t = ss + y;
        c = (t - ss) - y;
        ss = t;
    }
    const double n = static_cast<double>(x.size());
    se = x.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

} // namespace

double SummaryStats::cdf(double x) const {
    const auto it = std::upper_bound(cdf_samples.begin(), cdf_samples.end(), x);
    return cdf_samples.empty() ? 0.0
                               : static_cast<double>(it - cdf_samples.begin()) / static_cast<double>(cdf_samples.size());
}

SummaryStats summary(std::span<const double> terminal_wealth, std::span<const double> withdrawal_sums, double alpha,
                     double W_target, int M) {
    if (terminal_wealth.empty()) throw std::invalid_argument("summary: no samples");
    if (withdrawal_sums.size() != terminal_wealth.size()) {
        throw std::invalid_argument("summary: terminal wealth and withdrawal samples differ in length");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("summary: need 0 < alpha < 1");
    if (M < 1) throw std::invalid_argument("summary: need M >= 1");
    const std::size_t n = terminal_wealth.size();
    if (alpha * static_cast<double>(n) < 1.0) throw std::invalid_argument("summary: alpha * N < 1");

    SummaryStats s;
    s.n_paths = n;
    s.M = M;
    s.alpha = alpha;
    s.W_target = W_target;

    double se = 0.0;
    mean_and_se(withdrawal_sums, s.ew_total, se);
    s.ew_per_period = s.ew_total / M;
    s.ew_se = se / M;

    std::vector<double> shortfall(n), below(n);
    for (std::size_t k = 0; k < n; ++k) {
        shortfall[k] = std::min(terminal_wealth[k] - W_target, 0.0);
        below[k] = terminal_wealth[k] < W_target ? 1.0 : 0.0;
    }
    mean_and_se(shortfall, s.ls, s.ls_se);
    mean_and_se(below, s.ps, s.ps_se);
    mean_and_se(terminal_wealth, s.mean_terminal_wealth, se);

    s.cdf_samples.assign(terminal_wealth.begin(), terminal_wealth.end());
    std::sort(s.cdf_samples.begin(), s.cdf_samples.end());
    // Guard against alpha*N landing a hair above an integer through rounding.
    const auto tail = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
    double worst = 0.0;
    for (std::size_t k = 0; k < tail; ++k) worst += s.cdf_samples[k];
    s.es_alpha = worst / static_cast<double>(tail);
    s.var_alpha = s.cdf_samples[tail - 1];
    s.median_terminal_wealth = quantile_sorted(s.cdf_samples, 0.5);
    return s;
}

double cdf_sup_distance_below(std::span<const double> a, std::span<const double> b, double x_max) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cdf_sup_distance: empty sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() || j < b.size()) {
        const double x = j >= b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
        if (x > x_max) break;
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double cdf_sup_distance(std::span<const double> a, std::span<const double> b) {
    return cdf_sup_distance_below(a, b, std::numeric_limits<double>::infinity());
}

namespace detail {

PathPolicy::PathPolicy(const ControlField& controls, const Scenario& sc) : c_(controls), sc_(sc) {
    if (static_cast<int>(controls.q.size()) < sc.M || static_cast<int>(controls.p.size()) < sc.M) {
        throw std::invalid_argument("simulation: control tables are missing rebalance dates");
    }
    if (controls.wealth.size() < 2) throw std::invalid_argument("simulation: control wealth axis is empty");
    const int n_q = controls.resolution.n_q;
    delta_ = n_q > 1 ? (sc.q_max - sc.q_min) / (n_q - 1) : 0.0;
}

double PathPolicy::withdrawal(int date, double w_minus) const {
    const double q = c_.q_at(date, w_minus);
    if (c_.strategy == StrategyKind::Constant) return q;
    const Interval z = admissible_q(w_minus, date, sc_);
    return std::clamp(q, z.lo, z.hi);
}

double PathPolicy::stock_fraction(int date, double w_plus) const {
    const Interval z = admissible_p(w_plus, date, sc_);
    return std::clamp(c_.p_at(date, w_plus), z.lo, z.hi);
}

bool PathPolicy::interior_q(double q) const {
    return q > sc_.q_min + delta_ && q < sc_.q_max - delta_;
}

SummaryStats finish(std::vector<double> terminal, std::vector<double> withdrawals, std::size_t interior_count,
                    const std::vector<PathRecord>& fans, const Scenario& sc, double alpha, double W_target) {
    SummaryStats s = summary(terminal, withdrawals, alpha, W_target, sc.M);
    s.interior_q_fraction =
        static_cast<double>(interior_count) / (static_cast<double>(terminal.size()) * static_cast<double>(sc.M));
    s.wealth_fan = make_fan(fans, &PathRecord::wealth, sc.dt());
    s.stock_fraction_fan = make_fan(fans, &PathRecord::fraction, sc.dt());
    s.withdrawal_fan = make_fan(fans, &PathRecord::withdrawal, sc.dt());
    return s;
}

unsigned resolve_threads(unsigned requested, std::size_t blocks) {
    unsigned t = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(blocks, 1)));
}

} // namespace detail

SummaryStats simulate_synthetic(const ControlField& controls, const MarketParams& m, const Scenario& sc,
                                const SimulationOptions& opt) {
    m.validate();
    sc.validate();
    if (opt.n_paths == 0) throw std::invalid_argument("simulate_synthetic: n_paths must be >= 1");
    const detail::PathPolicy policy(controls, sc);
    const double dt = sc.dt();
    const std::size_t n = opt.n_paths;
    const std::size_t n_fan = std::min(opt.fan_paths, n);
    const std::size_t blocks = (n + simulation_block - 1) / simulation_block;

    std::vector<double> terminal(n), withdrawals(n);
    std::vector<std::size_t> interior(blocks, 0);
    std::vector<detail::PathRecord> fans(n_fan);

    const auto run_block = [&](std::size_t blk) {
        Rng rng = make_stream(opt.seed, blk);
        const std::size_t end = std::min(n, (blk + 1) * simulation_block);
        for (std::size_t path = blk * simulation_block; path < end; ++path) {
            detail::PathRecord* rec = path < n_fan ? &fans[path] : nullptr;
            double w = sc.W0;
            double total_q = 0.0;
            for (int i = 0; i < sc.M; ++i) {
                const double q = policy.withdrawal(i, w);
                const double w_plus = w - q;
                const double p = policy.stock_fraction(i, w_plus);
                if (policy.interior_q(q)) ++interior[blk];
                if (rec) {
                    rec->wealth.push_back(w);
                    rec->fraction.push_back(p);
                    rec->withdrawal.push_back(q);
                }
                total_q += q;
                const bool insolvent = w_plus <= 0.0;
                const LogIncrement inc = sample_increment(m, dt, insolvent, rng);
                w = insolvent ? w_plus * std::exp(inc.db)
                              : p * w_plus * std::exp(inc.ds) + (1.0 - p) * w_plus * std::exp(inc.db);
            }
            if (rec) rec->wealth.push_back(w);
            terminal[path] = w;
            withdrawals[path] = total_q;
        }
    };

    const unsigned n_threads = detail::resolve_threads(opt.threads, blocks);
    if (n_threads <= 1) {
        for (std::size_t blk = 0; blk < blocks; ++blk) run_block(blk);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t blk = next++; blk < blocks; blk = next++) run_block(blk);
            });
        }
        for (auto& th : pool) th.join();
    }

    const std::size_t interior_total = std::accumulate(interior.begin(), interior.end(), std::size_t{0});
    return detail::finish(std::move(terminal), std::move(withdrawals), interior_total, fans, sc, opt.alpha,
                          opt.W_target);
}

AlphaStar estimate_alpha_star(const ControlField& controls, const MarketParams& m, const Scenario& sc,
                              std::size_t n_paths, std::uint64_t seed) {
    if (controls.objective.kind != RiskKind::LS) {
        throw std::invalid_argument("estimate_alpha_star: requires EW-LS controls");
    }
    if (n_paths < 2) throw std::invalid_argument("estimate_alpha_star: need at least two paths");
    SimulationOptions opt;
    opt.n_paths = n_paths;
    opt.seed = seed;
    opt.W_target = controls.objective.W_target;
    opt.fan_paths = 0;
    opt.alpha = std::max(0.05, 1.0 / static_cast<double>(n_paths));
    const SummaryStats s = simulate_synthetic(controls, m, sc, opt);
    return {s.ps, s.ps_se};
}

} // namespace decum
