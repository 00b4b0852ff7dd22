#include "decum/bootstrap.hpp"
#include "decum/errors.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace decum {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool iso_date(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t k : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (!std::isdigit(static_cast<unsigned char>(d[k]))) return false;
    }
    return true;
}

double parse_return(const std::string& cell, std::size_t row, const char* column) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != cell.size() || !std::isfinite(v)) {
        throw FormatError("returns: row " + std::to_string(row) + ": cannot parse " + column + " '" + cell + "'");
    }
    if (v <= -1.0) {
        throw FormatError("returns: row " + std::to_string(row) + ": " + column + " must exceed -1");
    }
    return v;
}

} // namespace

void ReturnSeries::validate() const {
    if (stock.empty()) throw std::invalid_argument("ReturnSeries: empty series");
    if (bond.size() != stock.size() || (!dates.empty() && dates.size() != stock.size())) {
        throw std::invalid_argument("ReturnSeries: column lengths differ");
    }
    for (std::size_t k = 0; k < stock.size(); ++k) {
        if (!(stock[k] > -1.0) || !(bond[k] > -1.0)) {
            throw std::invalid_argument("ReturnSeries: returns must exceed -1 (row " + std::to_string(k + 1) + ")");
        }
    }
    for (std::size_t k = 1; k < dates.size(); ++k) {
        if (!(dates[k - 1] < dates[k])) {
            throw std::invalid_argument("ReturnSeries: dates must be strictly increasing (row " +
                                        std::to_string(k + 1) + ")");
        }
    }
}

ReturnSeries load_return_series(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("returns: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw FormatError("returns: " + path + " is empty");
    auto header = split_csv(line);
    for (auto& h : header) h = trim(h);
    if (header != std::vector<std::string>{"date", "stock_real_return", "bond_real_return"}) {
        throw FormatError("returns: row 1: expected header 'date,stock_real_return,bond_real_return'");
    }
    ReturnSeries s;
    s.source = path;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 3) {
            throw FormatError("returns: row " + std::to_string(row) + ": expected 3 columns, found " +
                              std::to_string(cells.size()));
        }
        const std::string date = trim(cells[0]);
        if (!iso_date(date)) {
            throw FormatError("returns: row " + std::to_string(row) + ": date '" + date + "' is not YYYY-MM-DD");
        }
        if (!s.dates.empty() && !(s.dates.back() < date)) {
            throw FormatError("returns: row " + std::to_string(row) + ": dates must be strictly increasing");
        }
        s.dates.push_back(date);
        s.stock.push_back(parse_return(trim(cells[1]), row, "stock_real_return"));
        s.bond.push_back(parse_return(trim(cells[2]), row, "bond_real_return"));
    }
    if (s.stock.empty()) throw FormatError("returns: " + path + " has no data rows");
    return s;
}

void save_return_series(const ReturnSeries& series, const std::string& path) {
    series.validate();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "date,stock_real_return,bond_real_return\n" << std::setprecision(17);
    for (std::size_t k = 0; k < series.size(); ++k) {
        os << (series.dates.empty() ? std::to_string(k) : series.dates[k]) << ',' << series.stock[k] << ','
           << series.bond[k] << '\n';
    }
}

ReturnSeries generate_synthetic_series(const MarketParams& m, std::size_t months, std::uint64_t seed) {
    m.validate();
    if (months == 0) throw std::invalid_argument("generate_synthetic_series: months must be >= 1");
    ReturnSeries s;
    s.source = "synthetic";
    s.stock.resize(months);
    s.bond.resize(months);
    s.dates.resize(months);
    Rng rng = make_stream(seed, 0);
    for (std::size_t k = 0; k < months; ++k) {
        const LogIncrement inc = sample_increment(m, 1.0 / 12.0, false, rng);
        s.stock[k] = std::expm1(inc.ds);
        s.bond[k] = std::expm1(inc.db);
        const std::size_t year = 1000 + k / 12;
        std::ostringstream d;
        d << std::setfill('0') << std::setw(4) << year << '-' << std::setw(2) << (k % 12 + 1) << "-01";
        s.dates[k] = d.str();
    }
    // Years past 9999 would break the ISO ordering; long series carry no dates.
    if (months / 12 + 1000 > 9999) s.dates.clear();
    return s;
}

void BootstrapSpec::validate() const {
    if (!(expected_blocksize >= 1.0)) throw std::invalid_argument("BootstrapSpec: expected_blocksize must be >= 1");
    if (n_paths < 1) throw std::invalid_argument("BootstrapSpec: n_paths must be >= 1");
}

BlockSampler::BlockSampler(std::size_t series_length, const BootstrapSpec& spec)
    : n_(series_length), wrap_(spec.wrap), length_(1.0 / spec.expected_blocksize),
      start_(0, series_length == 0 ? 0 : series_length - 1) {
    spec.validate();
    if (series_length == 0) throw std::invalid_argument("BlockSampler: empty series");
}

std::size_t BlockSampler::next(Rng& rng) {
    if (remaining_ > 0 && !wrap_ && pos_ + 1 >= n_) remaining_ = 0;
    if (remaining_ == 0) {
        pos_ = start_(rng);
        remaining_ = length_(rng) + 1;
        ++blocks_;
    } else {
        pos_ = pos_ + 1 == n_ ? 0 : pos_ + 1;
    }
    --remaining_;
    return pos_;
}

BootstrapStream::BootstrapStream(const ReturnSeries& series, const BootstrapSpec& spec, int horizon_years)
    : series_(series), spec_(spec), months_(static_cast<std::size_t>(horizon_years) * 12) {
    series.validate();
    spec.validate();
    if (horizon_years < 1) throw std::invalid_argument("BootstrapStream: horizon must be >= 1 year");
}

void BootstrapStream::fill(std::size_t k, ReturnPath& out) const {
    Rng rng = make_stream(spec_.seed, k);
    BlockSampler stock(series_.size(), spec_);
    BlockSampler bond(series_.size(), spec_);
    out.stock.resize(months_);
    out.bond.resize(months_);
    for (std::size_t t = 0; t < months_; ++t) {
        const std::size_t is = stock.next(rng);
        const std::size_t ib = spec_.paired ? is : bond.next(rng);
        out.stock[t] = series_.stock[is];
        out.bond[t] = series_.bond[ib];
    }
}

ReturnPath BootstrapStream::path(std::size_t k) const {
    ReturnPath p;
    fill(k, p);
    return p;
}

SummaryStats simulate_bootstrap(const ControlField& controls, const ReturnSeries& series, const BootstrapSpec& spec,
                                const Scenario& sc, double mu_c_b, const SimulationOptions& opt) {
    sc.validate();
    spec.validate();
    const double months_per_period = 12.0 * sc.dt();
    if (std::abs(months_per_period - std::round(months_per_period)) > 1e-9 || months_per_period < 1.0) {
        throw std::invalid_argument("simulate_bootstrap: rebalance interval must be a whole number of months");
    }
    const auto mpp = static_cast<std::size_t>(std::round(months_per_period));
    const int horizon_years = static_cast<int>(std::ceil(mpp * static_cast<std::size_t>(sc.M) / 12.0));
    const BootstrapStream stream(series, spec, horizon_years);
    const detail::PathPolicy policy(controls, sc);
    const double spread = std::exp(mu_c_b * sc.dt());

    const std::size_t n = spec.n_paths;
    const std::size_t n_fan = std::min(opt.fan_paths, n);
    const std::size_t blocks = (n + simulation_block - 1) / simulation_block;
    std::vector<double> terminal(n), withdrawals(n);
    std::vector<std::size_t> interior(blocks, 0);
    std::vector<detail::PathRecord> fans(n_fan);

    const auto run_block = [&](std::size_t blk) {
        ReturnPath r;
        const std::size_t end = std::min(n, (blk + 1) * simulation_block);
        for (std::size_t path = blk * simulation_block; path < end; ++path) {
            stream.fill(path, r);
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
                double gs = 1.0, gb = 1.0;
                for (std::size_t t = static_cast<std::size_t>(i) * mpp; t < static_cast<std::size_t>(i + 1) * mpp; ++t) {
                    gs *= 1.0 + r.stock[t];
                    gb *= 1.0 + r.bond[t];
                }
                w = w_plus <= 0.0 ? w_plus * gb * spread : p * w_plus * gs + (1.0 - p) * w_plus * gb;
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

} // namespace decum
