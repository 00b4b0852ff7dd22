#include "decum/lattice.hpp"

#include "decum/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace decum {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

// Fractional node coordinate, snapped onto the node when within rounding of it.
double node_coordinate(double x, double lo, double h, std::size_t n) {
    double t = (x - lo) / h;
    const double r = std::round(t);
    if (std::abs(t - r) < 1e-9) t = r;
    return std::clamp(t, 0.0, static_cast<double>(n - 1));
}

} // namespace

void GridSpec::validate() const {
    if (!is_power_of_two(n_s) || !is_power_of_two(n_b)) {
        throw std::invalid_argument("GridSpec: n_s and n_b must be powers of two >= 2");
    }
    if (!(s_min > 0.0 && s_min < s_max)) throw std::invalid_argument("GridSpec: need 0 < s_min < s_max");
    if (!(b_min > 0.0 && b_min < b_max)) throw std::invalid_argument("GridSpec: need 0 < b_min < b_max");
    if (!std::isfinite(s_max) || !std::isfinite(b_max)) throw std::invalid_argument("GridSpec: bounds must be finite");
}

GridSpec GridSpec::localized(std::size_t n_s, std::size_t n_b, const MarketParams& m, double w0,
                             double horizon) {
    if (!(w0 > 0.0) || !(horizon > 0.0)) {
        throw std::invalid_argument("GridSpec::localized: w0 and horizon must be > 0");
    }
    const double half = std::abs(log_drift(m.stock) * horizon) + 8.0 * m.stock.sigma * std::sqrt(horizon);
    GridSpec g;
    g.n_s = n_s;
    g.n_b = n_b;
    g.s_min = g.b_min = w0 * std::exp(-half);
    g.s_max = g.b_max = w0 * std::exp(half);
    return g;
}

StateGrid::StateGrid(const GridSpec& spec) : spec_(spec) {
    spec_.validate();
    const double ls0 = std::log(spec_.s_min);
    const double lb0 = std::log(spec_.b_min);
    h_s_ = (std::log(spec_.s_max) - ls0) / static_cast<double>(spec_.n_s - 1);
    h_b_ = (std::log(spec_.b_max) - lb0) / static_cast<double>(spec_.n_b - 1);
    log_s_.resize(spec_.n_s);
    log_b_.resize(spec_.n_b);
    s_.resize(spec_.n_s);
    b_.resize(spec_.n_b);
    for (std::size_t i = 0; i < spec_.n_s; ++i) {
        log_s_[i] = ls0 + static_cast<double>(i) * h_s_;
        s_[i] = std::exp(log_s_[i]);
    }
    for (std::size_t j = 0; j < spec_.n_b; ++j) {
        log_b_[j] = lb0 + static_cast<double>(j) * h_b_;
        b_[j] = std::exp(log_b_[j]);
    }
}

double StateGrid::interpolate_log(std::span<const double> branch, double log_s, double log_b) const {
    const double ts = node_coordinate(log_s, log_s_.front(), h_s_, spec_.n_s);
    const double tb = node_coordinate(log_b, log_b_.front(), h_b_, spec_.n_b);
    const auto i = std::min(static_cast<std::size_t>(ts), spec_.n_s - 2);
    const auto j = std::min(static_cast<std::size_t>(tb), spec_.n_b - 2);
    const double fs = ts - static_cast<double>(i);
    const double fb = tb - static_cast<double>(j);
    const double* row0 = branch.data() + i * spec_.n_b + j;
    const double* row1 = row0 + spec_.n_b;
    const double lo = row0[0] + fb * (row0[1] - row0[0]);
    const double hi = row1[0] + fb * (row1[1] - row1[0]);
    if (fs == 0.0) return lo;
    if (fs == 1.0) return hi;
    return lo + fs * (hi - lo);
}

ValueField ValueField::zeros(const StateGrid& grid, double time_label) {
    return {std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0), time_label};
}

bool ValueField::matches(const StateGrid& grid) const {
    return solvent.size() == grid.size() && insolvent.size() == grid.size();
}

NodeWealth wealth_of(const StateGrid& grid, Branch branch, std::size_t i, std::size_t j) {
    if (i >= grid.n_s() || j >= grid.n_b()) throw std::out_of_range("wealth_of: node outside grid");
    if (branch == Branch::Solvent) {
        const double s = grid.s(i);
        const double b = grid.b(j);
        return {s, b, s + b};
    }
    const double b = -grid.b(j);
    return {0.0, b, b};
}

double interpolate(const StateGrid& grid, const ValueField& field, double s, double b) {
    if (std::isnan(s) || std::isnan(b)) throw std::invalid_argument("interpolate: NaN query");
    if (!field.matches(grid)) throw std::invalid_argument("interpolate: field shape does not match grid");
    const double ls = s > 0.0 ? std::log(s) : grid.log_s(0);
    if (b < 0.0) return grid.interpolate_log(field.insolvent, ls, std::log(-b));
    const double lb = b > 0.0 ? std::log(b) : grid.log_b(0);
    return grid.interpolate_log(field.solvent, ls, lb);
}

WealthAxis::WealthAxis(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw std::invalid_argument("WealthAxis: need at least two nodes");
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
        if (!(nodes_[k] > nodes_[k - 1])) throw std::invalid_argument("WealthAxis: nodes must be strictly increasing");
    }
}

WealthAxis WealthAxis::from_grid(const StateGrid& grid, int refine) {
    if (refine < 1) throw std::invalid_argument("WealthAxis::from_grid: refine must be >= 1");
    const std::size_t nb = grid.n_b();
    std::vector<double> nodes;
    nodes.reserve(nb + (nb - 1) * static_cast<std::size_t>(refine) + 1);
    for (std::size_t j = nb; j-- > 0;) nodes.push_back(-grid.b(j));
    const double h = grid.h_b() / refine;
    const std::size_t npos = (nb - 1) * static_cast<std::size_t>(refine) + 1;
    for (std::size_t k = 0; k < npos; ++k) {
        nodes.push_back(k % static_cast<std::size_t>(refine) == 0
                            ? grid.b(k / static_cast<std::size_t>(refine))
                            : std::exp(grid.log_b(0) + static_cast<double>(k) * h));
    }
    return WealthAxis(std::move(nodes));
}

double WealthAxis::interpolate(std::span<const double> values, double w) const {
    if (values.size() != nodes_.size()) throw std::invalid_argument("WealthAxis::interpolate: size mismatch");
    if (std::isnan(w)) throw std::invalid_argument("WealthAxis::interpolate: NaN query");
    if (w <= nodes_.front()) return values.front();
    if (w >= nodes_.back()) return values.back();
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), w);
    const auto k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    const double x0 = nodes_[k];
    const double x1 = nodes_[k + 1];
    if (w == x0) return values[k];
    const double f = (w - x0) / (x1 - x0);
    return values[k] + f * (values[k + 1] - values[k]);
}

} // namespace decum
