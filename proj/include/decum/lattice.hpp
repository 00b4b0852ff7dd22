#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace decum {

struct MarketParams;

/// Localized log-space discretization of (s, b). Both axes are equally spaced in
/// log coordinates and sized for FFT convolution (powers of two).
struct GridSpec {
    std::size_t n_s = 512;
    std::size_t n_b = 512;
    double s_min = 0.1;
    double s_max = 1.0e7;
    double b_min = 0.1;
    double b_max = 1.0e7;

    void validate() const;

    /// Bounds spanning exp(+-(|drift*T| + 8 sigma sqrt(T))) around w0, using the
    /// stock parameters for both axes.
    static GridSpec localized(std::size_t n_s, std::size_t n_b, const MarketParams& m, double w0,
                              double horizon);

    bool operator==(const GridSpec&) const = default;
};

enum class Branch { Solvent, Insolvent };

/// Solvent lattice over (log s, log b) plus an identically shaped reflected
/// lattice over (log s, log b') with b' = -b for debt states. Storage is
/// row-major with the b index fastest.
class StateGrid {
public:
    explicit StateGrid(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    std::size_t n_s() const { return spec_.n_s; }
    std::size_t n_b() const { return spec_.n_b; }
    std::size_t size() const { return spec_.n_s * spec_.n_b; }
    std::size_t index(std::size_t i, std::size_t j) const { return i * spec_.n_b + j; }

    double h_s() const { return h_s_; }
    double h_b() const { return h_b_; }
    double log_s(std::size_t i) const { return log_s_[i]; }
    double log_b(std::size_t j) const { return log_b_[j]; }
    double s(std::size_t i) const { return s_[i]; }
    double b(std::size_t j) const { return b_[j]; }
    std::span<const double> log_s_nodes() const { return log_s_; }
    std::span<const double> log_b_nodes() const { return log_b_; }

    /// Bilinear interpolation on one branch in log coordinates, constant
    /// extrapolation outside the localized domain.
    double interpolate_log(std::span<const double> branch, double log_s, double log_b) const;

private:
    GridSpec spec_;
    double h_s_ = 0.0;
    double h_b_ = 0.0;
    std::vector<double> log_s_, log_b_, s_, b_;
};

/// Values on both branches of a StateGrid at one instant.
struct ValueField {
    std::vector<double> solvent;
    std::vector<double> insolvent;
    double time_label = 0.0;

    static ValueField zeros(const StateGrid& grid, double time_label = 0.0);
    bool matches(const StateGrid& grid) const;
};

struct NodeWealth {
    double s = 0.0;
    double b = 0.0;
    double w = 0.0;
};

/// Portfolio composition at a lattice node. On the reflected lattice the stock
/// holding is zero (trading has ceased) and b is the negative debt.
NodeWealth wealth_of(const StateGrid& grid, Branch branch, std::size_t i, std::size_t j);

/// Field value at an arbitrary state. b > 0 reads the solvent lattice, b < 0 the
/// reflected one, b == 0 the solvent lattice clamped to b_min. s <= 0 clamps to s_min.
double interpolate(const StateGrid& grid, const ValueField& field, double s, double b);

/// Sorted one-dimensional total-wealth axis on which control tables live:
/// the reflected debt nodes (negative) followed by a refined log-uniform
/// positive axis whose nodes include every b node.
class WealthAxis {
public:
    WealthAxis() = default;
    explicit WealthAxis(std::vector<double> nodes);

    static WealthAxis from_grid(const StateGrid& grid, int refine = 4);

    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t k) const { return nodes_[k]; }
    std::span<const double> nodes() const { return nodes_; }

    /// Piecewise-linear interpolation in w with constant extrapolation.
    double interpolate(std::span<const double> values, double w) const;

private:
    std::vector<double> nodes_;
};

} // namespace decum
