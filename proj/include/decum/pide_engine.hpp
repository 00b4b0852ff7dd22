#pragma once

#include "decum/lattice.hpp"
#include "decum/market_model.hpp"

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace decum {

namespace detail {
struct FftPlans;
}

/// One-period transition kernel of the joint log-return process on a lattice.
///
/// Weight (ks, kb) is the expectation of the bilinear hat function centred at
/// offset (ks*h_s, kb*h_b) under the law of (dlog S, dlog B). Advancing a field
/// with it yields the conditional expectation of the field's piecewise-bilinear
/// interpolant. The insolvent kernel is one-dimensional in log b' and carries the
/// borrowing spread; the stock holding is zero on that branch.
struct GreensFunction {
    double dt = 0.0;
    std::size_t n_s = 0, n_b = 0;     ///< lattice shape
    std::size_t fft_s = 0, fft_b = 0; ///< padded transform sizes
    std::size_t pad_s = 0, pad_b = 0; ///< constant-extension nodes added per side
    int half_s = 0, half_b = 0;       ///< solvent kernel half-widths, in nodes
    int half_ins = 0;                 ///< insolvent kernel half-width, in nodes
    double h_s = 0.0, h_b = 0.0;

    /// (2 half_s + 1) x (2 half_b + 1), row-major, offset -half first.
    std::vector<double> kernel;
    /// 2 half_ins + 1 weights over log b' offsets.
    std::vector<double> insolvent_kernel;

    /// Mass lost by clipping and truncation before renormalization.
    double solvent_mass_defect = 0.0;
    double insolvent_mass_defect = 0.0;

    std::vector<std::complex<double>> transfer;           ///< fft_s x (fft_b/2 + 1)
    std::vector<std::complex<double>> insolvent_transfer; ///< fft_b/2 + 1
    std::shared_ptr<detail::FftPlans> plans;

    double weight(int ks, int kb) const;
    double insolvent_weight(int kb) const;
};

/// Builds both kernels by inverse FFT of the characteristic function sampled on
/// the conjugate frequency lattice of the zero-padded grid.
GreensFunction build_green(const MarketParams& m, const GridSpec& spec, double dt);

/// Conditional expectation of `field` one period ahead: t_{i+1}^- values in,
/// t_i^+ values out. Values beyond the localized domain are extended as constants.
ValueField advance(const ValueField& field, const GreensFunction& g);

/// Advances only the solvent (or only the insolvent) branch, in place of `out`.
void advance_solvent(std::span<const double> in, std::span<double> out, const GreensFunction& g);
void advance_insolvent(std::span<const double> in, std::span<double> out, const GreensFunction& g);

/// Diagnostic dump: branch,offset_log_s,offset_log_b,weight for all non-zero weights.
void write_kernel_csv(const GreensFunction& g, const std::string& path);

} // namespace decum
