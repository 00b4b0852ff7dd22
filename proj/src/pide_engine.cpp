#include "decum/pide_engine.hpp"

#include "decum/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace decum {

namespace detail {

// The FFTW planner is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftPlans {
    fftw_plan fwd2 = nullptr;
    fftw_plan inv2 = nullptr;
    fftw_plan fwd1 = nullptr;
    fftw_plan inv1 = nullptr;

    FftPlans(std::size_t ls, std::size_t lb) {
        const auto nr2 = ls * lb;
        const auto nc2 = ls * (lb / 2 + 1);
        double* r = fftw_alloc_real(nr2);
        fftw_complex* c = fftw_alloc_complex(nc2);
        std::lock_guard lock(planner_mutex());
        const int s = static_cast<int>(ls);
        const int b = static_cast<int>(lb);
        fwd2 = fftw_plan_dft_r2c_2d(s, b, r, c, FFTW_ESTIMATE);
        inv2 = fftw_plan_dft_c2r_2d(s, b, c, r, FFTW_ESTIMATE);
        fwd1 = fftw_plan_dft_r2c_1d(b, r, c, FFTW_ESTIMATE);
        inv1 = fftw_plan_dft_c2r_1d(b, c, r, FFTW_ESTIMATE);
        fftw_free(r);
        fftw_free(c);
    }
    ~FftPlans() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd2);
        fftw_destroy_plan(inv2);
        fftw_destroy_plan(fwd1);
        fftw_destroy_plan(inv1);
    }
    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;
};

} // namespace detail

namespace {

using cplx = std::complex<double>;
constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double negligible_log = -60.0;
constexpr double support_tolerance = 1e-10;
constexpr double max_mass_defect = 1e-6;
constexpr int max_alias = 512;

struct RealBuffer {
    double* p;
    explicit RealBuffer(std::size_t n) : p(fftw_alloc_real(n)) {}
    ~RealBuffer() { fftw_free(p); }
    RealBuffer(const RealBuffer&) = delete;
    RealBuffer& operator=(const RealBuffer&) = delete;
};

struct ComplexBuffer {
    fftw_complex* p;
    explicit ComplexBuffer(std::size_t n) : p(fftw_alloc_complex(n)) {}
    ~ComplexBuffer() { fftw_free(p); }
    ComplexBuffer(const ComplexBuffer&) = delete;
    ComplexBuffer& operator=(const ComplexBuffer&) = delete;
    cplx* data() { return reinterpret_cast<cplx*>(p); }
};

// Per-axis Levy exponent dt*(i w a - sigma^2 w^2 / 2 + lambda (phi_J(w) - 1)).
cplx axis_exponent(const KouJumpParams& p, double drift, double omega, double dt) {
    const cplx i(0.0, 1.0);
    cplx e = i * omega * drift - 0.5 * p.sigma * p.sigma * omega * omega;
    if (p.lambda > 0.0) e += p.lambda * (jump_log_char(p, omega) - 1.0);
    return dt * e;
}

double log_sinc2(double x) {
    if (std::abs(x) < 1e-8) return 0.0;
    const double s = std::sin(x) / x;
    return s == 0.0 ? -1e300 : std::log(s * s);
}

int alias_count(double sigma, double dt, double h) {
    if (sigma <= 0.0) return max_alias;
    const double cutoff = std::sqrt(2.0 * 45.0 / (sigma * sigma * dt));
    const int m = static_cast<int>(std::ceil(cutoff * h / two_pi + 0.5));
    return std::min(m, max_alias);
}

// Significant alias terms for one frequency index: (omega, exponent + log sinc^2).
struct AliasTerm {
    double omega;
    cplx log_weight;
};

std::vector<std::vector<AliasTerm>> axis_terms(const KouJumpParams& p, double drift, double dt,
                                               std::size_t len, double h) {
    const int m_max = alias_count(p.sigma, dt, h);
    std::vector<std::vector<AliasTerm>> terms(len);
    for (std::size_t j = 0; j < len; ++j) {
        const double jj = j < len / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(len);
        const double base = two_pi * jj / (static_cast<double>(len) * h);
        for (int m = -m_max; m <= m_max; ++m) {
            const double omega = base + two_pi * m / h;
            const cplx lw = axis_exponent(p, drift, omega, dt) + log_sinc2(0.5 * omega * h);
            if (lw.real() > negligible_log) terms[j].push_back({omega, lw});
        }
    }
    return terms;
}

int support_half_width(const std::vector<double>& marginal, std::size_t len) {
    double total = 0.0;
    for (double v : marginal) total += v;
    const int limit = static_cast<int>(len / 2) - 1;
    double inside = marginal[0];
    for (int k = 0; k <= limit; ++k) {
        if (k > 0) inside += marginal[static_cast<std::size_t>(k)] + marginal[len - static_cast<std::size_t>(k)];
        if (total - inside <= support_tolerance * total) return k;
    }
    return limit + 1;
}

struct SolventKernel {
    std::vector<double> weights;
    int half_s = 0, half_b = 0;
    double defect = 0.0;
};

// Returns false when the kernel support does not fit inside the padding.
bool solvent_kernel(const MarketParams& m, double dt, std::size_t ls, std::size_t lb, double h_s,
                    double h_b, std::size_t pad_s, std::size_t pad_b, SolventKernel& out) {
    const auto ts = axis_terms(m.stock, log_drift(m.stock), dt, ls, h_s);
    const auto tb = axis_terms(m.bond, log_drift(m.bond), dt, lb, h_b);
    const double cross = -dt * m.rho_sb * m.stock.sigma * m.bond.sigma;

    ComplexBuffer spec(ls * lb);
    cplx* g = spec.data();
    for (std::size_t i = 0; i < ls; ++i) {
        for (std::size_t j = 0; j < lb; ++j) {
            cplx acc = 0.0;
            for (const auto& a : ts[i]) {
                for (const auto& b : tb[j]) {
                    const cplx e = a.log_weight + b.log_weight + cross * a.omega * b.omega;
                    if (e.real() > negligible_log) acc += std::exp(e);
                }
            }
            g[i * lb + j] = acc;
        }
    }
    {
        fftw_plan plan;
        {
            std::lock_guard lock(detail::planner_mutex());
            plan = fftw_plan_dft_2d(static_cast<int>(ls), static_cast<int>(lb), spec.p, spec.p,
                                    FFTW_FORWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        std::lock_guard lock(detail::planner_mutex());
        fftw_destroy_plan(plan);
    }

    const double scale = 1.0 / static_cast<double>(ls * lb);
    std::vector<double> w(ls * lb);
    std::vector<double> marg_s(ls, 0.0), marg_b(lb, 0.0);
    for (std::size_t i = 0; i < ls; ++i) {
        for (std::size_t j = 0; j < lb; ++j) {
            const double v = std::max(0.0, g[i * lb + j].real() * scale);
            w[i * lb + j] = v;
            marg_s[i] += v;
            marg_b[j] += v;
        }
    }
    const int ks = support_half_width(marg_s, ls);
    const int kb = support_half_width(marg_b, lb);
    out.half_s = ks;
    out.half_b = kb;
    if (ks > static_cast<int>(pad_s) || kb > static_cast<int>(pad_b)) return false;

    const std::size_t ws = 2 * static_cast<std::size_t>(ks) + 1;
    const std::size_t wb = 2 * static_cast<std::size_t>(kb) + 1;
    out.weights.assign(ws * wb, 0.0);
    double mass = 0.0;
    for (int a = -ks; a <= ks; ++a) {
        const std::size_t i = static_cast<std::size_t>((a + static_cast<int>(ls)) % static_cast<int>(ls));
        for (int b = -kb; b <= kb; ++b) {
            const std::size_t j = static_cast<std::size_t>((b + static_cast<int>(lb)) % static_cast<int>(lb));
            const double v = w[i * lb + j];
            out.weights[static_cast<std::size_t>(a + ks) * wb + static_cast<std::size_t>(b + kb)] = v;
            mass += v;
        }
    }
    out.defect = std::abs(mass - 1.0);
    if (out.defect > max_mass_defect) {
        throw NumericalError("build_green: solvent kernel mass defect " + std::to_string(out.defect)
                             + " exceeds tolerance; refine the grid");
    }
    for (double& v : out.weights) v /= mass;
    return true;
}

struct InsolventKernel {
    std::vector<double> weights;
    int half = 0;
    double defect = 0.0;
};

bool insolvent_kernel(const MarketParams& m, double dt, std::size_t lb, double h_b, std::size_t pad_b,
                      InsolventKernel& out) {
    const auto tb = axis_terms(m.bond, log_drift(m.bond, m.mu_c_b), dt, lb, h_b);
    ComplexBuffer spec(lb);
    cplx* g = spec.data();
    for (std::size_t j = 0; j < lb; ++j) {
        cplx acc = 0.0;
        for (const auto& b : tb[j]) acc += std::exp(b.log_weight);
        g[j] = acc;
    }
    {
        fftw_plan plan;
        {
            std::lock_guard lock(detail::planner_mutex());
            plan = fftw_plan_dft_1d(static_cast<int>(lb), spec.p, spec.p, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        std::lock_guard lock(detail::planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<double> w(lb);
    for (std::size_t j = 0; j < lb; ++j) w[j] = std::max(0.0, g[j].real() / static_cast<double>(lb));
    const int kb = support_half_width(w, lb);
    if (kb > static_cast<int>(pad_b)) return false;
    out.weights.assign(2 * static_cast<std::size_t>(kb) + 1, 0.0);
    double mass = 0.0;
    for (int b = -kb; b <= kb; ++b) {
        const double v = w[static_cast<std::size_t>((b + static_cast<int>(lb)) % static_cast<int>(lb))];
        out.weights[static_cast<std::size_t>(b + kb)] = v;
        mass += v;
    }
    out.defect = std::abs(mass - 1.0);
    if (out.defect > max_mass_defect) {
        throw NumericalError("build_green: insolvent kernel mass defect " + std::to_string(out.defect)
                             + " exceeds tolerance; refine the grid");
    }
    for (double& v : out.weights) v /= mass;
    out.half = kb;
    return true;
}

} // namespace

double GreensFunction::weight(int ks, int kb) const {
    if (std::abs(ks) > half_s || std::abs(kb) > half_b) return 0.0;
    return kernel[static_cast<std::size_t>(ks + half_s) * static_cast<std::size_t>(2 * half_b + 1)
                  + static_cast<std::size_t>(kb + half_b)];
}

double GreensFunction::insolvent_weight(int kb) const {
    if (std::abs(kb) > half_ins) return 0.0;
    return insolvent_kernel[static_cast<std::size_t>(kb + half_ins)];
}

GreensFunction build_green(const MarketParams& m, const GridSpec& spec, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("build_green: dt must be > 0");
    m.validate();
    // The aliased series converges through the Gaussian factor; without diffusion it does not.
    if (!(m.stock.sigma > 0.0 && m.bond.sigma > 0.0)) {
        throw std::invalid_argument("build_green: both assets need sigma > 0");
    }
    const StateGrid grid(spec);

    GreensFunction g;
    g.dt = dt;
    g.n_s = spec.n_s;
    g.n_b = spec.n_b;
    g.h_s = grid.h_s();
    g.h_b = grid.h_b();
    g.fft_s = 2 * spec.n_s;
    g.fft_b = 2 * spec.n_b;

    // Grow the padded transform until the kernel support fits inside the padding.
    constexpr int max_growth = 4;
    SolventKernel sk;
    InsolventKernel ik;
    for (int attempt = 0;; ++attempt) {
        g.pad_s = (g.fft_s - g.n_s) / 2;
        g.pad_b = (g.fft_b - g.n_b) / 2;
        const bool solvent_ok = solvent_kernel(m, dt, g.fft_s, g.fft_b, g.h_s, g.h_b, g.pad_s, g.pad_b, sk);
        const bool insolvent_ok = solvent_ok && insolvent_kernel(m, dt, g.fft_b, g.h_b, g.pad_b, ik);
        if (solvent_ok && insolvent_ok) break;
        if (attempt == max_growth) {
            throw NumericalError("build_green: kernel support exceeds the padded domain; widen the grid bounds");
        }
        if (!solvent_ok && sk.half_s > static_cast<int>(g.pad_s)) g.fft_s *= 2;
        g.fft_b *= 2;
    }
    g.kernel = std::move(sk.weights);
    g.half_s = sk.half_s;
    g.half_b = sk.half_b;
    g.solvent_mass_defect = sk.defect;
    g.insolvent_kernel = std::move(ik.weights);
    g.half_ins = ik.half;
    g.insolvent_mass_defect = ik.defect;

    g.plans = std::make_shared<detail::FftPlans>(g.fft_s, g.fft_b);

    // Transfer functions: conj(DFT(kernel)) turns the product into a correlation
    // u_i = sum_k g_k v_{i+k}.
    {
        const std::size_t ls = g.fft_s, lb = g.fft_b, lc = lb / 2 + 1;
        RealBuffer r(ls * lb);
        ComplexBuffer c(ls * lc);
        std::fill(r.p, r.p + ls * lb, 0.0);
        for (int a = -g.half_s; a <= g.half_s; ++a) {
            const auto i = static_cast<std::size_t>((a + static_cast<int>(ls)) % static_cast<int>(ls));
            for (int b = -g.half_b; b <= g.half_b; ++b) {
                const auto j = static_cast<std::size_t>((b + static_cast<int>(lb)) % static_cast<int>(lb));
                r.p[i * lb + j] = g.weight(a, b);
            }
        }
        fftw_execute_dft_r2c(g.plans->fwd2, r.p, c.p);
        g.transfer.resize(ls * lc);
        for (std::size_t k = 0; k < ls * lc; ++k) g.transfer[k] = std::conj(c.data()[k]);

        std::fill(r.p, r.p + lb, 0.0);
        for (int b = -g.half_ins; b <= g.half_ins; ++b) {
            r.p[static_cast<std::size_t>((b + static_cast<int>(lb)) % static_cast<int>(lb))] = g.insolvent_weight(b);
        }
        fftw_execute_dft_r2c(g.plans->fwd1, r.p, c.p);
        g.insolvent_transfer.resize(lc);
        for (std::size_t k = 0; k < lc; ++k) g.insolvent_transfer[k] = std::conj(c.data()[k]);
    }
    return g;
}

void advance_solvent(std::span<const double> in, std::span<double> out, const GreensFunction& g) {
    const std::size_t n = g.n_s * g.n_b;
    if (in.size() != n || out.size() != n) throw std::invalid_argument("advance: field shape does not match kernel");
    const std::size_t ls = g.fft_s, lb = g.fft_b, lc = lb / 2 + 1;
    RealBuffer r(ls * lb);
    ComplexBuffer c(ls * lc);
    const auto clamp_idx = [](std::size_t k, std::size_t pad, std::size_t len) {
        return k < pad ? 0 : std::min(k - pad, len - 1);
    };
    for (std::size_t i = 0; i < ls; ++i) {
        const double* src = in.data() + clamp_idx(i, g.pad_s, g.n_s) * g.n_b;
        double* dst = r.p + i * lb;
        for (std::size_t j = 0; j < lb; ++j) dst[j] = src[clamp_idx(j, g.pad_b, g.n_b)];
    }
    fftw_execute_dft_r2c(g.plans->fwd2, r.p, c.p);
    cplx* cc = c.data();
    for (std::size_t k = 0; k < ls * lc; ++k) cc[k] *= g.transfer[k];
    fftw_execute_dft_c2r(g.plans->inv2, c.p, r.p);
    const double scale = 1.0 / static_cast<double>(ls * lb);
    for (std::size_t i = 0; i < g.n_s; ++i) {
        const double* src = r.p + (i + g.pad_s) * lb + g.pad_b;
        double* dst = out.data() + i * g.n_b;
        for (std::size_t j = 0; j < g.n_b; ++j) dst[j] = src[j] * scale;
    }
}

void advance_insolvent(std::span<const double> in, std::span<double> out, const GreensFunction& g) {
    const std::size_t n = g.n_s * g.n_b;
    if (in.size() != n || out.size() != n) throw std::invalid_argument("advance: field shape does not match kernel");
    const std::size_t lb = g.fft_b, lc = lb / 2 + 1;
    RealBuffer r(lb);
    ComplexBuffer c(lc);
    const double scale = 1.0 / static_cast<double>(lb);
    for (std::size_t i = 0; i < g.n_s; ++i) {
        const double* src = in.data() + i * g.n_b;
        double* dst = out.data() + i * g.n_b;
        // Rows are usually identical (the stock holding is zero); reuse the previous row.
        if (i > 0 && std::equal(src, src + g.n_b, src - g.n_b)) {
            std::copy(dst - g.n_b, dst, dst);
            continue;
        }
        for (std::size_t j = 0; j < lb; ++j) {
            r.p[j] = src[j < g.pad_b ? 0 : std::min(j - g.pad_b, g.n_b - 1)];
        }
        fftw_execute_dft_r2c(g.plans->fwd1, r.p, c.p);
        cplx* cc = c.data();
        for (std::size_t k = 0; k < lc; ++k) cc[k] *= g.insolvent_transfer[k];
        fftw_execute_dft_c2r(g.plans->inv1, c.p, r.p);
        for (std::size_t j = 0; j < g.n_b; ++j) dst[j] = r.p[j + g.pad_b] * scale;
    }
}

ValueField advance(const ValueField& field, const GreensFunction& g) {
    ValueField out;
    out.solvent.resize(field.solvent.size());
    out.insolvent.resize(field.insolvent.size());
    advance_solvent(field.solvent, out.solvent, g);
    advance_insolvent(field.insolvent, out.insolvent, g);
    out.time_label = field.time_label - g.dt;
    return out;
}

void write_kernel_csv(const GreensFunction& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_kernel_csv: cannot open " + path);
    os.precision(17);
    os << "branch,offset_log_s,offset_log_b,weight\n";
    for (int a = -g.half_s; a <= g.half_s; ++a) {
        for (int b = -g.half_b; b <= g.half_b; ++b) {
            const double w = g.weight(a, b);
            if (w > 0.0) os << "solvent," << a * g.h_s << ',' << b * g.h_b << ',' << w << '\n';
        }
    }
    for (int b = -g.half_ins; b <= g.half_ins; ++b) {
        const double w = g.insolvent_weight(b);
        if (w > 0.0) os << "insolvent,0," << b * g.h_b << ',' << w << '\n';
    }
}

} // namespace decum
