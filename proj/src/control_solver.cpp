#include "decum/control_solver.hpp"

#include "decum/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace decum {

namespace {

// Stand-in for log(0) when a holding is exactly zero; clamps to the first node.
constexpr double log_zero = -1.0e300;
constexpr double q_tol = 1e-12;

struct Located {
    std::size_t k = 0;
    double f = 0.0;
};

Located locate(const WealthAxis& axis, double w) {
    const auto nodes = axis.nodes();
    if (w <= nodes.front()) return {0, 0.0};
    if (w >= nodes.back()) return {nodes.size() - 2, 1.0};
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), w);
    const auto k = static_cast<std::size_t>(it - nodes.begin()) - 1;
    return {k, (w - nodes[k]) / (nodes[k + 1] - nodes[k])};
}

inline double lerp_at(const std::vector<double>& v, Located l) {
    return l.f == 0.0 ? v[l.k] : v[l.k] + l.f * (v[l.k + 1] - v[l.k]);
}

void fill_from_wealth(const StateGrid& grid, const WealthAxis& axis, const std::vector<double>& by_wealth,
                      ValueField& out, const std::vector<Located>& solvent_loc,
                      const std::vector<Located>& insolvent_loc) {
    out.solvent.resize(grid.size());
    out.insolvent.resize(grid.size());
    (void)axis;
    for (std::size_t n = 0; n < grid.size(); ++n) out.solvent[n] = lerp_at(by_wealth, solvent_loc[n]);
    for (std::size_t i = 0; i < grid.n_s(); ++i) {
        for (std::size_t j = 0; j < grid.n_b(); ++j) {
            out.insolvent[grid.index(i, j)] = lerp_at(by_wealth, insolvent_loc[j]);
        }
    }
}

ValueField combine(const FieldSet& f, double kappa, double epsilon) {
    ValueField v;
    v.time_label = f.ew.time_label;
    v.solvent.resize(f.ew.solvent.size());
    v.insolvent.resize(f.ew.insolvent.size());
    for (std::size_t n = 0; n < v.solvent.size(); ++n) {
        v.solvent[n] = f.ew.solvent[n] + kappa * f.risk.solvent[n] + epsilon * f.wealth.solvent[n];
        v.insolvent[n] = f.ew.insolvent[n] + kappa * f.risk.insolvent[n] + epsilon * f.wealth.insolvent[n];
    }
    return v;
}

} // namespace

std::string to_string(RiskKind k) {
    switch (k) {
    case RiskKind::LS: return "LS";
    case RiskKind::PS: return "PS";
    case RiskKind::ES: return "ES";
    }
    return "?";
}

RiskKind risk_kind_from_string(const std::string& s) {
    if (s == "LS") return RiskKind::LS;
    if (s == "PS") return RiskKind::PS;
    if (s == "ES") return RiskKind::ES;
    throw std::invalid_argument("unknown risk kind '" + s + "' (expected LS, PS or ES)");
}

void Scenario::validate() const {
    if (!(T > 0.0) || M < 1) throw std::invalid_argument("Scenario: need T > 0 and M >= 1");
    if (!(W0 > 0.0)) throw std::invalid_argument("Scenario: W0 must be > 0");
    if (!(q_min >= 0.0 && q_min <= q_max)) throw std::invalid_argument("Scenario: need 0 <= q_min <= q_max");
    if (!(p_min >= 0.0 && p_min <= p_max && p_max <= 1.0)) {
        throw std::invalid_argument("Scenario: need 0 <= p_min <= p_max <= 1");
    }
    if (!(std::abs(epsilon) * q_max < 0.1)) throw std::invalid_argument("Scenario: |epsilon| must be small");
}

void ObjectiveSpec::validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("ObjectiveSpec: kappa must be > 0");
    if (kind == RiskKind::ES && !(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("ObjectiveSpec: ES needs 0 < alpha < 1");
    }
    if (!std::isfinite(W_target)) throw std::invalid_argument("ObjectiveSpec: W_target must be finite");
}

void ControlResolution::validate() const {
    if (n_q < 1 || n_p < 1) throw std::invalid_argument("ControlResolution: need n_q >= 1 and n_p >= 1");
}

double ControlField::q_at(int date, double w_minus) const {
    return wealth.interpolate(q.at(static_cast<std::size_t>(date)), w_minus);
}

double ControlField::p_at(int date, double w_plus) const {
    return wealth.interpolate(p.at(static_cast<std::size_t>(date)), w_plus);
}

void ControlField::validate() const {
    const auto m = static_cast<std::size_t>(scenario.M);
    if (q.size() != m || p.size() != m) throw FormatError("controls: expected one table per rebalance date");
    for (std::size_t i = 0; i < m; ++i) {
        if (q[i].size() != wealth.size() || p[i].size() != wealth.size()) {
            throw FormatError("controls: table size does not match the wealth axis");
        }
    }
}

Interval admissible_q(double w_minus, int date, const Scenario& sc) {
    if (date >= sc.M) return {0.0, 0.0};
    if (w_minus >= sc.q_max) return {sc.q_min, sc.q_max};
    return {sc.q_min, std::max(sc.q_min, w_minus)};
}

Interval admissible_p(double w_plus, int date, const Scenario& sc) {
    if (date >= sc.M || w_plus <= 0.0) return {0.0, 0.0};
    return {sc.p_min, sc.p_max};
}

double terminal_risk(const ObjectiveSpec& obj, std::optional<double> w_prime, double w) {
    switch (obj.kind) {
    case RiskKind::LS: return std::min(w - obj.W_target, 0.0);
    case RiskKind::PS: return w < obj.W_target ? -1.0 : 0.0;
    case RiskKind::ES:
        if (!w_prime) throw std::invalid_argument("terminal_condition: ES requires the VaR candidate w_prime");
        return *w_prime + std::min(w - *w_prime, 0.0) / obj.alpha;
    }
    return 0.0;
}

namespace {

FieldSet terminal_fields(const StateGrid& grid, const ObjectiveSpec& obj, std::optional<double> w_prime,
                         double epsilon, double horizon) {
    FieldSet f{ValueField::zeros(grid, horizon), ValueField::zeros(grid, horizon), ValueField::zeros(grid, horizon),
               ValueField::zeros(grid, horizon)};
    for (std::size_t i = 0; i < grid.n_s(); ++i) {
        for (std::size_t j = 0; j < grid.n_b(); ++j) {
            const auto n = grid.index(i, j);
            for (const auto branch : {Branch::Solvent, Branch::Insolvent}) {
                const double w = wealth_of(grid, branch, i, j).w;
                const double g = terminal_risk(obj, w_prime, w);
                auto& risk = branch == Branch::Solvent ? f.risk.solvent : f.risk.insolvent;
                auto& wealth = branch == Branch::Solvent ? f.wealth.solvent : f.wealth.insolvent;
                auto& value = branch == Branch::Solvent ? f.value.solvent : f.value.insolvent;
                risk[n] = g;
                wealth[n] = w;
                value[n] = obj.kappa * g + epsilon * w;
            }
        }
    }
    return f;
}

} // namespace

ValueField terminal_condition(const StateGrid& grid, const ObjectiveSpec& obj, std::optional<double> w_prime,
                              double epsilon) {
    obj.validate();
    if (obj.kind == RiskKind::ES && !w_prime) {
        throw std::invalid_argument("terminal_condition: ES requires the VaR candidate w_prime");
    }
    return terminal_fields(grid, obj, w_prime, epsilon, 0.0).value;
}

RebalanceOutput rebalance_step(const StateGrid& grid, const WealthAxis& axis, const FieldSet& plus, int date,
                               const Scenario& sc, const ControlResolution& res) {
    res.validate();
    if (date < 0 || date >= sc.M) throw std::invalid_argument("rebalance_step: date outside the rebalance schedule");
    for (const auto* f : {&plus.value, &plus.ew, &plus.risk, &plus.wealth}) {
        if (!f->matches(grid)) throw std::invalid_argument("rebalance_step: field shape does not match grid");
    }

    const std::size_t nw = axis.size();
    const double dq = res.n_q > 1 ? (sc.q_max - sc.q_min) / (res.n_q - 1) : 0.0;
    const int n_q = sc.q_max > sc.q_min ? res.n_q : 1;
    std::vector<double> p_val(static_cast<std::size_t>(res.n_p)), lp(p_val.size()), l1p(p_val.size());
    for (int k = 0; k < res.n_p; ++k) {
        const double p = res.n_p > 1 ? sc.p_min + k * (sc.p_max - sc.p_min) / (res.n_p - 1) : sc.p_min;
        p_val[static_cast<std::size_t>(k)] = p;
        lp[static_cast<std::size_t>(k)] = p > 0.0 ? std::log(p) : log_zero;
        l1p[static_cast<std::size_t>(k)] = p < 1.0 ? std::log1p(-p) : log_zero;
    }
    const double ls_floor = grid.log_s(0);
    const auto insolvent_logb = [&](double x) { return x < 0.0 ? std::log(-x) : grid.log_b(0); };

    // Best stock fraction for a post-withdrawal wealth x > 0.
    const auto best_p = [&](double x, double& value) {
        const double lx = std::log(x);
        std::size_t arg = 0;
        value = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < p_val.size(); ++k) {
            const double v = grid.interpolate_log(plus.value.solvent, lp[k] + lx, l1p[k] + lx);
            if (v > value) {
                value = v;
                arg = k;
            }
        }
        return arg;
    };

    RebalanceOutput out;
    out.q_table.assign(nw, 0.0);
    out.p_table.assign(nw, 0.0);
    out.value_by_wealth.assign(nw, 0.0);
    out.ew_by_wealth.assign(nw, 0.0);
    out.risk_by_wealth.assign(nw, 0.0);
    out.wealth_by_wealth.assign(nw, 0.0);

    for (std::size_t node = 0; node < nw; ++node) {
        const double w = axis[node];
        const Interval qi = admissible_q(w, date, sc);
        double best = -std::numeric_limits<double>::infinity();
        double best_q = qi.lo;
        double best_x = w - qi.lo;
        std::size_t best_k = 0;

        const auto consider = [&](double q) {
            const double x = w - q;
            double v;
            std::size_t k = 0;
            if (x > 0.0) {
                k = best_p(x, v);
            } else {
                v = grid.interpolate_log(plus.value.insolvent, ls_floor, insolvent_logb(x));
            }
            v += q;
            if (v > best) {
                best = v;
                best_q = q;
                best_x = x;
                best_k = k;
            }
        };

        double last = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n_q; ++a) {
            const double q = sc.q_min + a * dq;
            if (q > qi.hi + q_tol) break;
            consider(q);
            last = q;
        }
        if (qi.hi > last + q_tol) consider(qi.hi);

        out.q_table[node] = best_q;
        out.value_by_wealth[node] = best;
        if (best_x > 0.0) {
            const double lx = std::log(best_x);
            const double ls = lp[best_k] + lx;
            const double lb = l1p[best_k] + lx;
            out.ew_by_wealth[node] = best_q + grid.interpolate_log(plus.ew.solvent, ls, lb);
            out.risk_by_wealth[node] = grid.interpolate_log(plus.risk.solvent, ls, lb);
            out.wealth_by_wealth[node] = grid.interpolate_log(plus.wealth.solvent, ls, lb);
        } else {
            const double lb = insolvent_logb(best_x);
            out.ew_by_wealth[node] = best_q + grid.interpolate_log(plus.ew.insolvent, ls_floor, lb);
            out.risk_by_wealth[node] = grid.interpolate_log(plus.risk.insolvent, ls_floor, lb);
            out.wealth_by_wealth[node] = grid.interpolate_log(plus.wealth.insolvent, ls_floor, lb);
        }

        // Allocation table over post-withdrawal wealth.
        if (w > 0.0) {
            double v;
            out.p_table[node] = p_val[best_p(w, v)];
        }
    }

    // Value before withdrawal depends on (s, b) only through w = s + b.
    std::vector<Located> sol(grid.size()), ins(grid.n_b());
    for (std::size_t i = 0; i < grid.n_s(); ++i) {
        for (std::size_t j = 0; j < grid.n_b(); ++j) sol[grid.index(i, j)] = locate(axis, grid.s(i) + grid.b(j));
    }
    for (std::size_t j = 0; j < grid.n_b(); ++j) ins[j] = locate(axis, -grid.b(j));

    const double t = date * sc.dt();
    fill_from_wealth(grid, axis, out.value_by_wealth, out.minus.value, sol, ins);
    fill_from_wealth(grid, axis, out.ew_by_wealth, out.minus.ew, sol, ins);
    fill_from_wealth(grid, axis, out.risk_by_wealth, out.minus.risk, sol, ins);
    fill_from_wealth(grid, axis, out.wealth_by_wealth, out.minus.wealth, sol, ins);
    for (auto* f : {&out.minus.value, &out.minus.ew, &out.minus.risk, &out.minus.wealth}) f->time_label = t;
    return out;
}

RebalanceOutput rebalance_step(const StateGrid& grid, const WealthAxis& axis, const ValueField& v_plus, int date,
                               const Scenario& sc, const ControlResolution& res) {
    FieldSet plus{v_plus, ValueField::zeros(grid, v_plus.time_label), ValueField::zeros(grid, v_plus.time_label),
                  ValueField::zeros(grid, v_plus.time_label)};
    return rebalance_step(grid, axis, plus, date, sc, res);
}

SolveResult solve_fixed(const ObjectiveSpec& obj, const Scenario& sc, const StateGrid& grid,
                        const GreensFunction& green, std::optional<double> w_prime, const ControlResolution& res) {
    obj.validate();
    sc.validate();
    res.validate();
    if (obj.kind == RiskKind::ES && !w_prime) throw std::invalid_argument("solve_fixed: ES requires w_prime");
    if (green.n_s != grid.n_s() || green.n_b != grid.n_b()) {
        throw std::invalid_argument("solve_fixed: Green's function built for a different grid");
    }
    if (std::abs(green.dt - sc.dt()) > 1e-12 * std::max(1.0, sc.dt())) {
        throw std::invalid_argument("solve_fixed: Green's function step differs from the rebalance interval");
    }

    const WealthAxis axis = WealthAxis::from_grid(grid);
    FieldSet cur = terminal_fields(grid, obj, w_prime, sc.epsilon, sc.T);

    SolveResult result;
    ControlField& cf = result.controls;
    cf.grid = grid.spec();
    cf.scenario = sc;
    cf.objective = obj;
    cf.resolution = res;
    cf.strategy = StrategyKind::Optimal;
    cf.wealth = axis;
    cf.q.resize(static_cast<std::size_t>(sc.M));
    cf.p.resize(static_cast<std::size_t>(sc.M));

    RebalanceOutput step;
    for (int i = sc.M - 1; i >= 0; --i) {
        FieldSet plus;
        plus.ew = advance(cur.ew, green);
        plus.risk = advance(cur.risk, green);
        plus.wealth = advance(cur.wealth, green);
        plus.value = combine(plus, obj.kappa, sc.epsilon);
        step = rebalance_step(grid, axis, plus, i, sc, res);
        cf.q[static_cast<std::size_t>(i)] = std::move(step.q_table);
        cf.p[static_cast<std::size_t>(i)] = std::move(step.p_table);
        cur = std::move(step.minus);
    }

    const auto at_w0 = locate(axis, sc.W0);
    result.value = lerp_at(step.value_by_wealth, at_w0);
    result.ew_component = lerp_at(step.ew_by_wealth, at_w0);
    result.risk_component = lerp_at(step.risk_by_wealth, at_w0);
    result.expected_terminal_wealth = lerp_at(step.wealth_by_wealth, at_w0);
    if (obj.kind == RiskKind::ES) {
        result.W_star = w_prime;
        cf.W_star = w_prime;
    }
    return result;
}

SolveResult solve_ew_es(double alpha, double kappa, const Scenario& sc, const StateGrid& grid,
                        const GreensFunction& green, const OuterSearch& search, const ControlResolution& res) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("solve_ew_es: need 0 < alpha < 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("solve_ew_es: need kappa > 0");
    if (!(search.hi > search.lo) || search.scan_points < 3 || !(search.tolerance > 0.0)) {
        throw std::invalid_argument("solve_ew_es: invalid outer search settings");
    }
    const ObjectiveSpec obj{RiskKind::ES, 0.0, alpha, kappa};

    std::vector<std::pair<double, double>> profile;
    std::optional<SolveResult> best;
    const auto evaluate = [&](double w_prime) {
        SolveResult r = solve_fixed(obj, sc, grid, green, w_prime, res);
        profile.emplace_back(w_prime, r.value);
        const double v = r.value;
        if (!best || v > best->value) best = std::move(r);
        return v;
    };

    const int n = search.scan_points;
    const double step = (search.hi - search.lo) / (n - 1);
    std::vector<double> scan(static_cast<std::size_t>(n));
    int arg = 0;
    for (int k = 0; k < n; ++k) {
        scan[static_cast<std::size_t>(k)] = evaluate(search.lo + k * step);
        if (scan[static_cast<std::size_t>(k)] > scan[static_cast<std::size_t>(arg)]) arg = k;
    }
    if (arg == 0 || arg == n - 1) {
        std::ostringstream os;
        os << "solve_ew_es: optimum of the outer search lies on the bracket edge; scanned profile (W', value):";
        for (const auto& [x, v] : profile) os << " (" << x << ", " << v << ")";
        throw NumericalError(os.str());
    }

    // Golden-section refinement on the cells adjacent to the best scan point.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = search.lo + (arg - 1) * step;
    double b = search.lo + (arg + 1) * step;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = evaluate(c);
    double fd = evaluate(d);
    while (b - a > search.tolerance) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = evaluate(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = evaluate(d);
        }
    }

    SolveResult out = std::move(*best);
    std::sort(profile.begin(), profile.end());
    out.outer_profile = std::move(profile);
    return out;
}

ControlField bengen_strategy(const Scenario& sc, const GridSpec& spec) {
    sc.validate();
    const StateGrid grid(spec);
    ControlField cf;
    cf.grid = spec;
    cf.scenario = sc;
    cf.strategy = StrategyKind::Constant;
    cf.wealth = WealthAxis::from_grid(grid);
    cf.q.assign(static_cast<std::size_t>(sc.M), std::vector<double>(cf.wealth.size(), 0.04 * sc.W0));
    cf.p.assign(static_cast<std::size_t>(sc.M), std::vector<double>(cf.wealth.size(), 0.5));
    return cf;
}

} // namespace decum
