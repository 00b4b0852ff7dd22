#pragma once

#include "decum/lattice.hpp"
#include "decum/pide_engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace decum {

/// Decumulation scenario. Withdrawals and rebalancing happen at t_i = i*dt for
/// i = 0..M-1; at t_M = T the portfolio is liquidated with no withdrawal.
struct Scenario {
    double T = 30.0;
    int M = 30;
    double W0 = 1000.0;
    double q_min = 30.0;
    double q_max = 60.0;
    double p_min = 0.0;
    double p_max = 1.0;
    double epsilon = -1e-4;
    double real_estate = 400.0; ///< informational only

    double dt() const { return T / M; }
    void validate() const;
    bool operator==(const Scenario&) const = default;
};

enum class RiskKind { LS, PS, ES };

std::string to_string(RiskKind k);
RiskKind risk_kind_from_string(const std::string& s);

/// Risk measure and scalarization weight. LS and PS use W_target; ES uses alpha.
struct ObjectiveSpec {
    RiskKind kind = RiskKind::LS;
    double W_target = 0.0;
    double alpha = 0.05;
    double kappa = 1.0;

    void validate() const;
    bool operator==(const ObjectiveSpec&) const = default;
};

/// Number of equally spaced candidate values for the withdrawal and the stock fraction.
struct ControlResolution {
    int n_q = 61;
    int n_p = 101;

    void validate() const;
    bool operator==(const ControlResolution&) const = default;
};

enum class StrategyKind { Optimal, Constant };

/// Stored feedback controls: for each rebalance date a withdrawal table over
/// pre-withdrawal wealth and a stock-fraction table over post-withdrawal wealth,
/// both on the same wealth axis.
struct ControlField {
    GridSpec grid;
    Scenario scenario;
    ObjectiveSpec objective;
    ControlResolution resolution;
    StrategyKind strategy = StrategyKind::Optimal;
    std::optional<double> W_star;
    WealthAxis wealth;
    std::vector<std::vector<double>> q; ///< [date][wealth node]
    std::vector<std::vector<double>> p; ///< [date][wealth node]

    double q_at(int date, double w_minus) const;
    double p_at(int date, double w_plus) const;
    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Admissible withdrawals at date index i (i == M is the terminal date).
Interval admissible_q(double w_minus, int date, const Scenario& sc);

/// Admissible stock fractions: [p_min, p_max] when solvent before T, {0} otherwise.
Interval admissible_p(double w_plus, int date, const Scenario& sc);

/// Risk term G(w) of the objective; ES requires w_prime (the VaR candidate).
double terminal_risk(const ObjectiveSpec& obj, std::optional<double> w_prime, double w);

/// kappa * G(w) + epsilon * w on both branches of the lattice.
ValueField terminal_condition(const StateGrid& grid, const ObjectiveSpec& obj, std::optional<double> w_prime,
                              double epsilon);

/// Value field with its additive decomposition:
/// value = ew + kappa * risk + epsilon * wealth.
struct FieldSet {
    ValueField value;
    ValueField ew;     ///< expected withdrawals from this instant onwards
    ValueField risk;   ///< expected risk term G(W_T)
    ValueField wealth; ///< expected terminal wealth
};

struct RebalanceOutput {
    FieldSet minus;
    std::vector<double> q_table; ///< over pre-withdrawal wealth
    std::vector<double> p_table; ///< over post-withdrawal wealth
    std::vector<double> value_by_wealth, ew_by_wealth, risk_by_wealth, wealth_by_wealth;
};

/// Exhaustive search over the discretized admissible (q, p) at every node of
/// the wealth axis. Ties resolve to the smallest q, then the smallest p.
RebalanceOutput rebalance_step(const StateGrid& grid, const WealthAxis& axis, const FieldSet& plus, int date,
                               const Scenario& sc, const ControlResolution& res = {});

/// Single-field form: components other than the value are carried as zeros.
RebalanceOutput rebalance_step(const StateGrid& grid, const WealthAxis& axis, const ValueField& v_plus,
                               int date, const Scenario& sc, const ControlResolution& res = {});

struct SolveResult {
    double value = 0.0;             ///< objective at (W0, t_0^-)
    double ew_component = 0.0;      ///< E[sum q_i]
    double risk_component = 0.0;    ///< E[G(W_T)]
    double expected_terminal_wealth = 0.0;
    ControlField controls;
    std::optional<double> W_star;
    std::vector<std::pair<double, double>> outer_profile; ///< (W', value) pairs visited by the ES search

    double ew_per_period() const { return ew_component / controls.scenario.M; }
};

/// Backward induction for a fixed terminal condition.
SolveResult solve_fixed(const ObjectiveSpec& obj, const Scenario& sc, const StateGrid& grid,
                        const GreensFunction& green, std::optional<double> w_prime = std::nullopt,
                        const ControlResolution& res = {});

struct OuterSearch {
    double lo = -500.0;
    double hi = 500.0;
    int scan_points = 21;
    double tolerance = 1e-3;
};

/// Outer maximization over W' of the embedded EW-ES problem: coarse scan then
/// golden-section refinement.
SolveResult solve_ew_es(double alpha, double kappa, const Scenario& sc, const StateGrid& grid,
                        const GreensFunction& green, const OuterSearch& search = {},
                        const ControlResolution& res = {});

/// Withdraw 4% of W0 every year and hold 50% in stocks.
ControlField bengen_strategy(const Scenario& sc, const GridSpec& grid);

void save_controls(const ControlField& c, const std::string& path);
ControlField load_controls(const std::string& path);

} // namespace decum
