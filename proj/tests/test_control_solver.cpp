#include "decum/control_solver.hpp"
#include "decum/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace decum;

namespace {

struct Small {
    MarketParams m = MarketParams::crsp_calibration();
    Scenario sc;
    GridSpec spec;
    StateGrid grid;
    GreensFunction g;

    explicit Small(std::size_t n = 64) : spec(GridSpec::localized(n, n, m, 1000.0, 30.0)), grid(spec),
                                         g(build_green(m, spec, sc.dt())) {}
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("admissible withdrawal and allocation sets") {
    const Scenario sc;
    auto z = admissible_q(100.0, 3, sc);
    CHECK(z.lo == 30.0);
    CHECK(z.hi == 60.0);
    z = admissible_q(45.0, 3, sc);
    CHECK(z.hi == 45.0);
    z = admissible_q(10.0, 3, sc);
    CHECK(z.lo == 30.0);
    CHECK(z.hi == 30.0);
    z = admissible_q(-20.0, 3, sc);
    CHECK(z.hi == 30.0);
    z = admissible_q(500.0, sc.M, sc);
    CHECK(z.lo == 0.0);
    CHECK(z.hi == 0.0);
    auto p = admissible_p(10.0, 0, sc);
    CHECK(p.lo == 0.0);
    CHECK(p.hi == 1.0);
    p = admissible_p(0.0, 0, sc);
    CHECK(p.hi == 0.0);
    p = admissible_p(-3.0, 0, sc);
    CHECK(p.hi == 0.0);
}

TEST_CASE("terminal risk terms") {
    ObjectiveSpec ls{RiskKind::LS, 0.0, 0.05, 1.0};
    CHECK(terminal_risk(ls, std::nullopt, -50.0) == -50.0);
    CHECK(terminal_risk(ls, std::nullopt, 50.0) == 0.0);
    ls.W_target = 100.0;
    CHECK(terminal_risk(ls, std::nullopt, 40.0) == -60.0);
    const ObjectiveSpec ps{RiskKind::PS, 0.0, 0.05, 1.0};
    CHECK(terminal_risk(ps, std::nullopt, -1e-9) == -1.0);
    CHECK(terminal_risk(ps, std::nullopt, 0.0) == 0.0);
    const ObjectiveSpec es{RiskKind::ES, 0.0, 0.05, 1.0};
    CHECK(terminal_risk(es, -31.15, -50.0) == doctest::Approx(-31.15 + (-18.85) / 0.05));
    CHECK(terminal_risk(es, -31.15, 10.0) == doctest::Approx(-31.15));
    CHECK_THROWS_AS(terminal_risk(es, std::nullopt, 0.0), std::invalid_argument);
    CHECK(risk_kind_from_string("ES") == RiskKind::ES);
    CHECK_THROWS_AS(risk_kind_from_string("VaR"), std::invalid_argument);
}

TEST_CASE("terminal condition on both branches") {
    const StateGrid grid({16, 16, 1.0, 1000.0, 1.0, 1000.0});
    const ObjectiveSpec obj{RiskKind::LS, 100.0, 0.05, 2.0};
    const auto v = terminal_condition(grid, obj, std::nullopt, -1e-4);
    const double w = grid.s(0) + grid.b(1);
    CHECK(v.solvent[grid.index(0, 1)] == doctest::Approx(2.0 * std::min(w - 100.0, 0.0) - 1e-4 * w));
    const double d = -grid.b(5);
    CHECK(v.insolvent[grid.index(9, 5)] == doctest::Approx(2.0 * (d - 100.0) - 1e-4 * d));
}

TEST_CASE("reward-only rebalance withdraws as much as allowed") {
    const StateGrid grid({32, 32, 1.0, 1.0e4, 1.0, 1.0e4});
    const auto axis = WealthAxis::from_grid(grid, 2);
    const Scenario sc;
    const auto out = rebalance_step(grid, axis, ValueField::zeros(grid, 1.0), 0, sc);
    for (std::size_t k = 0; k < axis.size(); ++k) {
        const double w = axis[k];
        const double expected = w >= 60.0 ? 60.0 : std::max(30.0, w);
        CHECK(out.q_table[k] == doctest::Approx(expected));
        // Every allocation ties, and ties go to the smallest stock fraction.
        CHECK(out.p_table[k] == 0.0);
    }
}

TEST_CASE("rebalance agrees with a brute-force scan of the control grid") {
    const StateGrid grid({32, 32, 1.0, 1.0e4, 1.0, 1.0e4});
    const auto axis = WealthAxis::from_grid(grid, 2);
    const Scenario sc;
    ValueField v = ValueField::zeros(grid, 1.0);
    // A smooth surface preferring a stock fraction near 0.3 and penalizing debt.
    for (std::size_t i = 0; i < grid.n_s(); ++i) {
        for (std::size_t j = 0; j < grid.n_b(); ++j) {
            const double s = grid.s(i), b = grid.b(j), w = s + b;
            v.solvent[grid.index(i, j)] = 2.0 * std::sqrt(w) - 40.0 * std::pow(s / w - 0.3, 2);
            v.insolvent[grid.index(i, j)] = -5.0 * std::sqrt(b);
        }
    }
    const auto out = rebalance_step(grid, axis, v, 4, sc, {31, 21});
    for (std::size_t k : {10u, 40u, 50u, 60u, 70u, 80u}) {
        const double w = axis[k];
        double best = -std::numeric_limits<double>::infinity();
        const double q_hi = std::max(30.0, std::min(60.0, w));
        std::vector<double> qs;
        for (int a = 0; a < 31 && 30.0 + a < q_hi; ++a) qs.push_back(30.0 + a);
        qs.push_back(q_hi);
        for (double q : qs) {
            const double x = w - q;
            if (x <= 0.0) {
                best = std::max(best, q + interpolate(grid, v, 0.0, x < 0.0 ? x : -grid.b(0)));
                continue;
            }
            for (int c = 0; c < 21; ++c) {
                const double p = c / 20.0;
                best = std::max(best, q + interpolate(grid, v, p * x, (1.0 - p) * x));
            }
        }
        CHECK(out.value_by_wealth[k] == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("solve decomposition, admissibility and monotonicity") {
    const Small s(64);
    const ObjectiveSpec obj{RiskKind::LS, 0.0, 0.05, 30.0};
    const auto r = solve_fixed(obj, s.sc, s.grid, s.g);
    CHECK(r.value == doctest::Approx(r.ew_component + 30.0 * r.risk_component +
                                     s.sc.epsilon * r.expected_terminal_wealth).epsilon(1e-10));
    CHECK(r.ew_per_period() >= s.sc.q_min);
    CHECK(r.ew_per_period() <= s.sc.q_max);
    CHECK(r.risk_component <= 0.0);
    const auto& c = r.controls;
    REQUIRE(c.q.size() == static_cast<std::size_t>(s.sc.M));
    for (int i = 0; i < s.sc.M; ++i) {
        for (std::size_t k = 0; k < c.wealth.size(); ++k) {
            const auto zq = admissible_q(c.wealth[k], i, s.sc);
            const auto zp = admissible_p(c.wealth[k], i, s.sc);
            CHECK(c.q[i][k] >= zq.lo - 1e-12);
            CHECK(c.q[i][k] <= zq.hi + 1e-12);
            CHECK(c.p[i][k] >= zp.lo);
            CHECK(c.p[i][k] <= zp.hi);
        }
    }
}

TEST_CASE("value before withdrawal is non-decreasing in wealth at every date") {
    // With epsilon < 0 the terminal-wealth penalty makes the value fall at high wealth.
    Small s(64);
    s.sc.epsilon = 0.0;
    const auto axis = WealthAxis::from_grid(s.grid);
    const ObjectiveSpec obj{RiskKind::LS, 0.0, 0.05, 30.0};
    auto v = terminal_condition(s.grid, obj, std::nullopt, s.sc.epsilon);
    v.time_label = s.sc.T;
    for (int i = s.sc.M - 1; i >= 0; --i) {
        const auto out = rebalance_step(s.grid, axis, advance(v, s.g), i, s.sc);
        for (std::size_t k = 1; k < axis.size(); ++k) {
            CHECK(out.value_by_wealth[k] >= out.value_by_wealth[k - 1] - 1e-9);
        }
        v = out.minus.value;
    }
}

TEST_CASE("smaller risk weight buys withdrawals with risk") {
    const Small s(64);
    const auto lo = solve_fixed({RiskKind::LS, 0.0, 0.05, 1.0}, s.sc, s.grid, s.g);
    const auto hi = solve_fixed({RiskKind::LS, 0.0, 0.05, 100.0}, s.sc, s.grid, s.g);
    CHECK(lo.ew_component > hi.ew_component);
    CHECK(lo.risk_component < hi.risk_component);
}

TEST_CASE("lattice kernel requires diffusion") {
    MarketParams m = MarketParams::crsp_calibration();
    m.stock.sigma = 0.0;
    const auto spec = GridSpec::localized(32, 32, MarketParams::crsp_calibration(), 1000.0, 30.0);
    CHECK_THROWS_AS(build_green(m, spec, 1.0), std::invalid_argument);
}

TEST_CASE("ES outer search and its bracket diagnostics") {
    const Small s(32);
    OuterSearch search;
    search.scan_points = 11;
    search.tolerance = 0.5;
    const auto r = solve_ew_es(0.05, 1.0, s.sc, s.grid, s.g, search);
    REQUIRE(r.W_star.has_value());
    CHECK(*r.W_star > search.lo);
    CHECK(*r.W_star < search.hi);
    CHECK(r.controls.W_star == r.W_star);
    for (const auto& [w, v] : r.outer_profile) CHECK(v <= r.value + 1e-12);
    OuterSearch narrow{400.0, 500.0, 5, 1.0};
    CHECK_THROWS_AS(solve_ew_es(0.05, 1.0, s.sc, s.grid, s.g, narrow), NumericalError);
    CHECK_THROWS_AS(solve_fixed({RiskKind::ES, 0.0, 0.05, 1.0}, s.sc, s.grid, s.g), std::invalid_argument);
}

TEST_CASE("solver rejects inconsistent inputs") {
    const Small s(32);
    Scenario sc = s.sc;
    sc.M = 15;
    CHECK_THROWS_AS(solve_fixed({}, sc, s.grid, s.g), std::invalid_argument);
    const StateGrid other(GridSpec::localized(64, 64, s.m, 1000.0, 30.0));
    CHECK_THROWS_AS(solve_fixed({}, s.sc, other, s.g), std::invalid_argument);
    CHECK_THROWS_AS(solve_fixed({RiskKind::LS, 0.0, 0.05, -1.0}, s.sc, s.grid, s.g), std::invalid_argument);
}

TEST_CASE("control files round-trip byte for byte") {
    const Small s(32);
    const auto r = solve_fixed({RiskKind::PS, 10.0, 0.05, 100.0}, s.sc, s.grid, s.g);
    const auto a = temp_path("decum_controls_a.json"), b = temp_path("decum_controls_b.json");
    save_controls(r.controls, a);
    const auto loaded = load_controls(a);
    CHECK(loaded.q == r.controls.q);
    CHECK(loaded.p == r.controls.p);
    CHECK(loaded.grid == r.controls.grid);
    CHECK(loaded.objective == r.controls.objective);
    save_controls(loaded, b);
    CHECK(slurp(a) == slurp(b));

    const std::string text = slurp(a);
    {
        std::ofstream os(b, std::ios::binary);
        os << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_controls(b), FormatError);
    std::string wrong = text;
    wrong.replace(wrong.find("\"version\":1"), 11, "\"version\":7");
    {
        std::ofstream os(b, std::ios::binary);
        os << wrong;
    }
    CHECK_THROWS_AS(load_controls(b), FormatError);
    CHECK_THROWS_AS(load_controls(temp_path("decum_missing_controls.json")), FormatError);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST_CASE("Bengen strategy") {
    const Scenario sc;
    const auto c = bengen_strategy(sc, GridSpec::localized(32, 32, MarketParams::crsp_calibration(), 1000.0, 30.0));
    CHECK(c.strategy == StrategyKind::Constant);
    for (int i = 0; i < sc.M; ++i) {
        for (double w : {-100.0, 10.0, 1000.0, 5000.0}) {
            CHECK(c.q_at(i, w) == doctest::Approx(40.0));
            CHECK(c.p_at(i, w) == doctest::Approx(0.5));
        }
    }
}
