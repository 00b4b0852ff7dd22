#include "decum/bootstrap.hpp"
#include "decum/control_solver.hpp"
#include "decum/errors.hpp"
#include "decum/market_model.hpp"
#include "decum/pide_engine.hpp"
#include "decum/simulation.hpp"

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace decum;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

} // namespace

PYBIND11_MODULE(_decum, m) {
    m.doc() = "Optimal retirement decumulation under a jump-diffusion market";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<KouJumpParams>(m, "KouJumpParams")
        .def(py::init<>())
        .def_readwrite("mu", &KouJumpParams::mu)
        .def_readwrite("sigma", &KouJumpParams::sigma)
        .def_readwrite("lambda_", &KouJumpParams::lambda)
        .def_readwrite("u", &KouJumpParams::u)
        .def_readwrite("eta1", &KouJumpParams::eta1)
        .def_readwrite("eta2", &KouJumpParams::eta2);

    py::class_<MarketParams>(m, "MarketParams")
        .def(py::init<>())
        .def_static("crsp_calibration", &MarketParams::crsp_calibration)
        .def_readwrite("stock", &MarketParams::stock)
        .def_readwrite("bond", &MarketParams::bond)
        .def_readwrite("rho_sb", &MarketParams::rho_sb)
        .def_readwrite("mu_c_b", &MarketParams::mu_c_b)
        .def("validate", &MarketParams::validate);

    m.def("jump_compensator", &jump_compensator);
    m.def("joint_char", &joint_char, py::arg("market"), py::arg("omega_s"), py::arg("omega_b"), py::arg("dt"),
          py::arg("insolvent") = false);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("T", &Scenario::T)
        .def_readwrite("M", &Scenario::M)
        .def_readwrite("W0", &Scenario::W0)
        .def_readwrite("q_min", &Scenario::q_min)
        .def_readwrite("q_max", &Scenario::q_max)
        .def_readwrite("p_min", &Scenario::p_min)
        .def_readwrite("p_max", &Scenario::p_max)
        .def_readwrite("epsilon", &Scenario::epsilon)
        .def_readwrite("real_estate", &Scenario::real_estate)
        .def("dt", &Scenario::dt);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_static("localized", &GridSpec::localized, py::arg("n_s"), py::arg("n_b"), py::arg("market"),
                    py::arg("w0"), py::arg("horizon"))
        .def_readwrite("n_s", &GridSpec::n_s)
        .def_readwrite("n_b", &GridSpec::n_b)
        .def_readwrite("s_min", &GridSpec::s_min)
        .def_readwrite("s_max", &GridSpec::s_max)
        .def_readwrite("b_min", &GridSpec::b_min)
        .def_readwrite("b_max", &GridSpec::b_max);

    py::class_<StateGrid>(m, "StateGrid").def(py::init<const GridSpec&>()).def_property_readonly(
        "spec", &StateGrid::spec);

    py::enum_<RiskKind>(m, "RiskKind").value("LS", RiskKind::LS).value("PS", RiskKind::PS).value("ES", RiskKind::ES);

    py::class_<ObjectiveSpec>(m, "ObjectiveSpec")
        .def(py::init([](RiskKind kind, double W_target, double alpha, double kappa) {
                 return ObjectiveSpec{kind, W_target, alpha, kappa};
             }),
             py::arg("kind") = RiskKind::LS, py::arg("W_target") = 0.0, py::arg("alpha") = 0.05,
             py::arg("kappa") = 1.0)
        .def_readwrite("kind", &ObjectiveSpec::kind)
        .def_readwrite("W_target", &ObjectiveSpec::W_target)
        .def_readwrite("alpha", &ObjectiveSpec::alpha)
        .def_readwrite("kappa", &ObjectiveSpec::kappa);

    py::class_<ControlResolution>(m, "ControlResolution")
        .def(py::init([](int n_q, int n_p) { return ControlResolution{n_q, n_p}; }), py::arg("n_q") = 61,
             py::arg("n_p") = 101)
        .def_readwrite("n_q", &ControlResolution::n_q)
        .def_readwrite("n_p", &ControlResolution::n_p);

    py::class_<OuterSearch>(m, "OuterSearch")
        .def(py::init<>())
        .def_readwrite("lo", &OuterSearch::lo)
        .def_readwrite("hi", &OuterSearch::hi)
        .def_readwrite("scan_points", &OuterSearch::scan_points)
        .def_readwrite("tolerance", &OuterSearch::tolerance);

    py::class_<GreensFunction>(m, "GreensFunction")
        .def_readonly("dt", &GreensFunction::dt)
        .def_readonly("solvent_mass_defect", &GreensFunction::solvent_mass_defect)
        .def_readonly("insolvent_mass_defect", &GreensFunction::insolvent_mass_defect)
        .def("weight", &GreensFunction::weight);
    m.def("build_green", &build_green, py::arg("market"), py::arg("grid"), py::arg("dt"));

    py::class_<ControlField>(m, "ControlField")
        .def_readonly("grid", &ControlField::grid)
        .def_readonly("scenario", &ControlField::scenario)
        .def_readonly("objective", &ControlField::objective)
        .def_readonly("W_star", &ControlField::W_star)
        .def_readonly("q", &ControlField::q)
        .def_readonly("p", &ControlField::p)
        .def_property_readonly("wealth", [](const ControlField& c) { return to_vector(c.wealth.nodes()); })
        .def("q_at", &ControlField::q_at)
        .def("p_at", &ControlField::p_at);

    py::class_<SolveResult>(m, "SolveResult")
        .def_readonly("value", &SolveResult::value)
        .def_readonly("ew_component", &SolveResult::ew_component)
        .def_readonly("risk_component", &SolveResult::risk_component)
        .def_readonly("expected_terminal_wealth", &SolveResult::expected_terminal_wealth)
        .def_readonly("controls", &SolveResult::controls)
        .def_readonly("W_star", &SolveResult::W_star)
        .def_readonly("outer_profile", &SolveResult::outer_profile)
        .def("ew_per_period", &SolveResult::ew_per_period);

    m.def("solve_fixed", &solve_fixed, py::arg("objective"), py::arg("scenario"), py::arg("grid"), py::arg("green"),
          py::arg("w_prime") = std::nullopt, py::arg("resolution") = ControlResolution{},
          py::call_guard<py::gil_scoped_release>());
    m.def("solve_ew_es", &solve_ew_es, py::arg("alpha"), py::arg("kappa"), py::arg("scenario"), py::arg("grid"),
          py::arg("green"), py::arg("search") = OuterSearch{}, py::arg("resolution") = ControlResolution{},
          py::call_guard<py::gil_scoped_release>());
    m.def("bengen_strategy", &bengen_strategy, py::arg("scenario"), py::arg("grid"));
    m.def("save_controls", &save_controls);
    m.def("load_controls", &load_controls);

    py::class_<PercentileFan>(m, "PercentileFan")
        .def_readonly("time", &PercentileFan::time)
        .def_readonly("p5", &PercentileFan::p5)
        .def_readonly("p50", &PercentileFan::p50)
        .def_readonly("p95", &PercentileFan::p95);

    py::class_<SummaryStats>(m, "SummaryStats")
        .def_readonly("n_paths", &SummaryStats::n_paths)
        .def_readonly("ew_total", &SummaryStats::ew_total)
        .def_readonly("ew_per_period", &SummaryStats::ew_per_period)
        .def_readonly("ew_se", &SummaryStats::ew_se)
        .def_readonly("ls", &SummaryStats::ls)
        .def_readonly("ls_se", &SummaryStats::ls_se)
        .def_readonly("es_alpha", &SummaryStats::es_alpha)
        .def_readonly("var_alpha", &SummaryStats::var_alpha)
        .def_readonly("ps", &SummaryStats::ps)
        .def_readonly("ps_se", &SummaryStats::ps_se)
        .def_readonly("mean_terminal_wealth", &SummaryStats::mean_terminal_wealth)
        .def_readonly("interior_q_fraction", &SummaryStats::interior_q_fraction)
        .def_readonly("wealth_fan", &SummaryStats::wealth_fan)
        .def_readonly("stock_fraction_fan", &SummaryStats::stock_fraction_fan)
        .def_readonly("withdrawal_fan", &SummaryStats::withdrawal_fan)
        .def("cdf", &SummaryStats::cdf);

    py::class_<SimulationOptions>(m, "SimulationOptions")
        .def(py::init<>())
        .def_readwrite("n_paths", &SimulationOptions::n_paths)
        .def_readwrite("seed", &SimulationOptions::seed)
        .def_readwrite("alpha", &SimulationOptions::alpha)
        .def_readwrite("W_target", &SimulationOptions::W_target)
        .def_readwrite("fan_paths", &SimulationOptions::fan_paths)
        .def_readwrite("threads", &SimulationOptions::threads);

    m.def(
        "summary",
        [](const std::vector<double>& terminal, const std::vector<double>& withdrawals, double alpha,
           double W_target, int M) { return summary(terminal, withdrawals, alpha, W_target, M); },
        py::arg("terminal_wealth"), py::arg("withdrawal_sums"), py::arg("alpha"), py::arg("W_target"),
        py::arg("M"));
    m.def("simulate_synthetic", &simulate_synthetic, py::arg("controls"), py::arg("market"), py::arg("scenario"),
          py::arg("options") = SimulationOptions{}, py::call_guard<py::gil_scoped_release>());

    py::class_<ReturnSeries>(m, "ReturnSeries")
        .def(py::init<>())
        .def_readwrite("dates", &ReturnSeries::dates)
        .def_readwrite("stock", &ReturnSeries::stock)
        .def_readwrite("bond", &ReturnSeries::bond)
        .def_readwrite("source", &ReturnSeries::source);
    m.def("load_return_series", &load_return_series);
    m.def("generate_synthetic_series", &generate_synthetic_series, py::arg("market"), py::arg("months"),
          py::arg("seed"));

    py::class_<BootstrapSpec>(m, "BootstrapSpec")
        .def(py::init<>())
        .def_readwrite("expected_blocksize", &BootstrapSpec::expected_blocksize)
        .def_readwrite("paired", &BootstrapSpec::paired)
        .def_readwrite("wrap", &BootstrapSpec::wrap)
        .def_readwrite("n_paths", &BootstrapSpec::n_paths)
        .def_readwrite("seed", &BootstrapSpec::seed);
    m.def("simulate_bootstrap", &simulate_bootstrap, py::arg("controls"), py::arg("series"), py::arg("spec"),
          py::arg("scenario"), py::arg("mu_c_b"), py::arg("options") = SimulationOptions{},
          py::call_guard<py::gil_scoped_release>());
}
