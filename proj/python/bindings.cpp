#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "gpassivity/config.hpp"
#include "gpassivity/passivity.hpp"
#include "gpassivity/scenarios.hpp"

namespace py = pybind11;
using namespace gpassivity;

namespace {

HermitianOperator as_operator(const Mat& m, std::vector<int> dims) {
    if (dims.empty()) dims = {static_cast<int>(m.rows())};
    return HermitianOperator(m, std::move(dims));
}

DensityMatrix as_state(const Mat& m, std::vector<int> dims) {
    if (dims.empty()) dims = {static_cast<int>(m.rows())};
    return DensityMatrix(m, std::move(dims));
}

}  // namespace

PYBIND11_MODULE(_gpassivity, m) {
    m.doc() = "global-passivity thermodynamic inequality toolkit";

    py::register_exception<Error>(m, "GpassivityError");

    m.def(
        "gibbs_state",
        [](const Mat& h, double beta) { return gibbs_state(as_operator(h, {}), beta).matrix(); },
        py::arg("hamiltonian"), py::arg("beta"));

    m.def(
        "b_operator", [](const Mat& rho) { return b_operator(as_state(rho, {})).matrix(); },
        py::arg("rho"), "-ln(rho) for a full-rank state");

    m.def(
        "von_neumann_entropy",
        [](const Mat& rho) { return von_neumann_entropy(as_state(rho, {})); }, py::arg("rho"));

    m.def(
        "relative_entropy",
        [](const Mat& rho2, const Mat& rho1) {
            return relative_entropy(as_state(rho2, {}), as_state(rho1, {}));
        },
        py::arg("rho2"), py::arg("rho1"));

    m.def(
        "partial_trace",
        [](const Mat& m_, const std::vector<int>& keep, const std::vector<int>& dims) {
            return partial_trace(as_operator(m_, dims), keep).matrix();
        },
        py::arg("matrix"), py::arg("keep"), py::arg("dims"));

    m.def(
        "alpha_power",
        [](const Mat& b, double alpha, std::optional<double> shift) {
            return alpha_power(as_operator(b, {}), alpha, shift).matrix();
        },
        py::arg("b"), py::arg("alpha"), py::arg("shift") = std::nullopt);

    m.def(
        "is_passive",
        [](const Mat& a, const Mat& rho, double tol) {
            auto res = is_passive(as_operator(a, {}), as_state(rho, {}), tol);
            return py::make_tuple(res.passive, res.witness);
        },
        py::arg("a"), py::arg("rho"), py::arg("tol") = 1e-9);

    m.def(
        "passive_floor",
        [](const Mat& rho, const Mat& a) {
            auto res = passive_floor(as_state(rho, {}), as_operator(a, {}));
            return py::make_tuple(res.state.matrix(), res.floor);
        },
        py::arg("rho"), py::arg("a"));

    m.def(
        "ergotropy",
        [](const Mat& rho, const Mat& a) { return ergotropy(as_state(rho, {}), as_operator(a, {})); },
        py::arg("rho"), py::arg("a"));

    m.def(
        "shifted_reference_bound",
        [](const Mat& rho0, const Mat& a) {
            return shifted_reference_bound(as_state(rho0, {}), as_operator(a, {}));
        },
        py::arg("rho0"), py::arg("a"));

    m.def(
        "unitary_from_hamiltonian",
        [](const Mat& h, double t) { return unitary_from_hamiltonian(as_operator(h, {}), t); },
        py::arg("hamiltonian"), py::arg("t"));

    m.def(
        "apply_unitary_mixture",
        [](const Mat& rho, const std::vector<std::pair<double, Mat>>& branches,
           const std::vector<int>& dims) {
            return apply_unitary_mixture(as_state(rho, dims), branches).matrix();
        },
        py::arg("rho"), py::arg("branches"), py::arg("dims") = std::vector<int>{});

    m.def(
        "lindblad_evolve",
        [](const Mat& rho, const Mat& h, const std::vector<std::pair<Mat, double>>& jumps,
           double t_final, double dt, std::vector<double> samples, const std::vector<int>& dims) {
            std::vector<JumpOperator> ops;
            for (const auto& [op, rate] : jumps) ops.push_back({op, rate});
            auto traj = lindblad_evolve(as_state(rho, dims), as_operator(h, dims), ops, t_final,
                                        dt, std::move(samples));
            std::vector<Mat> states;
            for (const auto& s : traj.states) states.push_back(s.matrix());
            return py::make_tuple(traj.times, states);
        },
        py::arg("rho"), py::arg("hamiltonian"), py::arg("jumps"), py::arg("t_final"),
        py::arg("dt"), py::arg("samples") = std::vector<double>{},
        py::arg("dims") = std::vector<int>{});

    m.def(
        "pi_pulse",
        [](const Mat& rho, const std::vector<int>& dims, int site, const std::string& axis) {
            Axis ax = axis == "x" ? Axis::X : axis == "y" ? Axis::Y : Axis::Z;
            return pi_pulse(as_state(rho, dims), site, ax).matrix();
        },
        py::arg("rho"), py::arg("dims"), py::arg("site"), py::arg("axis") = "z");

    // Scenario + sweep access via the same validated config layer as the CLI;
    // parameters travel as JSON text so defaults stay in one place.
    m.def(
        "run_scenario_json",
        [](const std::string& scenario, const std::string& parameters_json) {
            nlohmann::json doc = {{"scenario", scenario},
                                  {"parameters", nlohmann::json::parse(parameters_json)}};
            auto outcome = run_scenario(parse_config(doc));
            nlohmann::json result = {{"exit_code", outcome.exit_code},
                                     {"summary", outcome.summary},
                                     {"report", outcome.report}};
            return result.dump();
        },
        py::arg("scenario"), py::arg("parameters_json") = "{}");

    m.def(
        "scenario_csv",
        [](const std::string& scenario, const std::string& parameters_json) {
            nlohmann::json doc = {{"scenario", scenario},
                                  {"parameters", nlohmann::json::parse(parameters_json)}};
            return run_scenario(parse_config(doc)).csv;
        },
        py::arg("scenario"), py::arg("parameters_json") = "{}");
}
