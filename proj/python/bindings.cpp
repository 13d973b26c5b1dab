// Thin pybind11 layer; structured results cross as JSON text.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hjbkit/errors.hpp"
#include "hjbkit/finance.hpp"
#include "hjbkit/hamiltonian.hpp"
#include "hjbkit/model.hpp"
#include "hjbkit/pde.hpp"
#include "hjbkit/simulate.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace hjbkit;

namespace {

py::dict solution_dict(const pde::Solution& sol) {
    std::vector<double> y(sol.value.grid.nodes());
    for (std::size_t j = 0; j < y.size(); ++j) {
        y[j] = sol.value.grid.y(j);
    }
    py::dict out;
    out["y"] = y;
    out["t"] = sol.value.time_stamps;
    out["u"] = sol.value.layers;
    out["report"] = pde::to_json(sol.report).dump();
    out["control_names"] = sol.policy.control_names;
    out["controls"] = sol.policy.controls;
    return out;
}

pde::SolverOptions options_for(const std::optional<std::string>& market, std::size_t stride) {
    pde::SolverOptions opts;
    opts.retain_stride = stride;
    if (market) {
        opts.control_override =
            finance::make_control_override(finance::MarketModel::from_json(json::parse(*market)));
    }
    return opts;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "hjbkit native core";

    auto base = py::register_exception<Error>(m, "HjbkitError");
    auto param = py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<StabilityError>(m, "StabilityError", param.ptr());
    py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
    py::register_exception<ExclusionError>(m, "ExclusionError", base.ptr());
    py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());

    py::class_<ControlModel>(m, "ControlModel")
        .def_static("from_json_text",
                    [](const std::string& text) { return ControlModel::from_json(json::parse(text)); })
        .def_static("from_file", [](const std::string& path) { return ControlModel::from_file(path); })
        .def("to_json_text", [](const ControlModel& self) { return self.to_json().dump(); })
        .def_property_readonly("dim", &ControlModel::dim)
        .def_property_readonly("control_count", &ControlModel::control_count)
        .def_property_readonly("controls", &ControlModel::controls)
        .def_property_readonly("warnings", &ControlModel::warnings);

    m.def("check_assumption1",
          [](const ControlModel& model, std::vector<double> lower, std::vector<double> upper,
             std::size_t samples, std::uint64_t seed) {
              return to_json(check_assumption1(model, Box{std::move(lower), std::move(upper)},
                                               samples, seed))
                  .dump();
          });

    m.def("eval_H", [](const ControlModel& model, std::vector<double> y, double u,
                       std::vector<double> p) {
        const auto r = eval_H(model, y, u, p);
        return py::make_tuple(r.value, r.argmax_index, r.argmax, r.runner_up_gap);
    });

    m.def(
        "solve_finite_horizon",
        [](const ControlModel& model, double y_min, double y_max, std::size_t nodes, double horizon,
           std::size_t steps, const std::string& boundary, std::size_t stride,
           std::optional<std::string> market) {
            const pde::Grid1D grid(y_min, y_max, nodes, pde::boundary_from_string(boundary));
            if (steps == 0) {
                steps = static_cast<std::size_t>(
                    std::ceil(pde::min_stable_steps(model, grid, horizon) / 0.9));
            }
            return solution_dict(pde::solve_finite_horizon(model, grid, pde::TimeGrid(horizon, steps),
                                                           options_for(market, stride)));
        },
        py::arg("model"), py::arg("y_min"), py::arg("y_max"), py::arg("nodes"), py::arg("horizon"),
        py::arg("steps") = 0, py::arg("boundary") = "one_sided", py::arg("stride") = 0,
        py::arg("market") = py::none());

    m.def(
        "solve_infinite_horizon",
        [](const ControlModel& model, double y_min, double y_max, std::size_t nodes, double dt,
           double tol_dt, double t_max, const std::string& boundary,
           std::optional<std::string> market) {
            const pde::Grid1D grid(y_min, y_max, nodes, pde::boundary_from_string(boundary));
            if (!(dt > 0.0)) {
                dt = 0.9 * pde::max_stable_dt(model, grid);
            }
            return solution_dict(
                pde::solve_infinite_horizon(model, grid, dt, tol_dt, t_max, options_for(market, 0)));
        },
        py::arg("model"), py::arg("y_min"), py::arg("y_max"), py::arg("nodes"), py::arg("dt") = 0.0,
        py::arg("tol_dt") = 1e-6, py::arg("t_max") = 1000.0, py::arg("boundary") = "one_sided",
        py::arg("market") = py::none());

    m.def(
        "estimate_value",
        [](const ControlModel& model, std::vector<double> control, std::vector<double> y0,
           double horizon, std::size_t paths, double dt, std::uint64_t seed, bool antithetic) {
            mc::MonteCarloConfig cfg;
            cfg.paths = paths;
            cfg.dt = dt;
            cfg.seed = seed;
            cfg.antithetic = antithetic;
            py::gil_scoped_release release;
            auto r = mc::estimate_value(model, mc::constant_policy(std::move(control)), y0, 0.0,
                                        horizon, cfg);
            r.path_log_discount.clear();
            return to_json(r).dump();
        },
        py::arg("model"), py::arg("control"), py::arg("y0"), py::arg("horizon"),
        py::arg("paths") = 10000, py::arg("dt") = 1e-3, py::arg("seed") = 0,
        py::arg("antithetic") = false);

    m.def("reduced_model", [](const std::string& market, std::size_t n_pi, std::size_t n_c) {
        return finance::to_control_model(finance::MarketModel::from_json(json::parse(market)), n_pi,
                                         n_c);
    });
    m.def("merton_benchmark", [](const std::string& market) {
        return finance::to_json(
                   finance::merton_benchmark(finance::MarketModel::from_json(json::parse(market))))
            .dump();
    });
    m.def("wealth_value", [](double x, const std::string& market, double u) {
        return finance::wealth_value(x, finance::MarketModel::from_json(json::parse(market)), u);
    });
}
