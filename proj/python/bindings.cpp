#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "hilbert/characteristics.hpp"
#include "hilbert/collision.hpp"
#include "hilbert/error.hpp"
#include "hilbert/expansion.hpp"
#include "hilbert/grids.hpp"
#include "hilbert/config.hpp"
#include "hilbert/euler_poisson.hpp"
#include "hilbert/harness.hpp"
#include "hilbert/maxwellian.hpp"

namespace py = pybind11;
using namespace hilbert;

namespace {

MaxwellianParams params(double rho, std::array<double, 3> u, double theta) {
    if (!(rho > 0.0) || !(theta > 0.0)) throw py::value_error("rho and theta must be positive");
    return MaxwellianParams{rho, u, theta};
}

double standing_wave_frequency(int n_x, double length, double amplitude, int mode, double K, double rho_bar,
                               double t_final) {
    auto g = build_spatial_grid(n_x, length);
    auto s = standing_wave(g, amplitude, mode, K, rho_bar);
    std::vector<double> t{0.0}, a{cosine_mode(s.rho, g, mode)};
    while (s.time < t_final) {
        s = step_euler_poisson(s, 0.5 * cfl_limit(s, g), g);
        t.push_back(s.time);
        a.push_back(cosine_mode(s.rho, g, mode));
    }
    return zero_crossing_frequency(t, a);
}

py::dict free_streaming_window(double t, double span, int samples) {
    ConstantField zero(0.0);
    std::vector<double> taus;
    for (int i = 1; i <= samples; ++i) taus.push_back(t - span * i / samples);
    auto tr = variational_jacobian(t, PhasePoint{{0.1, 0.0, 0.0}, {0.3, -0.2, 0.1}}, zero, taus);
    auto r = jacobian_window_check(tr.jacobians, t, span);
    py::dict d;
    d["all"] = r.all();
    d["ratio_min"] = r.ratio_min;
    d["ratio_max"] = r.ratio_max;
    d["volume_defect"] = r.volume_defect;
    d["T0"] = r.T0;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hilbert expansion lab for the Vlasov-Poisson-Boltzmann system";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

    py::class_<VelocityGrid>(m, "VelocityGrid")
        .def_readonly("n_per_axis", &VelocityGrid::n_per_axis)
        .def_readonly("v_max", &VelocityGrid::v_max)
        .def_readonly("h", &VelocityGrid::h)
        .def_readonly("nodes", &VelocityGrid::nodes)
        .def_readonly("weights", &VelocityGrid::weights)
        .def("__len__", &VelocityGrid::size);

    m.def("build_velocity_grid", &build_velocity_grid, py::arg("n_per_axis"), py::arg("v_max"));
    m.def(
        "integrate_v", [](const std::vector<double>& f, const VelocityGrid& g) { return integrate_v(f, g); },
        py::arg("values"), py::arg("grid"));
    m.def(
        "local_maxwellian",
        [](const VelocityGrid& g, double rho, std::array<double, 3> u, double theta) {
            return local_maxwellian(params(rho, u, theta), g);
        },
        py::arg("grid"), py::arg("rho") = 1.0, py::arg("u") = std::array<double, 3>{0, 0, 0}, py::arg("theta") = 1.0);
    m.def(
        "moments",
        [](const std::vector<double>& F, const VelocityGrid& g) {
            auto mm = moments(F, g);
            return py::make_tuple(mm.rho, mm.momentum, mm.energy);
        },
        py::arg("F"), py::arg("grid"));
    m.def(
        "collision_frequency",
        [](std::array<double, 3> v, double rho, std::array<double, 3> u, double theta) {
            return collision_frequency(params(rho, u, theta), v);
        },
        py::arg("v"), py::arg("rho") = 1.0, py::arg("u") = std::array<double, 3>{0, 0, 0}, py::arg("theta") = 1.0);
    m.def("growth_factors", &growth_factors, py::arg("epsilon"), py::arg("t"), py::arg("k"));
    m.def("plasma_frequency", &plasma_frequency, py::arg("rho_bar"), py::arg("K_eos"), py::arg("k"));
    m.def("standing_wave_frequency", &standing_wave_frequency, py::arg("n_x"), py::arg("length"),
          py::arg("amplitude"), py::arg("mode"), py::arg("K_eos") = 1.0, py::arg("rho_bar") = 1.0,
          py::arg("t_final") = 12.0);
    m.def("free_streaming_window", &free_streaming_window, py::arg("t") = 1.0, py::arg("span") = 1.0,
          py::arg("samples") = 50);
    m.def(
        "fit_loglog",
        [](const std::vector<double>& eps, const std::vector<double>& dist) {
            if (eps.size() != dist.size()) throw py::value_error("eps and dist differ in length");
            std::vector<ConvergenceRow> rows;
            for (std::size_t i = 0; i < eps.size(); ++i) rows.push_back({eps[i], dist[i]});
            auto f = fit_loglog(rows);
            py::dict d;
            d["slope"] = f.slope;
            d["slope_ci"] = f.slope_ci;
            d["degenerate"] = f.degenerate;
            return d;
        },
        py::arg("epsilon"), py::arg("dist"));
    m.def(
        "parse_config",
        [](const std::string& text) {
            auto c = parse_config_string(text);
            py::dict d;
            d["scenario"] = to_string(c.scenario);
            d["amplitude"] = c.amplitude;
            d["n_x"] = c.n_x;
            d["n_per_axis"] = c.n_per_axis;
            d["v_max"] = c.v_max;
            d["epsilon_list"] = c.epsilon_list;
            d["t_final"] = c.t_final;
            d["backend"] = to_string(c.backend);
            d["seed"] = c.seed;
            return d;
        },
        py::arg("text"));
    m.def("version", &git_describe);
}
