#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qhhg/config.hpp"
#include "qhhg/drive.hpp"
#include "qhhg/lattice_basis.hpp"
#include "qhhg/observables.hpp"
#include "qhhg/operators.hpp"
#include "qhhg/photonics.hpp"
#include "qhhg/pipeline.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core of the quantum high-harmonic simulator";
  m.attr("__version__") = qhhg::library_version();

  py::register_exception<qhhg::ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<qhhg::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<qhhg::StageError>(m, "StageError", PyExc_RuntimeError);

  py::class_<qhhg::ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("sites", &qhhg::ModelParams::sites)
      .def_readwrite("t0", &qhhg::ModelParams::t0)
      .def_readwrite("U", &qhhg::ModelParams::U)
      .def_readwrite("a", &qhhg::ModelParams::a)
      .def("validate", &qhhg::ModelParams::validate);

  py::class_<qhhg::PulseParams>(m, "PulseParams")
      .def(py::init<>())
      .def_readwrite("A0", &qhhg::PulseParams::A0)
      .def_readwrite("omega_L", &qhhg::PulseParams::omega_L)
      .def_readwrite("n_cycles", &qhhg::PulseParams::n_cycles)
      .def_property_readonly("t_end", &qhhg::PulseParams::t_end);

  py::class_<qhhg::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("model", &qhhg::RunConfig::model)
      .def_readwrite("pulse", &qhhg::RunConfig::pulse)
      .def_readwrite("output", &qhhg::RunConfig::output)
      .def_property_readonly("path", [](const qhhg::RunConfig& c) { return qhhg::to_string(c.path); })
      .def_property_readonly("g0", [](const qhhg::RunConfig& c) { return c.modes.g0; })
      .def_property_readonly("fock_cutoff", [](const qhhg::RunConfig& c) { return c.modes.fock_cutoff; })
      .def("serialize", &qhhg::RunConfig::serialize)
      .def("__eq__", [](const qhhg::RunConfig& a, const qhhg::RunConfig& b) { return a == b; });

  m.def("parse_config_text", &qhhg::parse_config_text, py::arg("text"));

  m.def("vector_potential", &qhhg::vector_potential, py::arg("t"), py::arg("pulse"));
  m.def("time_grid", py::overload_cast<const qhhg::PulseParams&, double>(&qhhg::time_grid),
        py::arg("pulse"), py::arg("dt"));

  m.def(
      "sector_dimension",
      [](int sites, int n_up, int n_down, std::optional<int> momentum, std::optional<int> parity) {
        const qhhg::SymmetrySector s{momentum, parity};
        return s.projected() ? qhhg::SectorBasis::sector(sites, n_up, n_down, s).dimension()
                             : qhhg::SectorBasis::full(sites, n_up, n_down).dimension();
      },
      py::arg("sites"), py::arg("n_up"), py::arg("n_down"), py::arg("momentum") = py::none(),
      py::arg("parity") = py::none());

  m.def(
      "ground_state_energy",
      [](const qhhg::ModelParams& params, int n_up, int n_down) {
        const auto basis = qhhg::SectorBasis::full(params.sites, n_up, n_down);
        return qhhg::ground_state_energy(qhhg::HubbardOperators(basis, params).hamiltonian(0.0));
      },
      py::arg("params"), py::arg("n_up"), py::arg("n_down"));
  m.def("mott_gap", &qhhg::mott_gap, py::arg("params"));

  m.def(
      "coherent_statistics",
      [](std::complex<double> beta, double omega, int fock_cutoff) {
        qhhg::ModeConfig mode{omega, 4e-8, fock_cutoff};
        const auto state = qhhg::coherent_state(mode, beta);
        const auto moments = qhhg::photon_moments(state);
        py::dict d;
        d["n"] = moments.n;
        d["n2"] = moments.n2;
        d["Q"] = qhhg::mandel_q(moments);
        d["eta_dB"] = qhhg::squeezing_db(moments);
        return d;
      },
      py::arg("beta"), py::arg("omega") = 1.0, py::arg("fock_cutoff") = 100);

  m.def(
      "semiclassical_spectrum",
      [](const std::vector<double>& times, const std::vector<double>& current,
         const std::vector<double>& omegas) {
        std::vector<double> out;
        out.reserve(omegas.size());
        for (double w : omegas) out.push_back(qhhg::semiclassical_spectrum_value(times, current, w));
        return out;
      },
      py::arg("times"), py::arg("current"), py::arg("omegas"));

  m.def(
      "run_pipeline",
      [](const std::string& config_text, const std::filesystem::path& output_dir,
         std::optional<int> workers) {
        qhhg::PipelineOptions options;
        options.output_dir = output_dir;
        options.workers = workers;
        qhhg::RunManifest manifest;
        {
          py::gil_scoped_release release;
          manifest = qhhg::run_pipeline(qhhg::parse_config_text(config_text), options);
        }
        return manifest.directory / "manifest.json";
      },
      py::arg("config_text"), py::arg("output_dir"), py::arg("workers") = py::none());

  m.def(
      "export_figures_data",
      [](const std::filesystem::path& manifest) { return qhhg::export_figures_data(manifest); },
      py::arg("manifest"));
}
