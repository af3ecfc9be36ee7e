#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "channelion/channeling.hpp"
#include "channelion/entanglement.hpp"
#include "channelion/percolation.hpp"
#include "channelion/pipeline.hpp"
#include "channelion/spin_dynamics.hpp"
#include "channelion/tomography.hpp"
#include "channelion/version.hpp"

namespace py = pybind11;
using namespace channelion;

namespace {

DensityMatrix as_state(const CMatrix& m) { return DensityMatrix(m); }

}  // namespace

PYBIND11_MODULE(_channelion, m) {
  m.doc() = "Channeled-ion spin entanglement simulation suite";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  // channeling
  py::class_<channeling::ChannelGeometry>(m, "ChannelGeometry")
      .def(py::init<>())
      .def_readwrite("z1", &channeling::ChannelGeometry::z1)
      .def_readwrite("z2", &channeling::ChannelGeometry::z2)
      .def_readwrite("string_period", &channeling::ChannelGeometry::string_period)
      .def_readwrite("screening_radius", &channeling::ChannelGeometry::screening_radius)
      .def_readwrite("thickness", &channeling::ChannelGeometry::thickness)
      .def_readwrite("thermal_amplitude", &channeling::ChannelGeometry::thermal_amplitude);

  m.def("critical_angle", &channeling::critical_angle, py::arg("energy"),
        py::arg("geometry") = channeling::ChannelGeometry{});
  m.def("moliere_string_potential", &channeling::moliere_string_potential, py::arg("r"),
        py::arg("geometry") = channeling::ChannelGeometry{});
  m.def(
      "axis_oscillation_frequency",
      [](double energy, const channeling::ChannelGeometry& g) {
        return channeling::axis_oscillation_frequency(energy, channeling::ChannelField(g));
      },
      py::arg("energy"), py::arg("geometry") = channeling::ChannelGeometry{});
  m.def(
      "channeled_fraction",
      [](double tilt, double divergence, std::size_t n, std::uint64_t seed, bool frozen,
         const channeling::ChannelGeometry& g) {
        channeling::BeamConfig b;
        b.tilt = tilt;
        b.divergence = divergence;
        b.n_particles = n;
        b.seed = seed;
        b.thermal = frozen ? channeling::ThermalMode::kFrozenStrings : channeling::ThermalMode::kStatic;
        py::gil_scoped_release release;
        return channeling::simulate_beam(b, channeling::ChannelField(g)).summary.channeled_fraction;
      },
      py::arg("tilt"), py::arg("divergence") = 0.0, py::arg("n_particles") = 1000,
      py::arg("seed") = 1, py::arg("frozen_strings") = true,
      py::arg("geometry") = channeling::ChannelGeometry{});

  // spins
  m.def(
      "spin_hamiltonian",
      [](double b0) { return spin::build_hamiltonian(spin::SpinSystem::from_field(b0)); },
      py::arg("b0"));
  m.def(
      "evolve",
      [](const CMatrix& rho, const CMatrix& h, double t) {
        return spin::evolve(as_state(rho), h, t).matrix();
      },
      py::arg("rho"), py::arg("hamiltonian"), py::arg("t"));
  m.def(
      "partial_trace",
      [](const CMatrix& rho, std::vector<int> keep) { return partial_trace(rho, keep); },
      py::arg("rho"), py::arg("keep"));

  // entanglement
  m.def(
      "werner_state",
      [](double p, double phi, int sign) {
        return entangle::werner_state({p, phi, sign}).matrix();
      },
      py::arg("p"), py::arg("phi") = 0.0, py::arg("sign") = 1);
  m.def(
      "concurrence", [](const CMatrix& rho) { return entangle::concurrence(as_state(rho)); },
      py::arg("rho"));
  m.def("entanglement_of_formation", &entangle::entanglement_of_formation, py::arg("c"));
  m.def("coherent_concurrence", &entangle::coherent_concurrence, py::arg("psi1"), py::arg("psi2"));

  // tomography
  m.def(
      "simulate_counts",
      [](const CMatrix& rho, double n, std::uint64_t seed) {
        return tomo::simulate_counts(as_state(rho), n, seed).counts;
      },
      py::arg("rho"), py::arg("n_scale"), py::arg("seed"));
  m.def("projector_labels", [] { return tomo::ProjectorSet::standard().labels(); });
  m.def(
      "mle_reconstruct",
      [](std::vector<std::uint64_t> counts) {
        tomo::TomographyRecord rec;
        rec.counts = std::move(counts);
        return tomo::mle_reconstruct(rec).rho.matrix();
      },
      py::arg("counts"));
  m.def(
      "fidelity",
      [](const CMatrix& a, const CMatrix& b) {
        return tomo::uhlmann_fidelity(as_state(a), as_state(b));
      },
      py::arg("rho"), py::arg("sigma"));
  m.def(
      "mc_fidelity",
      [](double p, double n, std::size_t iterations, std::uint64_t seed) {
        tomo::McOptions opt;
        opt.iterations = iterations;
        py::gil_scoped_release release;
        const auto st = tomo::mc_fidelity(entangle::werner_state({p, 0.0, 1}),
                                          entangle::bell_state(entangle::Bell::kPsiPlus), n, seed, opt);
        return std::make_pair(st.mean, st.std_dev);
      },
      py::arg("p"), py::arg("n_scale"), py::arg("iterations"), py::arg("seed") = 1);

  // percolation
  m.def("singlet_conversion_probability", &percolation::singlet_conversion_probability, py::arg("p"));
  m.def(
      "q_swap", [](double a, double b) { return percolation::q_swap(a, b); }, py::arg("a"),
      py::arg("b"));
  m.def(
      "spanning_frequency",
      [](const std::string& lattice, std::size_t side, double q, std::size_t trials, std::uint64_t seed) {
        const auto net = percolation::EntanglementNetwork::lattice(percolation::parse_lattice(lattice), side, 1.0);
        py::gil_scoped_release release;
        return percolation::percolate_uniform(net, q, trials, seed).spanning_frequency;
      },
      py::arg("lattice"), py::arg("side"), py::arg("q"), py::arg("trials"), py::arg("seed") = 1);
  m.def(
      "repeater_time",
      [](double l, double l0, double l_att, std::optional<double> eps, double eta) {
        const auto t = percolation::repeater_time({l, l0, l_att, eps, eta});
        return py::dict(py::arg("success_probability") = t.success_probability,
                        py::arg("t_cc") = t.t_cc, py::arg("t_segment") = t.t_segment,
                        py::arg("t_total") = t.t_total);
      },
      py::arg("total_length"), py::arg("segment_length"), py::arg("attenuation_length"),
      py::arg("epsilon") = py::none(), py::arg("eta") = 1.0);

  // pipeline
  m.def(
      "map_tilt_to_p",
      [](double tilt, double fraction, std::optional<pipeline::Calibration> cal) {
        return pipeline::map_tilt_to_p(tilt, cal.value_or(pipeline::default_calibration()), fraction);
      },
      py::arg("tilt"), py::arg("channeled_fraction"), py::arg("calibration") = py::none());
}
