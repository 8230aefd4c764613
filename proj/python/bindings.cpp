// Python bindings for the simulation core. Arrays come back as numpy.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fbcool/analysis.hpp"
#include "fbcool/controller.hpp"
#include "fbcool/ensemble.hpp"
#include "fbcool/validation.hpp"

namespace py = pybind11;
using namespace fbcool;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

// Samples as a (time, channel) array.
py::array_t<double> samples_array(const TrajectoryRecord& r) {
    py::array_t<double> a({static_cast<py::ssize_t>(r.samples.size()), static_cast<py::ssize_t>(kChannelCount)});
    auto m = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < r.samples.size(); ++i)
        for (int c = 0; c < kChannelCount; ++c) m(i, c) = r.samples[i][c];
    return a;
}

RunConfig config_from(const py::dict& overrides) {
    RunConfig cfg;
    for (const auto& [k, v] : overrides) cfg.set(py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
    cfg.validate();
    return cfg;
}

py::dict trajectory_dict(const TrajectoryRecord& r) {
    py::dict d;
    d["index"] = r.index;
    d["x0"] = r.x0;
    d["p0"] = r.p0;
    d["time"] = to_array(r.time);
    d["samples"] = samples_array(r);
    d["steps"] = r.steps;
    d["clamp_count"] = r.clampCount;
    d["failed"] = r.failed;
    d["failure"] = r.failure;
    return d;
}

py::dict stats_dict(const EnsembleStats& s) {
    py::dict mean, se, fw;
    for (int c = 0; c < kChannelCount; ++c) {
        const std::string name(channel_name(static_cast<Channel>(c)));
        mean[name.c_str()] = to_array(s.channels[c].mean);
        se[name.c_str()] = to_array(s.channels[c].se);
        fw[name.c_str()] = py::make_tuple(s.finalWindow[c].mean, s.finalWindow[c].se);
    }
    py::dict d;
    d["time"] = to_array(s.time);
    d["mean"] = mean;
    d["se"] = se;
    d["final_window"] = fw;
    d["parity_abs_mean"] = to_array(s.parityAbsMean);
    d["amplitude_high_fraction"] = to_array(s.amplitudeHighFraction);
    d["trajectories"] = s.trajectories;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Feedback cooling of an atom in an optical lattice";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

    py::enum_<SignalSource>(m, "SignalSource")
        .value("Estimator", SignalSource::Estimator)
        .value("Photocurrent", SignalSource::Photocurrent)
        .value("TrueState", SignalSource::TrueState)
        .value("None_", SignalSource::None);

    py::class_<PhysicalParams>(m, "PhysicalParams")
        .def(py::init<>())
        .def_readwrite("atom_mass", &PhysicalParams::atomMass)
        .def_readwrite("optical_wavenumber", &PhysicalParams::opticalWavenumber)
        .def_readwrite("coupling_g", &PhysicalParams::couplingG)
        .def_readwrite("cavity_decay_kappa", &PhysicalParams::cavityDecayKappa)
        .def_readwrite("detuning_delta", &PhysicalParams::detuningDelta)
        .def_readwrite("mean_photon_alpha", &PhysicalParams::meanPhotonAlpha)
        .def_readwrite("detection_eta", &PhysicalParams::detectionEta)
        .def("validate", &PhysicalParams::validate);

    py::class_<ScaledParams>(m, "ScaledParams")
        .def(py::init<double, double, double, double>(), py::arg("gamma"), py::arg("ktilde"), py::arg("eta") = 1.0,
             py::arg("omega_ho") = 0.0)
        .def_property_readonly("gamma", &ScaledParams::gamma)
        .def_property_readonly("ktilde", &ScaledParams::ktilde)
        .def_property_readonly("vmax", &ScaledParams::vmax)
        .def_property_readonly("eta", &ScaledParams::eta)
        .def_property_readonly("omega_ho", &ScaledParams::omegaHO);

    m.def("derive_scaled", &derive_scaled, py::arg("physical") = PhysicalParams{});

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def("set", [](RunConfig& c, const std::string& k, const std::string& v) { c.set(k, v); })
        .def("to_map", &RunConfig::to_map)
        .def("to_text", &RunConfig::to_text)
        .def("hash", &RunConfig::hash)
        .def("scaled", &RunConfig::scaled)
        .def("validate", &RunConfig::validate);

    py::class_<TheoryInputs>(m, "TheoryInputs")
        .def_readonly("epsilon", &TheoryInputs::epsilon)
        .def_readonly("E0", &TheoryInputs::E0)
        .def_readonly("E1", &TheoryInputs::E1)
        .def_property_readonly("beta", &TheoryInputs::beta);
    m.def("harmonic_theory_inputs", &harmonic_theory_inputs, py::arg("epsilon"), py::arg("params"));
    m.def(
        "theory_energy",
        [](double eps, const ScaledParams& p, const std::string& variant) {
            const auto v = variant == "centroid"    ? TheoryVariant::Centroid
                           : variant == "squeezing" ? TheoryVariant::Squeezing
                                                    : throw ConfigError("variant must be centroid or squeezing");
            return theory_ss_energy(harmonic_theory_inputs(eps, p), v);
        },
        py::arg("epsilon"), py::arg("params"), py::arg("variant") = "centroid",
        "Steady-state energy above -V_max, or None when beta >= 1.");

    m.def(
        "band_energies",
        [](const ScaledParams& p, int grid_points) {
            const BandBasis b(SpatialGrid::for_lattice(grid_points, 1, p.ktilde()), p);
            std::vector<double> e(b.band_count());
            for (int n = 0; n < b.band_count(); ++n) e[n] = b.band_energy(n);
            return to_array(e);
        },
        py::arg("params"), py::arg("grid_points") = 512);

    m.def(
        "fit_quadratic",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> values, double dt, double t_now) {
            const QuadraticFit f = fit_quadratic({values.data(), static_cast<std::size_t>(values.size())}, dt, t_now);
            return py::make_tuple(f.a, f.b, f.c, f.slopeAtNow);
        },
        py::arg("values"), py::arg("dt"), py::arg("t_now"), "Returns (a, b, c, slope at t_now).");

    std::vector<std::string> channels;
    for (int c = 0; c < kChannelCount; ++c) channels.emplace_back(channel_name(static_cast<Channel>(c)));
    m.attr("CHANNELS") = channels;

    m.def(
        "run_trajectory",
        [](const py::dict& overrides, std::uint64_t index) {
            const EnsembleContext ctx(config_from(overrides));
            TrajectoryRecord r;
            {
                py::gil_scoped_release nogil;
                r = run_trajectory(ctx, index);
            }
            return trajectory_dict(r);
        },
        py::arg("config") = py::dict(), py::arg("index") = 0,
        "One trajectory. `config` maps dotted keys to values; `samples` columns follow CHANNELS.");

    m.def(
        "run_ensemble",
        [](const py::dict& overrides, int threads) {
            const RunConfig cfg = config_from(overrides);
            EnsembleResult r;
            {
                py::gil_scoped_release nogil;
                r = run_ensemble(cfg, threads);
            }
            py::dict d = stats_dict(r.stats);
            d["failed"] = r.failed;
            d["valid"] = r.valid;
            d["wall_seconds"] = r.wallSeconds;
            return d;
        },
        py::arg("config") = py::dict(), py::arg("threads") = 1);

    m.def(
        "run_invariant_suite",
        [](const py::dict& overrides) {
            const RunConfig cfg = config_from(overrides);
            std::vector<Check> checks;
            {
                py::gil_scoped_release nogil;
                checks = run_invariant_suite(cfg);
            }
            py::list out;
            for (const Check& c : checks) out.append(py::make_tuple(c.name, c.pass, c.detail));
            return out;
        },
        py::arg("config") = py::dict(), "List of (name, passed, detail).");
}
