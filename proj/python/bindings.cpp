// Python bindings: vibronic._core

#include "vibronic/errors.hpp"
#include "vibronic/experiments.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

namespace py = pybind11;
using namespace vibronic;

namespace {

HalfInt to_half(double m) {
  const double twice = 2.0 * m;
  if (std::abs(twice - std::round(twice)) > 1e-12) throw ConfigError("spin projection must be a half-integer");
  return HalfInt::from_twice(static_cast<int>(std::lround(twice)));
}

Subsystem to_subsystem(const std::string& name) {
  if (name == "spin") return Subsystem::spin;
  if (name == "field") return Subsystem::field;
  throw ConfigError("subsystem must be 'spin' or 'field', got '" + name + "'");
}

// Density matrix or ket on the full spin x field space of (n_spins, fock_cutoff).
DensityOp as_density(const Mat& state, int n_spins, int fock_cutoff) {
  const BasisSpec b = build_basis(n_spins, fock_cutoff);
  if (state.cols() == 1) return DensityOp::projector(PureState(b.bipartition(), state.col(0)));
  return {b.bipartition(), state};
}

Eigen::MatrixXd record_matrix(const std::vector<ProbabilityRecord>& records) {
  if (records.empty()) return {};
  Eigen::MatrixXd out(records.size(), records.front().probabilities.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t k = 0; k < records[i].probabilities.size(); ++k) out(i, k) = records[i].probabilities[k];
  return out;
}

py::dict run_to_dict(const PulseRun& run) {
  py::dict d;
  d["velocity"] = run.velocity;
  d["times"] = run.times;
  d["lambdas"] = run.lambdas;
  d["probabilities"] = record_matrix(run.probabilities);
  std::vector<double> m;
  for (HalfInt h : run.probabilities.front().projections) m.push_back(h.value());
  d["projections"] = m;
  d["entropy"] = run.entropy;
  d["field_occupation"] = run.field_occupation;
  d["norm"] = run.norm;
  if (!run.entanglement.empty()) {
    std::vector<double> n, ln;
    for (const auto& e : run.entanglement) n.push_back(e.negativity), ln.push_back(e.log_negativity);
    d["negativity"] = n;
    d["log_negativity"] = ln;
  }
  if (run.initial_field) d["initial_field"] = run.initial_field->matrix();
  if (run.final_field) d["final_field"] = run.final_field->matrix();
  d["steps_accepted"] = run.stats.accepted;
  d["steps_rejected"] = run.stats.rejected;
  return d;
}

PulseSetup make_setup(int n_spins, double lambda_max, double omega, double epsilon, int fock_cutoff,
                      const std::string& initial, double kappa, double nbar, int samples, bool track_negativity) {
  PulseSetup s;
  s.model = {omega, epsilon, n_spins, lambda_max};
  s.fock_cutoff = fock_cutoff;
  s.initial = InitialStateSpec::named(initial);
  s.lindblad = {kappa, nbar};
  s.samples = samples;
  s.track_negativity = track_negativity;
  s.model.validate();
  s.initial.validate(build_basis(n_spins, fock_cutoff));
  return s;
}

EntropyCurve to_curve(const std::vector<double>& v, const std::vector<double>& s) {
  if (v.size() != s.size()) throw ConfigError("velocity and entropy arrays differ in length");
  EntropyCurve c;
  for (std::size_t i = 0; i < v.size(); ++i) c.emplace_back(v[i], s[i]);
  return c;
}

WindowThreshold to_threshold(double value, const std::string& mode) {
  if (mode == "relative") return {WindowThreshold::Mode::relative, value};
  if (mode == "absolute") return {WindowThreshold::Mode::absolute, value};
  throw ConfigError("threshold mode must be 'relative' or 'absolute'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the vibronic package";
  m.attr("__version__") = code_version();

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IntegratorError>(m, "IntegratorError", PyExc_RuntimeError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<BasisSpec>(m, "BasisSpec")
      .def_readonly("n_spins", &BasisSpec::n_spins)
      .def_readonly("fock_cutoff", &BasisSpec::fock_cutoff)
      .def_property_readonly("j", [](const BasisSpec& b) { return b.j.value(); })
      .def_property_readonly("dim", &BasisSpec::dim)
      .def_property_readonly("spin_dim", &BasisSpec::spin_dim)
      .def_property_readonly("fock_dim", &BasisSpec::fock_dim)
      .def("index", [](const BasisSpec& b, double m, int n) { return b.index(to_half(m), n); }, py::arg("m"),
           py::arg("n"))
      .def("label",
           [](const BasisSpec& b, int i) {
             auto [mm, n] = b.label(i);
             return py::make_tuple(mm.value(), n);
           })
      .def("basis_state", [](const BasisSpec& b, double m, int n) { return Vec(basis_state(b, to_half(m), n).amplitudes()); },
           py::arg("m"), py::arg("n"))
      .def("__repr__", [](const BasisSpec& b) {
        return "BasisSpec(n_spins=" + std::to_string(b.n_spins) + ", fock_cutoff=" + std::to_string(b.fock_cutoff) +
               ", dim=" + std::to_string(b.dim()) + ")";
      });

  m.def("build_basis", &build_basis, py::arg("n_spins"), py::arg("fock_cutoff"));

  m.def(
      "op_matrix",
      [](const std::string& kind, int n_spins, int fock_cutoff) {
        return op_matrix(parse_op_kind(kind), build_basis(n_spins, fock_cutoff)).dense();
      },
      py::arg("kind"), py::arg("n_spins"), py::arg("fock_cutoff"), "Dense matrix of a basis operator.");

  m.def(
      "hamiltonian",
      [](double lam, int n_spins, int fock_cutoff, double omega, double epsilon) {
        return assemble_hamiltonian({omega, epsilon, n_spins, 1.0}, build_basis(n_spins, fock_cutoff))
            .at_lambda(lam)
            .dense();
      },
      py::arg("lam"), py::arg("n_spins"), py::arg("fock_cutoff"), py::arg("omega") = 1.0, py::arg("epsilon") = 1.0,
      "Dense H at coupling lam.");

  m.def(
      "lambda_at", [](double t, double velocity, double lambda_max) { return lambda_at(t, {velocity, lambda_max}); },
      py::arg("t"), py::arg("velocity"), py::arg("lambda_max") = 1.0);

  m.def(
      "critical_coupling", [](double omega, double epsilon) { return critical_coupling({omega, epsilon, 1, 1.0}); },
      py::arg("omega") = 1.0, py::arg("epsilon") = 1.0);

  m.def(
      "simulate_pulse",
      [](int n_spins, double velocity, double lambda_max, double omega, double epsilon, int fock_cutoff,
         const std::string& initial, double kappa, double nbar, int samples, bool track_negativity) {
        const auto setup = make_setup(n_spins, lambda_max, omega, epsilon, fock_cutoff, initial, kappa, nbar, samples,
                                      track_negativity);
        PulseRun run;
        {
          py::gil_scoped_release release;
          run = simulate_pulse(setup, velocity);
        }
        return run_to_dict(run);
      },
      py::arg("n_spins"), py::arg("velocity"), py::arg("lambda_max") = 1.0, py::arg("omega") = 1.0,
      py::arg("epsilon") = 1.0, py::arg("fock_cutoff") = 40, py::arg("initial") = "GS", py::arg("kappa") = 0.0,
      py::arg("nbar") = 0.0, py::arg("samples") = 200, py::arg("track_negativity") = false,
      "One up-down pulse; returns a dict of trajectories.");

  m.def(
      "simulate_sweep",
      [](int n_spins, const std::vector<double>& velocities, double lambda_max, double omega, double epsilon,
         int fock_cutoff, const std::string& initial, double kappa, double nbar, int samples, int workers) {
        const auto setup =
            make_setup(n_spins, lambda_max, omega, epsilon, fock_cutoff, initial, kappa, nbar, samples, false);
        std::vector<PulseRun> runs;
        {
          py::gil_scoped_release release;
          runs = simulate_sweep(setup, velocities, workers);
        }
        py::list out;
        for (const auto& r : runs) out.append(run_to_dict(r));
        return out;
      },
      py::arg("n_spins"), py::arg("velocities"), py::arg("lambda_max") = 1.0, py::arg("omega") = 1.0,
      py::arg("epsilon") = 1.0, py::arg("fock_cutoff") = 40, py::arg("initial") = "GS", py::arg("kappa") = 0.0,
      py::arg("nbar") = 0.0, py::arg("samples") = 200, py::arg("workers") = 1);

  m.def(
      "partial_trace",
      [](const Mat& state, int n_spins, int fock_cutoff, const std::string& keep) {
        return Mat(partial_trace(as_density(state, n_spins, fock_cutoff), to_subsystem(keep)).matrix());
      },
      py::arg("state"), py::arg("n_spins"), py::arg("fock_cutoff"), py::arg("keep"),
      "Reduced density matrix; state is a ket (column) or a density matrix.");

  m.def(
      "von_neumann_entropy",
      [](const Mat& state, int n_spins, int fock_cutoff, const std::string& cut) {
        return von_neumann_entropy(as_density(state, n_spins, fock_cutoff), to_subsystem(cut));
      },
      py::arg("state"), py::arg("n_spins"), py::arg("fock_cutoff"), py::arg("cut") = "spin", "Entropy in bits.");

  m.def(
      "negativity",
      [](const Mat& state, int n_spins, int fock_cutoff, const std::string& over) {
        return negativity(as_density(state, n_spins, fock_cutoff), to_subsystem(over));
      },
      py::arg("state"), py::arg("n_spins"), py::arg("fock_cutoff"), py::arg("transpose_over") = "spin");

  m.def(
      "log_negativity",
      [](const Mat& state, int n_spins, int fock_cutoff, const std::string& over) {
        return log_negativity(as_density(state, n_spins, fock_cutoff), to_subsystem(over));
      },
      py::arg("state"), py::arg("n_spins"), py::arg("fock_cutoff"), py::arg("transpose_over") = "spin");

  m.def(
      "wigner",
      [](const Mat& rho_field, double extent, int points) {
        const auto w = wigner(DensityOp({1, static_cast<int>(rho_field.rows())}, rho_field),
                              GridSpec::square(extent, points));
        for (const auto& msg : w.warnings) PyErr_WarnEx(PyExc_RuntimeWarning, msg.c_str(), 1);
        return py::make_tuple(w.x_axis, w.p_axis, w.values);
      },
      py::arg("rho_field"), py::arg("extent") = 4.5, py::arg("points") = 81,
      "Returns (x, p, W) with x = Re(alpha), p = Im(alpha) and W[ix, ip].");

  m.def(
      "lzs_transition_prob", [](double delta, double v) { return lzs_transition_prob({delta, v}); }, py::arg("delta"),
      py::arg("velocity"));
  m.def(
      "lzs_excited_prob", [](double delta, double v) { return lzs_excited_prob({delta, v}); }, py::arg("delta"),
      py::arg("velocity"));
  m.def("lzs_peak_velocity", &lzs_peak_velocity, py::arg("delta"));

  m.def(
      "estimate_vmin",
      [](const std::vector<double>& v, const std::vector<double>& s, double threshold, const std::string& mode) {
        return estimate_vmin(to_curve(v, s), to_threshold(threshold, mode));
      },
      py::arg("velocities"), py::arg("entropy"), py::arg("threshold") = 0.5, py::arg("mode") = "relative",
      "None when the window is not found.");
  m.def(
      "estimate_vmax",
      [](const std::vector<double>& v, const std::vector<double>& s, double threshold, const std::string& mode) {
        return estimate_vmax(to_curve(v, s), to_threshold(threshold, mode));
      },
      py::arg("velocities"), py::arg("entropy"), py::arg("threshold") = 0.5, py::arg("mode") = "relative");

  m.def(
      "smeared_moments",
      [](int k, int l, cplx alpha_c, const std::string& smearing, int phases, double theta,
         const std::vector<double>& times, std::array<int, 3> cutoffs, double g, double chi, int workers) {
        ThreeModeParams p;
        p.cutoffs = cutoffs;
        p.g = g;
        p.chi = chi;
        PumpPreparation prep = smearing == "uniform" ? PumpPreparation::uniform(alpha_c, phases)
                               : smearing == "delta" ? PumpPreparation::delta(alpha_c, theta)
                               : smearing == "none"  ? PumpPreparation::coherent(alpha_c)
                                                     : throw ConfigError("smearing must be uniform, delta or none");
        std::vector<SmearedMoment> out;
        {
          py::gil_scoped_release release;
          out = smeared_moments(k, l, prep, times, p, {1e-11, 1e-13, 0.5}, workers);
        }
        py::list rows;
        for (const auto& s : out)
          rows.append(py::dict(py::arg("time") = s.time, py::arg("k") = s.k, py::arg("l") = s.l,
                               py::arg("direct") = s.direct, py::arg("factored") = s.factored,
                               py::arg("difference") = s.difference));
        return rows;
      },
      py::arg("k"), py::arg("l"), py::arg("alpha_c") = cplx(2.0), py::arg("smearing") = "uniform",
      py::arg("phases") = 32, py::arg("theta") = 0.0, py::arg("times") = std::vector<double>{10.0},
      py::arg("cutoffs") = std::array<int, 3>{6, 6, 12}, py::arg("g") = 0.05, py::arg("chi") = 0.0,
      py::arg("workers") = 1);

  m.def(
      "run_experiment",
      [](const std::string& kind, const std::map<std::string, std::string>& settings, const std::string& config_path) {
        KeyValueConfig keys = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path);
        for (const auto& [k, v] : settings) keys.set(k, v, "python");
        const auto config = ExperimentConfig::from_keys(parse_experiment_kind(kind), keys);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(config);
        }
        py::list files;
        for (const auto& f : r.files)
          files.append(py::dict(py::arg("name") = f.name, py::arg("sha256") = f.sha256, py::arg("bytes") = f.bytes));
        return py::dict(py::arg("output_dir") = r.output_dir.string(), py::arg("files") = files,
                        py::arg("audit") = r.audit.status, py::arg("audit_max_delta") = r.audit.max_delta,
                        py::arg("warnings") = r.warnings, py::arg("manifest") = r.manifest);
      },
      py::arg("kind"), py::arg("settings") = std::map<std::string, std::string>{}, py::arg("config_path") = "",
      "Runs a configured experiment and writes its CSV and manifest.json.");
}
