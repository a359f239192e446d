// experiments.hpp - configured studies and their CSV/manifest outputs.
//
// The simulate_* / analyze_* functions are pure computations used by the
// CLI runners, the acceptance suite and the Python bindings. The run_*
// functions add file output and the Fock-cutoff convergence audit.

#pragma once

#include "vibronic/config.hpp"
#include "vibronic/dynamics.hpp"
#include "vibronic/measures.hpp"
#include "vibronic/model.hpp"
#include "vibronic/output.hpp"
#include "vibronic/parametric.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vibronic {

enum class ExperimentKind { ramp, sweep, entropy_map, scaling, open_sweep, wigner, lzs, parametric };

// Accepts both "entropy-map" and "entropy_map".
ExperimentKind parse_experiment_kind(std::string_view name);
std::string_view to_string(ExperimentKind kind);

// count log-spaced velocities 2^x, x from log2_start to log2_end inclusive.
struct VelocityGrid {
  double log2_start = -7.0;
  double log2_end = 1.0;
  int count = 48;

  void validate() const;
  std::vector<double> log2_values() const;
  std::vector<double> velocities() const;
};

// GS, W1, W2, ... (Dicke |J, -J + k>), X / Y for a single dimer (W1 / GS),
// custom |J, M> (x) |n>, or thermal field (x) a named spin state.
struct InitialStateSpec {
  enum class Kind { dicke, custom, thermal };
  Kind kind = Kind::dicke;
  int excitations = 0;
  HalfInt m;
  int n = 0;
  double nbar = 0.0;
  std::string name = "GS";

  static InitialStateSpec named(const std::string& name);
  static InitialStateSpec custom(HalfInt m, int n);
  static InitialStateSpec thermal(double nbar, const std::string& spin = "GS");

  bool is_pure() const { return kind != Kind::thermal; }
  void validate(const BasisSpec& basis) const;
};

PureState make_pure_initial(const InitialStateSpec& spec, const BasisSpec& basis);
DensityOp make_mixed_initial(const InitialStateSpec& spec, const BasisSpec& basis);

// Everything needed to run one pulse except the velocity.
struct PulseSetup {
  ModelParams model;
  int fock_cutoff = 40;
  InitialStateSpec initial;
  LindbladParams lindblad;
  IntegratorConfig pure_integrator = IntegratorConfig::pure_default();
  IntegratorConfig mixed_integrator = IntegratorConfig::lindblad_default();
  int samples = 200;
  bool track_negativity = false;

  // Kets are used unless there is damping or a thermal initial state.
  bool open() const { return lindblad.kappa > 0.0 || !initial.is_pure(); }
};

struct PulseRun {
  double velocity = 0.0;
  std::vector<double> times;
  std::vector<double> lambdas;
  std::vector<ProbabilityRecord> probabilities;
  std::vector<double> entropy;  // S_N of the spin factor, bits
  std::vector<double> field_occupation;
  std::vector<double> norm;  // |psi| or tr(rho)
  std::vector<EntanglementPair> entanglement;  // filled when track_negativity
  std::optional<DensityOp> initial_field;
  std::optional<DensityOp> final_field;
  StepStats stats;

  const ProbabilityRecord& final_probabilities() const { return probabilities.back(); }
  double final_entropy() const { return entropy.back(); }
  double peak_entropy() const;
  double peak_negativity() const;
};

PulseRun simulate_pulse(const PulseSetup& setup, double velocity);
// One run per velocity, index-ordered.
std::vector<PulseRun> simulate_sweep(const PulseSetup& setup, const std::vector<double>& velocities, int workers = 1);

enum class WindowCurve { final_entropy, peak_entropy };

struct ScalingRow {
  int n_spins = 0;
  std::optional<double> v_min;
  std::optional<double> v_max;
  double peak_entropy = 0.0;  // max over v and t
};

struct ScalingAnalysis {
  std::vector<ScalingRow> rows;
  std::optional<double> slope;  // log-log fit of v_min against N
  std::vector<std::string> warnings;
};

EntropyCurve entropy_curve(const std::vector<PulseRun>& runs, WindowCurve curve);
ScalingAnalysis analyze_scaling(const std::vector<std::pair<int, std::vector<PulseRun>>>& sweeps,
                                WindowThreshold threshold, WindowCurve curve);

// ---------------------------------------------------------------------------

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::ramp;
  ModelParams model;
  std::string resonance = "exact";
  double velocity = 0.15;
  VelocityGrid grid;
  int fock_cutoff = 40;
  InitialStateSpec initial;
  LindbladParams lindblad;
  std::vector<double> kappa_list{0.0, 0.005, 0.02};
  std::vector<int> n_list{3, 5, 9, 15};
  int samples = 200;
  int workers = 1;
  std::uint64_t seed = 0;
  IntegratorConfig pure_integrator = IntegratorConfig::pure_default();
  IntegratorConfig mixed_integrator = IntegratorConfig::lindblad_default();
  IntegratorConfig parametric_integrator{1e-11, 1e-13, 0.5};

  bool audit = true;
  int audit_extra = 10;
  double audit_tolerance = 1e-6;

  std::filesystem::path output_dir = "out";

  WindowThreshold window{WindowThreshold::Mode::absolute, 0.5};
  WindowCurve window_curve = WindowCurve::final_entropy;

  double wigner_extent = 4.5;
  int wigner_points = 81;
  bool wigner_post_pulse = true;

  double lzs_delta = 0.5;

  ThreeModeParams three_mode;
  cplx alpha_c = 2.0;
  std::string smearing = "uniform";
  int smearing_phases = 32;
  double smearing_theta = 0.0;
  double t_end = 10.0;
  int time_samples = 20;
  std::vector<std::pair<int, int>> moments{{1, 1}, {1, 0}};

  KeyValueConfig keys;  // raw keys as given, echoed into the manifest

  // Applies per-kind defaults, then the keys. Throws ConfigError with the
  // origin of the offending key.
  static ExperimentConfig from_keys(ExperimentKind kind, const KeyValueConfig& keys);
  static const std::set<std::string>& known_keys();
  // Every known key with its effective value.
  std::map<std::string, std::string> resolved() const;

  PulseSetup pulse_setup() const;
  PumpPreparation pump_preparation() const;
  void validate() const;
};

struct AuditReport {
  std::string status = "skipped";  // passed | failed | skipped | not_applicable
  std::string method;
  int fock_cutoff = 0;
  int extended_cutoff = 0;
  double max_delta = 0.0;
  double tolerance = 0.0;
  std::string worst;  // where max_delta occurred

  bool failed() const { return status == "failed"; }
};

struct RunResult {
  ExperimentKind kind = ExperimentKind::ramp;
  std::filesystem::path output_dir;
  std::vector<WrittenFile> files;
  AuditReport audit;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
  std::string manifest;  // JSON text written to manifest.json
};

// Runs the experiment, writes its CSV and manifest.json. A failed audit is
// reported in the result, not thrown; integrator failures throw.
RunResult run_experiment(const ExperimentConfig& config);

// CSV text of each experiment, without the audit; exposed for tests.
struct TableOutput {
  std::string file_name;
  CsvTable table;
  std::vector<std::string> warnings;
  // Probabilities to compare in the convergence audit, labelled.
  std::vector<std::pair<std::string, double>> probes;
};

TableOutput ramp_table(const ExperimentConfig& config);
TableOutput sweep_table(const ExperimentConfig& config);
TableOutput entropy_map_table(const ExperimentConfig& config);
TableOutput scaling_table(const ExperimentConfig& config);
TableOutput open_sweep_table(const ExperimentConfig& config);
TableOutput wigner_table(const ExperimentConfig& config);
TableOutput lzs_table(const ExperimentConfig& config);
TableOutput parametric_table(const ExperimentConfig& config);

std::string code_version();

}  // namespace vibronic
