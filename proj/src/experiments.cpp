#include "vibronic/experiments.hpp"

#include "vibronic/errors.hpp"
#include "vibronic/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <type_traits>

#ifndef VIBRONIC_VERSION
#define VIBRONIC_VERSION "unknown"
#endif

namespace vibronic {

std::string code_version() { return VIBRONIC_VERSION; }

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::ramp, "ramp"},
    {ExperimentKind::sweep, "sweep"},
    {ExperimentKind::entropy_map, "entropy-map"},
    {ExperimentKind::scaling, "scaling"},
    {ExperimentKind::open_sweep, "open-sweep"},
    {ExperimentKind::wigner, "wigner"},
    {ExperimentKind::lzs, "lzs"},
    {ExperimentKind::parametric, "parametric"},
};

}  // namespace

ExperimentKind parse_experiment_kind(std::string_view name) {
  std::string dashed(name);
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  for (const auto& [kind, text] : kKindNames)
    if (dashed == text) return kind;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, text] : kKindNames)
    if (k == kind) return text;
  return "?";
}

// ---------------------------------------------------------------------------

void VelocityGrid::validate() const {
  if (count < 1) throw ConfigError("v_count must be >= 1");
  if (!std::isfinite(log2_start) || !std::isfinite(log2_end)) throw ConfigError("v-grid bounds must be finite");
  if (count > 1 && !(log2_end > log2_start)) throw ConfigError("v-grid must be increasing (v_log2_end > v_log2_start)");
}

std::vector<double> VelocityGrid::log2_values() const {
  validate();
  if (count == 1) return {log2_start};
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) out[k] = log2_start + (log2_end - log2_start) * k / (count - 1);
  out.back() = log2_end;
  return out;
}

std::vector<double> VelocityGrid::velocities() const {
  auto out = log2_values();
  for (double& x : out) x = std::exp2(x);
  return out;
}

// ---------------------------------------------------------------------------

InitialStateSpec InitialStateSpec::named(const std::string& name) {
  InitialStateSpec spec;
  spec.name = name;
  if (name == "GS" || name == "Y") {
    spec.excitations = 0;
  } else if (name == "X") {
    spec.excitations = 1;
  } else if (name.size() > 1 && name[0] == 'W' &&
             std::all_of(name.begin() + 1, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    spec.excitations = std::stoi(name.substr(1));
    if (spec.excitations < 1) throw ConfigError("initial state '" + name + "': W states start at W1");
  } else {
    throw ConfigError("unknown initial state '" + name + "' (expected GS, W1, W2, ..., X, Y, custom or thermal)");
  }
  return spec;
}

InitialStateSpec InitialStateSpec::custom(HalfInt m, int n) {
  InitialStateSpec spec;
  spec.kind = Kind::custom;
  spec.m = m;
  spec.n = n;
  spec.name = "custom";
  return spec;
}

InitialStateSpec InitialStateSpec::thermal(double nbar, const std::string& spin) {
  InitialStateSpec spec = named(spin);
  spec.kind = Kind::thermal;
  spec.nbar = nbar;
  spec.name = "thermal(" + spin + ")";
  return spec;
}

void InitialStateSpec::validate(const BasisSpec& basis) const {
  switch (kind) {
    case Kind::custom:
      if (!basis.contains(m))
        throw ConfigError("initial M = " + m.str() + " outside [-J, J] for N = " + std::to_string(basis.n_spins));
      if (n < 0 || n > basis.fock_cutoff)
        throw ConfigError("initial n = " + std::to_string(n) + " outside [0, " + std::to_string(basis.fock_cutoff) + "]");
      return;
    case Kind::thermal:
      if (!(nbar >= 0.0)) throw ConfigError("thermal initial state needs nbar >= 0");
      [[fallthrough]];
    case Kind::dicke:
      if ((name == "X" || name == "Y" || name == "thermal(X)" || name == "thermal(Y)") && basis.n_spins != 1)
        throw ConfigError("initial states X and Y are defined for a single dimer (N = 1)");
      if (excitations > basis.n_spins)
        throw ConfigError("initial state W" + std::to_string(excitations) + " needs N >= " +
                          std::to_string(excitations) + ", have N = " + std::to_string(basis.n_spins));
      return;
  }
}

PureState make_pure_initial(const InitialStateSpec& spec, const BasisSpec& basis) {
  spec.validate(basis);
  switch (spec.kind) {
    case InitialStateSpec::Kind::custom:
      return basis_state(basis, spec.m, spec.n);
    case InitialStateSpec::Kind::dicke:
      return basis_state(basis, HalfInt::from_twice(2 * spec.excitations - basis.j.twice()), 0);
    case InitialStateSpec::Kind::thermal:
      break;
  }
  throw ConfigError("a thermal initial state has no ket; use a density-operator run");
}

DensityOp make_mixed_initial(const InitialStateSpec& spec, const BasisSpec& basis) {
  if (spec.is_pure()) return DensityOp::projector(make_pure_initial(spec, basis));
  spec.validate(basis);
  Vec spin = Vec::Zero(basis.spin_dim());
  spin(spec.excitations) = 1.0;
  return thermal_initial(basis, spec.nbar, PureState({basis.spin_dim(), 1}, spin));
}

// ---------------------------------------------------------------------------

double PulseRun::peak_entropy() const { return *std::max_element(entropy.begin(), entropy.end()); }

double PulseRun::peak_negativity() const {
  if (entanglement.empty()) throw std::logic_error("negativity was not tracked for this run");
  double best = 0.0;
  for (const auto& e : entanglement) best = std::max(best, e.negativity);
  return best;
}

PulseRun simulate_pulse(const PulseSetup& setup, double velocity) {
  setup.model.validate();
  const PulseProtocol protocol{velocity, setup.model.lambda_max};
  protocol.validate();
  const BasisSpec basis = build_basis(setup.model.n_spins, setup.fock_cutoff);
  setup.initial.validate(basis);
  // A zero-amplitude pulse has zero duration: the only sample is t = 0.
  const std::vector<double> samples =
      protocol.duration() > 0.0 ? uniform_samples(protocol, setup.samples) : std::vector<double>{0.0};

  PulseRun run;
  run.velocity = velocity;
  auto fill_observables = [&run](const auto& traj) {
    run.times = traj.times;
    for (const auto& obs : traj.observables) {
      run.lambdas.push_back(obs.lambda);
      run.field_occupation.push_back(obs.field_occupation);
      run.norm.push_back(obs.norm);
    }
    run.stats = traj.stats;
  };

  if (!setup.open()) {
    const PureState psi0 = make_pure_initial(setup.initial, basis);
    const auto traj = evolve_pure(psi0, setup.model, protocol, setup.pure_integrator, samples);
    fill_observables(traj);
    for (const auto& psi : traj.states) {
      run.probabilities.push_back(state_probabilities(psi));
      run.entropy.push_back(von_neumann_entropy(psi, Subsystem::spin));
      if (setup.track_negativity) run.entanglement.push_back(negativities(DensityOp::projector(psi)));
    }
    run.initial_field = partial_trace(traj.states.front(), Subsystem::field);
    run.final_field = partial_trace(traj.states.back(), Subsystem::field);
  } else {
    const DensityOp rho0 = make_mixed_initial(setup.initial, basis);
    const double last = samples.back();
    auto sink = [&](double t, const DensityOp& rho) {
      run.probabilities.push_back(state_probabilities(rho));
      run.entropy.push_back(von_neumann_entropy(rho, Subsystem::spin));
      if (setup.track_negativity) run.entanglement.push_back(negativities(rho));
      if (!run.initial_field) run.initial_field = partial_trace(rho, Subsystem::field);
      if (t == last) run.final_field = partial_trace(rho, Subsystem::field);
    };
    const auto traj = evolve_lindblad(rho0, setup.model, protocol, setup.lindblad, setup.mixed_integrator, samples,
                                      true, sink);
    fill_observables(traj);
  }
  return run;
}

std::vector<PulseRun> simulate_sweep(const PulseSetup& setup, const std::vector<double>& velocities, int workers) {
  for (std::size_t i = 0; i < velocities.size(); ++i)
    if (!(velocities[i] > 0.0) || (i > 0 && !(velocities[i] > velocities[i - 1])))
      throw ConfigError("velocities must be positive and strictly increasing");
  return parallel_map(velocities.size(), workers, [&](std::size_t i) { return simulate_pulse(setup, velocities[i]); });
}

EntropyCurve entropy_curve(const std::vector<PulseRun>& runs, WindowCurve curve) {
  EntropyCurve out;
  out.reserve(runs.size());
  for (const auto& r : runs)
    out.emplace_back(r.velocity, curve == WindowCurve::final_entropy ? r.final_entropy() : r.peak_entropy());
  return out;
}

ScalingAnalysis analyze_scaling(const std::vector<std::pair<int, std::vector<PulseRun>>>& sweeps,
                                WindowThreshold threshold, WindowCurve curve) {
  ScalingAnalysis out;
  std::vector<double> ns, vmins;
  for (const auto& [n, runs] : sweeps) {
    if (runs.empty()) throw ConfigError("empty sweep for N = " + std::to_string(n));
    ScalingRow row;
    row.n_spins = n;
    const auto c = entropy_curve(runs, curve);
    row.v_min = estimate_vmin(c, threshold);
    row.v_max = estimate_vmax(c, threshold);
    for (const auto& r : runs) row.peak_entropy = std::max(row.peak_entropy, r.peak_entropy());
    if (row.v_min) {
      ns.push_back(n);
      vmins.push_back(*row.v_min);
    } else {
      out.warnings.push_back("N = " + std::to_string(n) + ": coherence window not found, excluded from the fit");
    }
    out.rows.push_back(row);
  }
  if (ns.size() >= 2) {
    out.slope = loglog_slope(ns, vmins);
  } else {
    out.warnings.push_back("fewer than two N values with a coherence window; no slope fitted");
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::set<std::string>& ExperimentConfig::known_keys() {
  static const std::set<std::string> keys = {
      "n_spins", "omega", "epsilon", "resonance", "lambda_max", "velocity", "v_log2_start", "v_log2_end",
      "v_count", "fock_cutoff", "initial", "initial_m", "initial_n", "initial_nbar", "thermal_spin", "kappa",
      "nbar", "kappa_list", "n_list", "samples", "workers", "seed", "rel_tol", "abs_tol", "max_step", "scheme",
      "oracle_step", "audit", "audit_extra", "audit_tolerance", "output_dir", "window_threshold", "window_mode",
      "window_curve", "wigner_extent", "wigner_points", "wigner_snapshot", "lzs_delta", "omega_a", "omega_b",
      "omega_c", "chi", "g", "cutoff_a", "cutoff_b", "cutoff_c", "dim_cap", "alpha_c", "alpha_c_phase", "smearing",
      "smearing_phases", "smearing_theta", "t_end", "time_samples", "moments"};
  return keys;
}

namespace {

std::vector<std::pair<int, int>> parse_moments(const KeyValueConfig& keys, const std::vector<std::pair<int, int>>& fallback) {
  if (!keys.has("moments")) return fallback;
  std::vector<std::pair<int, int>> out;
  std::istringstream in(keys.get_string("moments", ""));
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
               item.end());
    if (item.empty()) continue;
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(item);
      std::size_t used_k = 0, used_l = 0;
      const std::string ks = item.substr(0, colon), ls = item.substr(colon + 1);
      const int k = std::stoi(ks, &used_k);
      const int l = std::stoi(ls, &used_l);
      if (used_k != ks.size() || used_l != ls.size()) throw std::invalid_argument(item);
      out.emplace_back(k, l);
    } catch (const std::exception&) {
      keys.fail("moments", "expected a list of k:l pairs, got '" + item + "'");
    }
  }
  if (out.empty()) keys.fail("moments", "empty list");
  return out;
}

void apply_integrator_keys(const KeyValueConfig& keys, IntegratorConfig& integ) {
  integ.rel_tol = keys.get_double("rel_tol", integ.rel_tol);
  integ.abs_tol = keys.get_double("abs_tol", integ.abs_tol);
  integ.max_step = keys.get_double("max_step", integ.max_step);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_keys(ExperimentKind kind, const KeyValueConfig& keys) {
  keys.reject_unknown(known_keys());
  ExperimentConfig c;
  c.kind = kind;
  c.keys = keys;

  switch (kind) {
    case ExperimentKind::scaling:
      c.grid = {-8.0, 3.0, 45};
      c.n_list = {3, 5, 9, 15};
      break;
    case ExperimentKind::open_sweep:
      c.n_list = {5, 11};
      break;
    default:
      break;
  }

  c.model.n_spins = keys.get_int("n_spins", 3);
  c.model.omega = keys.get_double("omega", 1.0);
  c.resonance = keys.get_string("resonance", "exact");
  if (c.resonance == "exact") {
    c.model.epsilon = keys.get_double("epsilon", c.model.omega);
  } else if (c.resonance == "lhcii") {
    if (keys.has("epsilon")) keys.fail("epsilon", "conflicts with resonance = lhcii, which fixes epsilon / omega");
    c.model.epsilon = c.model.omega * kLhciiEpsilonRatio;
  } else {
    keys.fail("resonance", "expected exact or lhcii, got '" + c.resonance + "'");
  }
  c.model.lambda_max = keys.get_double("lambda_max", 1.0);
  c.velocity = keys.get_double("velocity", c.velocity);
  c.grid.log2_start = keys.get_double("v_log2_start", c.grid.log2_start);
  c.grid.log2_end = keys.get_double("v_log2_end", c.grid.log2_end);
  c.grid.count = keys.get_int("v_count", c.grid.count);
  c.fock_cutoff = keys.get_int("fock_cutoff", c.fock_cutoff);

  c.lindblad.kappa = keys.get_double("kappa", 0.0);
  c.lindblad.nbar = keys.get_double("nbar", 0.0);
  c.kappa_list = keys.get_double_list("kappa_list", c.kappa_list);
  c.n_list = keys.get_int_list("n_list", c.n_list);

  const std::string initial = keys.get_string("initial", "GS");
  try {
    if (initial == "custom") {
      if (!keys.has("initial_m")) keys.fail("initial", "custom initial state needs initial_m");
      c.initial = InitialStateSpec::custom(HalfInt::parse(keys.get_string("initial_m", "")), keys.get_int("initial_n", 0));
    } else if (initial == "thermal") {
      c.initial = InitialStateSpec::thermal(keys.get_double("initial_nbar", c.lindblad.nbar),
                                            keys.get_string("thermal_spin", "GS"));
    } else {
      c.initial = InitialStateSpec::named(initial);
    }
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.find(": key '") != std::string::npos) throw;
    keys.fail("initial", what);
  }

  c.samples = keys.get_int("samples", c.samples);
  c.workers = keys.get_int("workers", c.workers);
  const int seed = keys.get_int("seed", 0);
  if (seed < 0) keys.fail("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);

  apply_integrator_keys(keys, c.pure_integrator);
  apply_integrator_keys(keys, c.mixed_integrator);
  apply_integrator_keys(keys, c.parametric_integrator);
  const std::string scheme = keys.get_string("scheme", "adaptive");
  if (scheme == "expm_oracle") {
    c.pure_integrator.scheme = Scheme::fixed_step_expm_oracle;
  } else if (scheme != "adaptive") {
    keys.fail("scheme", "expected adaptive or expm_oracle");
  }
  c.pure_integrator.oracle_step = keys.get_double("oracle_step", c.pure_integrator.oracle_step);

  c.audit = keys.get_bool("audit", c.audit);
  c.audit_extra = keys.get_int("audit_extra", c.audit_extra);
  c.audit_tolerance = keys.get_double("audit_tolerance", c.audit_tolerance);
  c.output_dir = keys.get_string("output_dir", c.output_dir.string());

  c.window.value = keys.get_double("window_threshold", c.window.value);
  const std::string mode = keys.get_string("window_mode", "absolute");
  if (mode == "absolute") {
    c.window.mode = WindowThreshold::Mode::absolute;
  } else if (mode == "relative") {
    c.window.mode = WindowThreshold::Mode::relative;
  } else {
    keys.fail("window_mode", "expected absolute or relative");
  }
  const std::string curve = keys.get_string("window_curve", "final");
  if (curve == "final") {
    c.window_curve = WindowCurve::final_entropy;
  } else if (curve == "peak") {
    c.window_curve = WindowCurve::peak_entropy;
  } else {
    keys.fail("window_curve", "expected final or peak");
  }

  c.wigner_extent = keys.get_double("wigner_extent", c.wigner_extent);
  c.wigner_points = keys.get_int("wigner_points", c.wigner_points);
  const std::string snapshot = keys.get_string("wigner_snapshot", "end");
  if (snapshot == "end") {
    c.wigner_post_pulse = true;
  } else if (snapshot == "start") {
    c.wigner_post_pulse = false;
  } else {
    keys.fail("wigner_snapshot", "expected start or end");
  }
  c.lzs_delta = keys.get_double("lzs_delta", c.lzs_delta);

  c.three_mode.omega_a = keys.get_double("omega_a", c.three_mode.omega_a);
  c.three_mode.omega_b = keys.get_double("omega_b", c.three_mode.omega_b);
  c.three_mode.omega_c = keys.get_double("omega_c", c.three_mode.omega_c);
  c.three_mode.chi = keys.get_double("chi", c.three_mode.chi);
  c.three_mode.g = keys.get_double("g", c.three_mode.g);
  c.three_mode.cutoffs[0] = keys.get_int("cutoff_a", c.three_mode.cutoffs[0]);
  c.three_mode.cutoffs[1] = keys.get_int("cutoff_b", c.three_mode.cutoffs[1]);
  c.three_mode.cutoffs[2] = keys.get_int("cutoff_c", c.three_mode.cutoffs[2]);
  c.three_mode.dim_cap = keys.get_int("dim_cap", static_cast<int>(c.three_mode.dim_cap));
  c.alpha_c = std::polar(keys.get_double("alpha_c", 2.0), keys.get_double("alpha_c_phase", 0.0));
  c.smearing = keys.get_string("smearing", c.smearing);
  c.smearing_phases = keys.get_int("smearing_phases", c.smearing_phases);
  c.smearing_theta = keys.get_double("smearing_theta", c.smearing_theta);
  c.t_end = keys.get_double("t_end", c.t_end);
  c.time_samples = keys.get_int("time_samples", c.time_samples);
  c.moments = parse_moments(keys, c.moments);

  // Re-raise validation errors against the key that caused them when possible.
  auto guard = [&keys](const std::string& key, auto&& check) {
    try {
      check();
    } catch (const ConfigError& e) {
      keys.fail(key, e.what());
    }
  };
  guard("n_spins", [&] { c.model.validate(); });
  guard("velocity", [&] { PulseProtocol{c.velocity, c.model.lambda_max}.validate(); });
  guard("v_count", [&] { c.grid.validate(); });
  guard("kappa", [&] { c.lindblad.validate(); });
  guard("rel_tol", [&] {
    c.pure_integrator.validate();
    c.mixed_integrator.validate();
    c.parametric_integrator.validate();
  });
  guard("initial", [&] {
    const bool multi = kind == ExperimentKind::scaling || kind == ExperimentKind::open_sweep;
    const auto ns = multi ? c.n_list : std::vector<int>{c.model.n_spins};
    for (int n : ns) c.initial.validate(build_basis(n, std::max(c.fock_cutoff, 0)));
  });
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  auto fail = [this](const std::string& key, const std::string& msg) { keys.fail(key, msg); };
  if (fock_cutoff < 1) fail("fock_cutoff", "must be >= 1");
  if (samples < 2) fail("samples", "must be >= 2");
  if (workers < 1) fail("workers", "must be >= 1");
  if (audit_extra < 1) fail("audit_extra", "must be >= 1");
  if (!(audit_tolerance > 0.0)) fail("audit_tolerance", "must be > 0");
  for (double k : kappa_list)
    if (!(k >= 0.0)) fail("kappa_list", "entries must be >= 0");
  for (int n : n_list)
    if (n < 1) fail("n_list", "entries must be >= 1");
  if (kind == ExperimentKind::scaling && n_list.size() < 2) fail("n_list", "scaling needs at least two N values");
  if (!(window.value > 0.0)) fail("window_threshold", "must be > 0");
  if (window.mode == WindowThreshold::Mode::relative && !(window.value < 1.0))
    fail("window_threshold", "a relative threshold must lie in (0, 1)");
  if (!(wigner_extent > 0.0)) fail("wigner_extent", "must be > 0");
  if (wigner_points < 2) fail("wigner_points", "must be >= 2");
  if (!(lzs_delta > 0.0)) fail("lzs_delta", "must be > 0");
  if (!(t_end > 0.0)) fail("t_end", "must be > 0");
  if (time_samples < 1) fail("time_samples", "must be >= 1");
  if (smearing != "uniform" && smearing != "none" && smearing != "delta")
    fail("smearing", "expected uniform, none or delta");
  if (smearing_phases < 1) fail("smearing_phases", "must be >= 1");
  for (const auto& [k, l] : moments)
    if (k < 0 || l < 0 || k + l > 4) fail("moments", "need k, l >= 0 and k + l <= 4");
  if (kind == ExperimentKind::parametric) {
    try {
      three_mode.validate();
    } catch (const ConfigError& e) {
      fail("cutoff_c", e.what());
    }
  }
}

std::map<std::string, std::string> ExperimentConfig::resolved() const {
  auto num = [](double v) { return format_number(v); };
  auto list = [](const auto& values) {
    std::string out;
    for (const auto& v : values) {
      if (!out.empty()) out += ", ";
      if constexpr (std::is_same_v<std::decay_t<decltype(v)>, double>) {
        out += format_number(v);
      } else {
        out += std::to_string(v);
      }
    }
    return out;
  };
  std::string moment_list;
  for (const auto& [k, l] : moments) {
    if (!moment_list.empty()) moment_list += ", ";
    moment_list += std::to_string(k) + ":" + std::to_string(l);
  }
  std::map<std::string, std::string> r = {
      {"n_spins", std::to_string(model.n_spins)},
      {"omega", num(model.omega)},
      {"epsilon", num(model.epsilon)},
      {"resonance", resonance},
      {"lambda_max", num(model.lambda_max)},
      {"velocity", num(velocity)},
      {"v_log2_start", num(grid.log2_start)},
      {"v_log2_end", num(grid.log2_end)},
      {"v_count", std::to_string(grid.count)},
      {"fock_cutoff", std::to_string(fock_cutoff)},
      {"initial", keys.get_string("initial", "GS")},
      {"initial_m", initial.kind == InitialStateSpec::Kind::custom ? initial.m.str() : ""},
      {"initial_n", std::to_string(initial.n)},
      {"initial_nbar", num(initial.nbar)},
      {"thermal_spin", keys.get_string("thermal_spin", "GS")},
      {"kappa", num(lindblad.kappa)},
      {"nbar", num(lindblad.nbar)},
      {"kappa_list", list(kappa_list)},
      {"n_list", list(n_list)},
      {"samples", std::to_string(samples)},
      {"workers", std::to_string(workers)},
      {"seed", std::to_string(seed)},
      {"rel_tol", keys.get_string("rel_tol", "default")},
      {"abs_tol", keys.get_string("abs_tol", "default")},
      {"max_step", keys.get_string("max_step", "default")},
      {"scheme", pure_integrator.scheme == Scheme::adaptive_rk ? "adaptive" : "expm_oracle"},
      {"oracle_step", num(pure_integrator.oracle_step)},
      {"audit", audit ? "true" : "false"},
      {"audit_extra", std::to_string(audit_extra)},
      {"audit_tolerance", num(audit_tolerance)},
      {"output_dir", output_dir.string()},
      {"window_threshold", num(window.value)},
      {"window_mode", window.mode == WindowThreshold::Mode::absolute ? "absolute" : "relative"},
      {"window_curve", window_curve == WindowCurve::final_entropy ? "final" : "peak"},
      {"wigner_extent", num(wigner_extent)},
      {"wigner_points", std::to_string(wigner_points)},
      {"wigner_snapshot", wigner_post_pulse ? "end" : "start"},
      {"lzs_delta", num(lzs_delta)},
      {"omega_a", num(three_mode.omega_a)},
      {"omega_b", num(three_mode.omega_b)},
      {"omega_c", num(three_mode.omega_c)},
      {"chi", num(three_mode.chi)},
      {"g", num(three_mode.g)},
      {"cutoff_a", std::to_string(three_mode.cutoffs[0])},
      {"cutoff_b", std::to_string(three_mode.cutoffs[1])},
      {"cutoff_c", std::to_string(three_mode.cutoffs[2])},
      {"dim_cap", std::to_string(three_mode.dim_cap)},
      {"alpha_c", num(std::abs(alpha_c))},
      {"alpha_c_phase", num(std::arg(alpha_c))},
      {"smearing", smearing},
      {"smearing_phases", std::to_string(smearing_phases)},
      {"smearing_theta", num(smearing_theta)},
      {"t_end", num(t_end)},
      {"time_samples", std::to_string(time_samples)},
      {"moments", moment_list},
  };
  return r;
}

PulseSetup ExperimentConfig::pulse_setup() const {
  PulseSetup s;
  s.model = model;
  s.fock_cutoff = fock_cutoff;
  s.initial = initial;
  s.lindblad = lindblad;
  s.pure_integrator = pure_integrator;
  s.mixed_integrator = mixed_integrator;
  s.samples = samples;
  return s;
}

PumpPreparation ExperimentConfig::pump_preparation() const {
  if (smearing == "uniform") return PumpPreparation::uniform(alpha_c, smearing_phases);
  if (smearing == "delta") return PumpPreparation::delta(alpha_c, smearing_theta);
  return PumpPreparation::coherent(alpha_c);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> probability_columns(const BasisSpec& basis) {
  std::vector<std::string> cols;
  for (HalfInt m : basis.projections()) cols.push_back("P(M=" + m.str() + ")");
  return cols;
}

void add_probes(TableOutput& out, const std::string& where, const ProbabilityRecord& p) {
  for (std::size_t k = 0; k < p.projections.size(); ++k)
    out.probes.emplace_back(where + " P(M=" + p.projections[k].str() + ")", p.probabilities[k]);
}

std::vector<double> log2_column(const ExperimentConfig& config) { return config.grid.log2_values(); }

}  // namespace

TableOutput ramp_table(const ExperimentConfig& config) {
  const auto setup = config.pulse_setup();
  const PulseRun run = simulate_pulse(setup, config.velocity);
  const BasisSpec basis = build_basis(config.model.n_spins, config.fock_cutoff);

  std::vector<std::string> header{"t", "lambda"};
  for (auto& c : probability_columns(basis)) header.push_back(c);
  for (const char* c : {"S_N", "n_field", "norm"}) header.emplace_back(c);
  TableOutput out{"trajectory.csv", CsvTable(header), {}, {}};
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    std::vector<double> row{run.times[i], run.lambdas[i]};
    for (double p : run.probabilities[i].probabilities) row.push_back(p);
    row.push_back(run.entropy[i]);
    row.push_back(run.field_occupation[i]);
    row.push_back(run.norm[i]);
    out.table.row(row);
    add_probes(out, "t=" + format_number(run.times[i]), run.probabilities[i]);
  }
  return out;
}

TableOutput sweep_table(const ExperimentConfig& config) {
  const auto runs = simulate_sweep(config.pulse_setup(), config.grid.velocities(), config.workers);
  const auto log2v = log2_column(config);
  const BasisSpec basis = build_basis(config.model.n_spins, config.fock_cutoff);

  std::vector<std::string> header{"log2_v"};
  for (auto& c : probability_columns(basis)) header.push_back(c);
  header.emplace_back("S_final");
  header.emplace_back("S_peak");
  TableOutput out{"final_states.csv", CsvTable(header), {}, {}};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<double> row{log2v[i]};
    for (double p : runs[i].final_probabilities().probabilities) row.push_back(p);
    row.push_back(runs[i].final_entropy());
    row.push_back(runs[i].peak_entropy());
    out.table.row(row);
    add_probes(out, "log2_v=" + format_number(log2v[i]), runs[i].final_probabilities());
  }
  return out;
}

TableOutput entropy_map_table(const ExperimentConfig& config) {
  const auto runs = simulate_sweep(config.pulse_setup(), config.grid.velocities(), config.workers);
  const auto log2v = log2_column(config);
  TableOutput out{"entropy_map.csv", CsvTable({"log2_v", "t", "S_N"}), {}, {}};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t k = 0; k < runs[i].times.size(); ++k)
      out.table.row({log2v[i], runs[i].times[k], runs[i].entropy[k]});
    add_probes(out, "log2_v=" + format_number(log2v[i]), runs[i].final_probabilities());
  }
  return out;
}

TableOutput scaling_table(const ExperimentConfig& config) {
  const auto velocities = config.grid.velocities();
  const auto log2v = log2_column(config);
  const std::size_t nv = velocities.size();
  // Flattened (N, v) tasks keep every worker busy across system sizes.
  auto flat = parallel_map(config.n_list.size() * nv, config.workers, [&](std::size_t task) {
    PulseSetup setup = config.pulse_setup();
    setup.model.n_spins = config.n_list[task / nv];
    return simulate_pulse(setup, velocities[task % nv]);
  });
  std::vector<std::pair<int, std::vector<PulseRun>>> sweeps;
  TableOutput out{"vmin_vs_n.csv", CsvTable({"N", "v_min", "slope", "v_max", "peak_entropy", "status"}), {}, {}};
  for (std::size_t i = 0; i < config.n_list.size(); ++i) {
    std::vector<PulseRun> runs(std::make_move_iterator(flat.begin() + i * nv),
                               std::make_move_iterator(flat.begin() + (i + 1) * nv));
    for (std::size_t k = 0; k < nv; ++k)
      add_probes(out, "N=" + std::to_string(config.n_list[i]) + " log2_v=" + format_number(log2v[k]),
                 runs[k].final_probabilities());
    sweeps.emplace_back(config.n_list[i], std::move(runs));
  }
  const auto analysis = analyze_scaling(sweeps, config.window, config.window_curve);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : analysis.rows) {
    out.table.text_row({std::to_string(row.n_spins), format_number(row.v_min.value_or(nan)),
                        format_number(analysis.slope.value_or(nan)), format_number(row.v_max.value_or(nan)),
                        format_number(row.peak_entropy), row.v_min ? "ok" : "window_not_found"});
  }
  out.warnings = analysis.warnings;
  return out;
}

TableOutput open_sweep_table(const ExperimentConfig& config) {
  const std::size_t nk = config.kappa_list.size();
  auto runs = parallel_map(config.n_list.size() * nk, config.workers, [&](std::size_t task) {
    PulseSetup setup = config.pulse_setup();
    setup.model.n_spins = config.n_list[task / nk];
    setup.lindblad.kappa = config.kappa_list[task % nk];
    setup.track_negativity = true;
    return simulate_pulse(setup, config.velocity);
  });
  TableOutput out{"negativity_vs_t.csv", CsvTable({"t", "kappa", "N", "negativity", "log_negativity"}), {}, {}};
  for (std::size_t task = 0; task < runs.size(); ++task) {
    const auto& run = runs[task];
    const double n = config.n_list[task / nk];
    const double kappa = config.kappa_list[task % nk];
    for (std::size_t i = 0; i < run.times.size(); ++i)
      out.table.row({run.times[i], kappa, n, run.entanglement[i].negativity, run.entanglement[i].log_negativity});
  }
  return out;
}

TableOutput wigner_table(const ExperimentConfig& config) {
  const PulseRun run = simulate_pulse(config.pulse_setup(), config.velocity);
  const DensityOp& field = config.wigner_post_pulse ? *run.final_field : *run.initial_field;
  const WignerGrid w = wigner(field, GridSpec::square(config.wigner_extent, config.wigner_points));
  TableOutput out{"wigner_grid.csv", CsvTable({"x", "p", "W"}), w.warnings, {}};
  for (std::size_t ix = 0; ix < w.x_axis.size(); ++ix)
    for (std::size_t ip = 0; ip < w.p_axis.size(); ++ip)
      out.table.row({w.x_axis[ix], w.p_axis[ip], w.values(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(ip))});
  add_probes(out, config.wigner_post_pulse ? "t=end" : "t=0",
             config.wigner_post_pulse ? run.final_probabilities() : run.probabilities.front());
  return out;
}

TableOutput lzs_table(const ExperimentConfig& config) {
  TableOutput out{"lzs_curve.csv", CsvTable({"log2_v", "P", "P_e"}), {}, {}};
  for (double x : log2_column(config)) {
    const LzsParams lzs{config.lzs_delta, std::exp2(x)};
    out.table.row({x, lzs_transition_prob(lzs), lzs_excited_prob(lzs)});
  }
  return out;
}

TableOutput parametric_table(const ExperimentConfig& config) {
  const auto prep = config.pump_preparation();
  std::vector<double> times(config.time_samples);
  for (int i = 0; i < config.time_samples; ++i) times[i] = config.t_end * (i + 1.0) / config.time_samples;
  TableOutput out{"smearing_check.csv",
                  CsvTable({"t", "k", "l", "direct_re", "direct_im", "factored_re", "factored_im", "abs_difference"}),
                  {},
                  {}};
  for (const auto& [k, l] : config.moments) {
    const auto moments =
        smeared_moments(k, l, prep, times, config.three_mode, config.parametric_integrator, config.workers);
    for (const auto& m : moments)
      out.table.row({m.time, static_cast<double>(m.k), static_cast<double>(m.l), m.direct.real(), m.direct.imag(),
                     m.factored.real(), m.factored.imag(), m.difference});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

TableOutput table_for(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::ramp: return ramp_table(config);
    case ExperimentKind::sweep: return sweep_table(config);
    case ExperimentKind::entropy_map: return entropy_map_table(config);
    case ExperimentKind::scaling: return scaling_table(config);
    case ExperimentKind::open_sweep: return open_sweep_table(config);
    case ExperimentKind::wigner: return wigner_table(config);
    case ExperimentKind::lzs: return lzs_table(config);
    case ExperimentKind::parametric: return parametric_table(config);
  }
  throw std::logic_error("unhandled experiment kind");
}

// Closed-system populations at every sample, one trajectory per N; stands
// in for the damped runs, whose extended-cutoff rerun is too costly.
std::vector<std::pair<std::string, double>> closed_proxy_probes(const ExperimentConfig& config) {
  auto runs = parallel_map(config.n_list.size(), config.workers, [&](std::size_t i) {
    PulseSetup setup = config.pulse_setup();
    setup.model.n_spins = config.n_list[i];
    setup.lindblad.kappa = 0.0;
    return simulate_pulse(setup, config.velocity);
  });
  TableOutput probes{"", CsvTable({}), {}, {}};
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t k = 0; k < runs[i].times.size(); ++k)
      add_probes(probes, "N=" + std::to_string(config.n_list[i]) + " t=" + format_number(runs[i].times[k]),
                 runs[i].probabilities[k]);
  return probes.probes;
}

AuditReport convergence_audit(const ExperimentConfig& config, const TableOutput& base) {
  AuditReport report;
  report.fock_cutoff = config.fock_cutoff;
  report.extended_cutoff = config.fock_cutoff + config.audit_extra;
  report.tolerance = config.audit_tolerance;
  if (config.kind == ExperimentKind::lzs || config.kind == ExperimentKind::parametric) {
    report.status = "not_applicable";
    report.method = config.kind == ExperimentKind::lzs ? "closed-form curve, no Fock space"
                                                       : "three-mode model; cutoffs are explicit configuration";
    return report;
  }
  if (!config.audit) {
    report.status = "skipped";
    report.method = "disabled by configuration";
    return report;
  }
  ExperimentConfig extended = config;
  extended.fock_cutoff = report.extended_cutoff;

  std::vector<std::pair<std::string, double>> lo, hi;
  if (config.kind == ExperimentKind::open_sweep) {
    if (!config.initial.is_pure()) {
      report.status = "not_applicable";
      report.method = "closed-system proxy needs a pure initial state";
      return report;
    }
    report.method = "closed-system proxy: kappa = 0 populations at every sample";
    lo = closed_proxy_probes(config);
    hi = closed_proxy_probes(extended);
  } else {
    report.method = "rerun at extended cutoff; all reported state populations";
    lo = base.probes;
    hi = table_for(extended).probes;
  }
  if (lo.size() != hi.size()) throw std::logic_error("audit probe sets differ in size");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const double d = std::abs(lo[i].second - hi[i].second);
    if (i == 0 || d > report.max_delta) {
      report.max_delta = d;
      report.worst = lo[i].first;
    }
  }
  report.status = report.max_delta > report.tolerance ? "failed" : "passed";
  return report;
}

nlohmann::json integrator_json(const IntegratorConfig& integ) {
  return {{"rel_tol", integ.rel_tol},
          {"abs_tol", integ.abs_tol},
          {"max_step", integ.max_step},
          {"scheme", integ.scheme == Scheme::adaptive_rk ? "adaptive_rk" : "expm_midpoint"},
          {"pair", integ.pair == RkPair::dop853 ? "dop853" : "dopri5"},
          {"oracle_step", integ.oracle_step}};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  RunResult result;
  result.kind = config.kind;
  result.output_dir = config.output_dir;

  TableOutput table = table_for(config);
  result.warnings = table.warnings;
  result.audit = convergence_audit(config, table);
  result.files.push_back(write_file(config.output_dir, table.file_name, table.table.str()));
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  using nlohmann::json;
  json keys = json::object();
  for (const auto& [k, e] : config.keys.entries()) keys[k] = {{"value", e.value}, {"origin", e.origin}};
  json basis = json::array();
  if (config.kind != ExperimentKind::lzs && config.kind != ExperimentKind::parametric) {
    const bool multi = config.kind == ExperimentKind::scaling || config.kind == ExperimentKind::open_sweep;
    for (int n : multi ? config.n_list : std::vector<int>{config.model.n_spins}) {
      const BasisSpec b = build_basis(n, config.fock_cutoff);
      basis.push_back({{"n_spins", n}, {"spin_dim", b.spin_dim()}, {"fock_dim", b.fock_dim()}, {"dim", b.dim()}});
    }
  } else if (config.kind == ExperimentKind::parametric) {
    basis.push_back({{"cutoffs", config.three_mode.cutoffs}, {"dim", config.three_mode.dim()}});
  }
  const auto& a = result.audit;
  json files = json::array();
  for (const auto& f : result.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});

  json manifest = {
      {"experiment", std::string(to_string(config.kind))},
      {"csv_schema_version", kCsvSchemaVersion},
      {"code_version", code_version()},
      {"config", {{"keys", keys}, {"resolved", config.resolved()}}},
      {"basis", basis},
      {"integrator",
       {{"pure", integrator_json(config.pure_integrator)},
        {"lindblad", integrator_json(config.mixed_integrator)},
        {"parametric", integrator_json(config.parametric_integrator)}}},
      {"convergence_audit",
       {{"status", a.status},
        {"method", a.method},
        {"fock_cutoff", a.fock_cutoff},
        {"extended_cutoff", a.extended_cutoff},
        {"max_delta", a.max_delta},
        {"tolerance", a.tolerance},
        {"worst", a.worst}}},
      {"warnings", result.warnings},
      {"wall_clock_seconds", result.wall_seconds},
      {"files", files},
  };
  result.manifest = manifest.dump(2) + "\n";
  write_file(config.output_dir, "manifest.json", result.manifest);
  return result;
}

}  // namespace vibronic
