// vibronic - run one configured experiment and write CSV + manifest.json.
//
//   vibronic sweep --config runs/sweep.cfg --set n_spins=5 --set workers=4
//
// Exit codes: 0 ok, 2 configuration error, 3 convergence audit failed,
// 4 integrator failure, 1 anything else.

#include "vibronic/errors.hpp"
#include "vibronic/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Invocation {
  std::string config_path;
  std::vector<std::string> overrides;
  bool quiet = false;
};

int run(vibronic::ExperimentKind kind, const Invocation& inv) {
  using namespace vibronic;
  KeyValueConfig keys = inv.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(inv.config_path);
  for (const auto& o : inv.overrides) keys.apply_override(o);
  const ExperimentConfig config = ExperimentConfig::from_keys(kind, keys);
  const RunResult result = run_experiment(config);

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (!inv.quiet) {
    for (const auto& f : result.files)
      std::cout << (result.output_dir / f.name).string() << "  sha256:" << f.sha256 << "\n";
    std::cout << (result.output_dir / "manifest.json").string() << "\n";
    std::cout << "audit: " << result.audit.status;
    if (result.audit.status == "passed" || result.audit.status == "failed")
      std::cout << " (max delta " << result.audit.max_delta << " at n_max " << result.audit.fock_cutoff << " -> "
                << result.audit.extended_cutoff << ")";
    std::cout << "\n";
  }
  if (result.audit.failed()) {
    std::cerr << "error: convergence audit failed: delta " << result.audit.max_delta << " > "
              << result.audit.tolerance << " at " << result.audit.worst << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dicke-model vibronic pulse experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vibronic::code_version());

  Invocation inv;
  std::vector<std::pair<CLI::App*, vibronic::ExperimentKind>> commands;
  const std::pair<const char*, const char*> names[] = {
      {"ramp", "single pulse trajectory -> trajectory.csv"},
      {"sweep", "final populations over the velocity grid -> final_states.csv"},
      {"entropy-map", "S_N(t) over the velocity grid -> entropy_map.csv"},
      {"scaling", "coherence-window edges against N -> vmin_vs_n.csv"},
      {"open-sweep", "damped negativity over kappa and N -> negativity_vs_t.csv"},
      {"wigner", "field Wigner function before or after the pulse -> wigner_grid.csv"},
      {"lzs", "closed-form two-passage curve -> lzs_curve.csv"},
      {"parametric", "phase-smearing check of the three-mode model -> smearing_check.csv"},
  };
  for (const auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", inv.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set,-s", inv.overrides, "override one key, key=value (repeatable)");
    sub->add_flag("--quiet,-q", inv.quiet, "print nothing on success");
    commands.emplace_back(sub, vibronic::parse_experiment_kind(name));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& [sub, kind] : commands)
      if (sub->parsed()) return run(kind, inv);
  } catch (const vibronic::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vibronic::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const vibronic::IntegratorError& e) {
    std::cerr << "integrator failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
