#pragma once

#include "vibronic/hilbert.hpp"
#include "vibronic/integrator.hpp"
#include "vibronic/model.hpp"

#include <functional>
#include <vector>

namespace vibronic {

// Damping of the vibrational mode: rho' = -i[H, rho] + 2 kappa (nbar + 1) D[a]
// + 2 kappa nbar D[a^dagger], D[A] rho = A rho A^dagger - {A^dagger A, rho} / 2.
struct LindbladParams {
  double kappa = 0.0;
  double nbar = 0.0;
  void validate() const;
};

enum class Scheme { adaptive_rk, fixed_step_expm_oracle };

// Kets default to DOP853 at rel_tol 1e-11: explicit RK loses norm at a rate
// ~ tol * ||H|| per unit time, and long slow pulses must stay within
// kNormDriftLimit. The Lindblad trace is a linear invariant, which any RK
// scheme keeps exactly, so damped runs use the cheaper 5(4) pair.
struct IntegratorConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double max_step = 1.0;
  Scheme scheme = Scheme::adaptive_rk;
  double oracle_step = 1e-4;  // fixed step of the expm oracle
  RkPair pair = RkPair::dop853;

  static IntegratorConfig pure_default() { return {}; }
  static IntegratorConfig lindblad_default() {
    return {1e-7, 1e-10, 1.0, Scheme::adaptive_rk, 1e-4, RkPair::dopri5};
  }
  void validate() const;
  StepControl step_control() const { return {rel_tol, abs_tol, max_step}; }
};

struct SampleObservables {
  double norm = 1.0;  // |psi| for kets, Re tr(rho) for density operators
  double energy = 0.0;
  double energy_imag = 0.0;
  double lambda = 0.0;
  double field_occupation = 0.0;
};

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<SampleObservables> observables;
  StepStats stats;

  const State& final_state() const { return states.back(); }
};

using PureTrajectory = Trajectory<PureState>;
using MixedTrajectory = Trajectory<DensityOp>;

// `count` uniform times from 0 to the end of the pulse, inclusive.
std::vector<double> uniform_samples(const PulseProtocol& protocol, int count);

// Integrates i d|psi>/dt = H(t)|psi> through the samples. The pulse breakpoints
// are forced step boundaries. Throws IntegratorError on step underflow or
// when the norm drifts by more than kNormDriftLimit.
PureTrajectory evolve_pure(const PureState& initial, const ModelParams& params,
                           const PulseProtocol& protocol, const IntegratorConfig& integ,
                           const std::vector<double>& sample_times);

// Throws IntegratorError on trace drift > kTraceDriftLimit, Hermiticity
// defect > kHermiticityLimit or an eigenvalue below -kPositivityLimit.
MixedTrajectory evolve_lindblad(const DensityOp& initial, const ModelParams& params,
                                const PulseProtocol& protocol, const LindbladParams& lind,
                                const IntegratorConfig& integ, const std::vector<double>& sample_times,
                                bool check_positivity = true);

// Same integration, but each checked sample is handed to `sink` instead of
// being stored; the returned trajectory has times and observables only.
using DensitySink = std::function<void(double time, const DensityOp& state)>;
MixedTrajectory evolve_lindblad(const DensityOp& initial, const ModelParams& params,
                                const PulseProtocol& protocol, const LindbladParams& lind,
                                const IntegratorConfig& integ, const std::vector<double>& sample_times,
                                bool check_positivity, const DensitySink& sink);

inline constexpr double kNormDriftLimit = 1e-8;
inline constexpr double kTraceDriftLimit = 1e-7;
inline constexpr double kHermiticityLimit = 1e-9;
inline constexpr double kPositivityLimit = 1e-6;
inline constexpr double kThermalTruncationLimit = 1e-6;

// |spin><spin| (x) thermal field state with rho(n, n) ~ (nbar / (nbar + 1))^n,
// renormalized on the truncated Fock space. Throws ConfigError when the
// discarded geometric weight exceeds kThermalTruncationLimit.
DensityOp thermal_initial(const BasisSpec& basis, double nbar, const PureState& spin_state);

// Lindblad right-hand side, exposed for tests: out = L(t)[rho].
class LindbladGenerator {
 public:
  LindbladGenerator(const ModelParams& params, const PulseProtocol& protocol, const LindbladParams& lind,
                    const BasisSpec& basis);
  void operator()(double t, const Mat& rho, Mat& out) const;

 private:
  HamiltonianAssembly hamiltonian_;
  PulseProtocol protocol_;
  SparseMat h0_, hc_, a_;
  Eigen::VectorXd number_diag_;       // diagonal of a^dagger a
  Eigen::VectorXd anti_number_diag_;  // diagonal of a a^dagger (truncated)
  double down_rate_ = 0.0;            // 2 kappa (nbar + 1)
  double up_rate_ = 0.0;              // 2 kappa nbar
};

}  // namespace vibronic
