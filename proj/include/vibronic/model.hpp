#pragma once

#include "vibronic/hilbert.hpp"

#include <array>

namespace vibronic {

// Exciton splitting over vibrational frequency for the Chl b601 - Chl a602
// dimer: 667.7 cm^-1 / 742.0 cm^-1.
inline constexpr double kLhciiEpsilonRatio = 667.7 / 742.0;

struct ModelParams {
  double omega = 1.0;    // vibrational mode frequency, sets the energy unit
  double epsilon = 1.0;  // exciton splitting
  int n_spins = 1;
  double lambda_max = 1.0;

  void validate() const;
};

enum class PulseShape { up_down_linear };

// lambda(t) ramps up at slope `velocity` to lambda_max and back down to 0.
// Total duration is 2 * lambda_max / velocity.
struct PulseProtocol {
  double velocity = 1.0;
  double lambda_max = 1.0;
  PulseShape shape = PulseShape::up_down_linear;

  void validate() const;
  double apex_time() const { return lambda_max / velocity; }
  double duration() const { return 2.0 * lambda_max / velocity; }
  // Points where lambda(t) is not differentiable.
  std::array<double, 2> breakpoints() const { return {apex_time(), duration()}; }
};

double lambda_at(double t, const PulseProtocol& protocol);

// H(lambda) = static_part + (lambda / sqrt(N)) * coupling_part with
// static_part = omega n + epsilon Jz and coupling_part = (a^dagger + a) 2 Jx.
struct HamiltonianAssembly {
  SparseOperator static_part;
  SparseOperator coupling_part;
  double norm_factor = 1.0;

  SparseOperator at_lambda(double lambda) const;
  SparseOperator at(double t, const PulseProtocol& protocol) const {
    return at_lambda(lambda_at(t, protocol));
  }
};

HamiltonianAssembly assemble_hamiltonian(const ModelParams& params, const BasisSpec& basis);

SparseOperator hamiltonian_at(double t, const ModelParams& params, const PulseProtocol& protocol,
                              const BasisSpec& basis);

// sqrt(omega * epsilon) / 2, the Dicke superradiant threshold.
double critical_coupling(const ModelParams& params);

}  // namespace vibronic
