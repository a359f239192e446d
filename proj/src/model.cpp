#include "vibronic/model.hpp"

#include "vibronic/errors.hpp"

#include <cmath>
#include <string>

namespace vibronic {

void ModelParams::validate() const {
  if (!(omega > 0.0)) throw ConfigError("omega must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(lambda_max >= 0.0)) throw ConfigError("lambda_max must be >= 0");
  if (n_spins < 1) throw ConfigError("n_spins must be >= 1");
}

void PulseProtocol::validate() const {
  if (!(velocity > 0.0) || !std::isfinite(velocity)) throw ConfigError("velocity must be > 0");
  if (!(lambda_max >= 0.0)) throw ConfigError("lambda_max must be >= 0");
}

double lambda_at(double t, const PulseProtocol& protocol) {
  const double v = protocol.velocity;
  if (t <= protocol.apex_time()) return v * std::max(t, 0.0);
  if (t <= protocol.duration()) return std::max(0.0, 2.0 * protocol.lambda_max - v * t);
  return 0.0;
}

SparseOperator HamiltonianAssembly::at_lambda(double lambda) const {
  return static_part + (lambda * norm_factor) * coupling_part;
}

HamiltonianAssembly assemble_hamiltonian(const ModelParams& params, const BasisSpec& basis) {
  params.validate();
  if (basis.n_spins != params.n_spins)
    throw ConfigError("basis has N = " + std::to_string(basis.n_spins) + " but model has N = " +
                      std::to_string(params.n_spins));
  const auto number = op_matrix(OpKind::number, basis);
  const auto jz = op_matrix(OpKind::jz, basis);
  const auto a = op_matrix(OpKind::annihilate, basis);
  const auto jx = op_matrix(OpKind::jx, basis);

  HamiltonianAssembly h;
  h.static_part = params.omega * number + params.epsilon * jz;
  const auto quadrature = a + a.adjoint();
  const auto coupling = quadrature * (2.0 * jx);
  h.coupling_part = SparseOperator(coupling.dim(), coupling.entries(), true);
  h.norm_factor = 1.0 / std::sqrt(static_cast<double>(params.n_spins));
  return h;
}

SparseOperator hamiltonian_at(double t, const ModelParams& params, const PulseProtocol& protocol,
                              const BasisSpec& basis) {
  return assemble_hamiltonian(params, basis).at(t, protocol);
}

double critical_coupling(const ModelParams& params) {
  params.validate();
  return 0.5 * std::sqrt(params.omega * params.epsilon);
}

}  // namespace vibronic
