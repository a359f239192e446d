// parametric.hpp - three-boson parametric model
//
//   H = wa a^dag a + chi (a^dag a)^2 + wb b^dag b + wc c^dag c
//       + g (a^dag b^dag c^2 + a b c^dag^2)
//
// used to check that phase-smeared pump states leave vibrational moments
// <a^dag^k a^l> unchanged up to the Fourier factor sum_j P(theta_j) e^{-i(k-l) theta_j}.

#pragma once

#include "vibronic/dynamics.hpp"
#include "vibronic/hilbert.hpp"

#include <array>
#include <vector>

namespace vibronic {

struct ThreeModeParams {
  double omega_a = 1.0;
  double omega_b = 1.0;
  double omega_c = 1.0;
  double chi = 0.0;
  double g = 0.05;
  std::array<int, 3> cutoffs{6, 6, 12};
  long dim_cap = 20000;

  long dim() const;
  int index(int na, int nb, int nc) const;
  void validate() const;
};

enum class ModeName { a, b, c };

SparseOperator build_three_mode(const ThreeModeParams& params);
// Total quanta a^dag a + b^dag b + c^dag c.
SparseOperator total_number(const ThreeModeParams& params);
SparseOperator mode_annihilator(const ThreeModeParams& params, ModeName mode);

class PumpPreparation {
 public:
  enum class Smearing { none, uniform, custom };

  static PumpPreparation coherent(cplx alpha_c);
  // Equal weights on `phases` angles 2 pi j / phases.
  static PumpPreparation uniform(cplx alpha_c, int phases = 32);
  static PumpPreparation delta(cplx alpha_c, double theta);
  // Weights must be non-negative and sum to 1 within 1e-12.
  static PumpPreparation custom(cplx alpha_c, std::vector<double> thetas, std::vector<double> weights);

  cplx alpha_c() const { return alpha_c_; }
  Smearing smearing() const { return smearing_; }
  const std::vector<double>& thetas() const { return thetas_; }
  const std::vector<double>& weights() const { return weights_; }
  // sum_j w_j e^{-i m theta_j}
  cplx fourier_factor(int m) const;

 private:
  PumpPreparation(cplx alpha, Smearing kind, std::vector<double> thetas, std::vector<double> weights);
  cplx alpha_c_;
  Smearing smearing_ = Smearing::none;
  std::vector<double> thetas_;
  std::vector<double> weights_;
};

// |0_a>|0_b>|alpha_c> on the truncated product space, renormalized. Throws
// ConfigError when |alpha|^2 + 3|alpha| reaches the c cutoff.
Vec coherent_pump_state(const ThreeModeParams& params, cplx alpha_c);

struct SmearedMoment {
  int k = 0;
  int l = 0;
  double time = 0.0;
  cplx direct;    // ensemble average over phase-rotated pump states
  cplx factored;  // coherent-pump moment times the Fourier factor
  double difference = 0.0;
};

// Moments <a^dag^k a^l> at each of `times` (non-negative, increasing).
std::vector<SmearedMoment> smeared_moments(int k, int l, const PumpPreparation& prep,
                                           const std::vector<double>& times, const ThreeModeParams& params,
                                           const IntegratorConfig& integ = {1e-11, 1e-13, 0.5},
                                           int workers = 1);

SmearedMoment smeared_moment(int k, int l, const PumpPreparation& prep, double evolve_to,
                             const ThreeModeParams& params);

// <psi| a^dag^k a^l |psi> on mode a.
cplx mode_moment(const ThreeModeParams& params, const Vec& psi, int k, int l);

}  // namespace vibronic
