#pragma once

#include "vibronic/hilbert.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vibronic {

// Field-marginalized populations of the Dicke states |J, M>.
struct ProbabilityRecord {
  std::vector<HalfInt> projections;  // -J .. J
  std::vector<double> probabilities;

  double at(HalfInt m) const;
  // Probability of |J, -J + k>: k = 0 is the ground state GS, k = 1 is W1, ...
  double excitation(int k) const { return probabilities.at(k); }
  double ground() const { return probabilities.front(); }
  double excited() const { return 1.0 - ground(); }
  double total() const;
  // "GS", "W1", "W2", ... by excitation count.
  static std::string label(int k);
};

ProbabilityRecord state_probabilities(const PureState& psi);
ProbabilityRecord state_probabilities(const DensityOp& rho);

// -sum p log2 p over the given spectrum, with 0 log 0 = 0. Eigenvalues
// below 1e-15 (including round-off negatives) are dropped.
double entropy_bits(const Eigen::VectorXd& spectrum);

// Von Neumann entropy in bits of the reduced state of `cut`.
double von_neumann_entropy(const PureState& psi, Subsystem cut);
double von_neumann_entropy(const DensityOp& rho, Subsystem cut);

Mat partial_transpose(const DensityOp& rho, Subsystem over);
// Sum of |negative eigenvalues| of the partial transpose, i.e. (||rho^T||_1 - 1) / 2.
double negativity(const DensityOp& rho, Subsystem transpose_over = Subsystem::spin);
// log2 ||rho^T||_1.
double log_negativity(const DensityOp& rho, Subsystem transpose_over = Subsystem::spin);

struct EntanglementPair {
  double negativity = 0.0;
  double log_negativity = 0.0;
};
// Both measures from a single eigendecomposition.
EntanglementPair negativities(const DensityOp& rho, Subsystem transpose_over = Subsystem::spin);

// Phase-space grid. Axes are x = Re(alpha) and p = Im(alpha).
struct GridSpec {
  double x_min = -4.0, x_max = 4.0;
  int x_points = 81;
  double p_min = -4.0, p_max = 4.0;
  int p_points = 81;

  static GridSpec square(double extent, int points) { return {-extent, extent, points, -extent, extent, points}; }
  void validate() const;
};

struct WignerGrid {
  std::vector<double> x_axis;
  std::vector<double> p_axis;
  Eigen::MatrixXd values;  // values(ix, ip)
  std::vector<std::string> warnings;

  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
  // Trapezoidal integral over the grid.
  double integral() const;
};

// W(alpha) = (2 / pi) tr[rho D(alpha) P D^dagger(alpha)] with the photon
// parity P, so the integral over d Re(alpha) d Im(alpha) is 1.
double wigner_at(const Mat& rho_field, cplx alpha);
WignerGrid wigner(const DensityOp& rho_field, const GridSpec& grid);

struct LzsParams {
  double delta = 0.5;
  double velocity = 1.0;
  void validate() const;
};

// P = exp(-pi Delta^2 / (2 v)), the single-passage diabatic probability.
double lzs_transition_prob(const LzsParams& lzs);
// P^e = 2 P (1 - P), averaged excited-manifold weight after two passages.
double lzs_excited_prob(const LzsParams& lzs);
// Velocity where P = 1/2 and P^e peaks at 1/2: pi Delta^2 / (2 ln 2).
double lzs_peak_velocity(double delta);

// Threshold interpretation for coherence-window edges.
struct WindowThreshold {
  enum class Mode { relative, absolute };
  Mode mode = Mode::relative;
  double value = 0.5;  // fraction of the curve maximum, or an absolute level
};

// (v, S) samples, v strictly increasing and positive.
using EntropyCurve = std::vector<std::pair<double, double>>;

// Smallest v whose S exceeds the threshold, interpolated linearly in log v
// against the preceding sample. nullopt means the window was not found.
std::optional<double> estimate_vmin(const EntropyCurve& curve, WindowThreshold threshold = {});
// Largest v whose S exceeds the threshold, interpolated against the next sample.
std::optional<double> estimate_vmax(const EntropyCurve& curve, WindowThreshold threshold = {});

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vibronic
