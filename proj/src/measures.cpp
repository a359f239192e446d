#include "vibronic/measures.hpp"

#include "vibronic/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace vibronic {

double ProbabilityRecord::at(HalfInt m) const {
  for (std::size_t k = 0; k < projections.size(); ++k)
    if (projections[k] == m) return probabilities[k];
  throw ConfigError("no projection " + m.str() + " in probability record");
}

double ProbabilityRecord::total() const {
  double s = 0.0;
  for (double p : probabilities) s += p;
  return s;
}

std::string ProbabilityRecord::label(int k) { return k == 0 ? "GS" : "W" + std::to_string(k); }

namespace {

ProbabilityRecord make_record(const BasisSpec& basis, std::vector<double> probs) {
  for (double& p : probs) p = std::clamp(p, 0.0, 1.0);
  return {basis.projections(), std::move(probs)};
}

}  // namespace

ProbabilityRecord state_probabilities(const PureState& psi) {
  const BasisSpec basis = basis_of(psi.dims());
  const auto a = psi.as_matrix();
  std::vector<double> probs(basis.spin_dim());
  for (int s = 0; s < basis.spin_dim(); ++s) probs[s] = a.col(s).squaredNorm();
  return make_record(basis, std::move(probs));
}

ProbabilityRecord state_probabilities(const DensityOp& rho) {
  const BasisSpec basis = basis_of(rho.dims());
  const int fd = basis.fock_dim();
  std::vector<double> probs(basis.spin_dim(), 0.0);
  for (int s = 0; s < basis.spin_dim(); ++s)
    for (int n = 0; n < fd; ++n) probs[s] += rho.matrix()(s * fd + n, s * fd + n).real();
  return make_record(basis, std::move(probs));
}

double entropy_bits(const Eigen::VectorXd& spectrum) {
  double s = 0.0;
  for (double p : spectrum)
    if (p > 1e-15) s -= p * std::log2(p);
  return std::max(0.0, s);
}

double von_neumann_entropy(const PureState& psi, Subsystem cut) {
  const auto a = psi.as_matrix();  // field x spin
  Mat reduced = (cut == Subsystem::field) ? Mat(a * a.adjoint()) : Mat(a.transpose() * a.conjugate());
  Eigen::SelfAdjointEigenSolver<Mat> solver(reduced, Eigen::EigenvaluesOnly);
  return entropy_bits(solver.eigenvalues());
}

double von_neumann_entropy(const DensityOp& rho, Subsystem cut) {
  const DensityOp reduced = partial_trace(rho, cut);
  Eigen::SelfAdjointEigenSolver<Mat> solver(reduced.matrix(), Eigen::EigenvaluesOnly);
  return entropy_bits(solver.eigenvalues());
}

Mat partial_transpose(const DensityOp& rho, Subsystem over) {
  const int sd = rho.dims().spin_dim;
  const int fd = rho.dims().field_dim;
  const Mat& m = rho.matrix();
  Mat out(m.rows(), m.cols());
  for (int s = 0; s < sd; ++s)
    for (int t = 0; t < sd; ++t) {
      if (over == Subsystem::spin)
        out.block(t * fd, s * fd, fd, fd) = m.block(s * fd, t * fd, fd, fd);
      else
        out.block(s * fd, t * fd, fd, fd) = m.block(s * fd, t * fd, fd, fd).transpose();
    }
  return out;
}

EntanglementPair negativities(const DensityOp& rho, Subsystem transpose_over) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(partial_transpose(rho, transpose_over), Eigen::EigenvaluesOnly);
  double negative = 0.0;
  double trace_norm = 0.0;
  for (double e : solver.eigenvalues()) {
    trace_norm += std::abs(e);
    if (e < 0.0) negative -= e;
  }
  return {negative, std::log2(std::max(trace_norm, 1.0))};
}

double negativity(const DensityOp& rho, Subsystem transpose_over) {
  return negativities(rho, transpose_over).negativity;
}

double log_negativity(const DensityOp& rho, Subsystem transpose_over) {
  return negativities(rho, transpose_over).log_negativity;
}

// ---------------------------------------------------------------------------

void GridSpec::validate() const {
  if (x_points < 2 || p_points < 2) throw ConfigError("Wigner grid needs at least 2 points per axis");
  if (!(x_max > x_min) || !(p_max > p_min)) throw ConfigError("Wigner grid bounds must be increasing");
}

double WignerGrid::integral() const {
  auto weights = [](const std::vector<double>& axis) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(axis.size()));
    for (std::size_t k = 0; k + 1 < axis.size(); ++k) {
      const double h = axis[k + 1] - axis[k];
      w(k) += 0.5 * h;
      w(k + 1) += 0.5 * h;
    }
    return w;
  };
  return weights(x_axis).dot(values * weights(p_axis));
}

double wigner_at(const Mat& rho, cplx alpha) {
  // Laguerre recursion over Wigner functions of |m><n| (iterative form).
  const int dim = static_cast<int>(rho.rows());
  std::vector<cplx> w(dim);
  w[0] = std::exp(-2.0 * std::norm(alpha)) / std::numbers::pi;
  double acc = rho(0, 0).real() * w[0].real();
  for (int n = 1; n < dim; ++n) {
    w[n] = 2.0 * alpha * w[n - 1] / std::sqrt(static_cast<double>(n));
    acc += 2.0 * (rho(0, n) * w[n]).real();
  }
  for (int m = 1; m < dim; ++m) {
    const double sm = std::sqrt(static_cast<double>(m));
    cplx temp = w[m];
    w[m] = (2.0 * std::conj(alpha) * temp - sm * w[m - 1]) / sm;
    acc += (rho(m, m) * w[m]).real();
    for (int n = m + 1; n < dim; ++n) {
      const cplx next = (2.0 * alpha * w[n - 1] - sm * temp) / std::sqrt(static_cast<double>(n));
      temp = w[n];
      w[n] = next;
      acc += 2.0 * (rho(m, n) * w[n]).real();
    }
  }
  // The recursion is normalized over quadratures x, p with alpha = (x + ip)/sqrt(2);
  // rescale to d^2 alpha.
  return 2.0 * acc;
}

WignerGrid wigner(const DensityOp& rho_field, const GridSpec& grid) {
  grid.validate();
  if (rho_field.dims().spin_dim != 1) throw ConfigError("wigner expects a reduced field state");
  WignerGrid out;
  out.x_axis.resize(grid.x_points);
  out.p_axis.resize(grid.p_points);
  for (int i = 0; i < grid.x_points; ++i)
    out.x_axis[i] = grid.x_min + (grid.x_max - grid.x_min) * i / (grid.x_points - 1);
  for (int j = 0; j < grid.p_points; ++j)
    out.p_axis[j] = grid.p_min + (grid.p_max - grid.p_min) * j / (grid.p_points - 1);

  const int cutoff = rho_field.dims().field_dim - 1;
  const double reach = std::max(grid.x_min * grid.x_min, grid.x_max * grid.x_max) +
                       std::max(grid.p_min * grid.p_min, grid.p_max * grid.p_max);
  if (reach < cutoff) {
    std::ostringstream msg;
    msg << "grid reaches |alpha|^2 = " << reach << " < fock cutoff " << cutoff
        << "; high Fock components may be unresolved";
    out.warnings.push_back(msg.str());
  }

  out.values.resize(grid.x_points, grid.p_points);
  for (int i = 0; i < grid.x_points; ++i)
    for (int j = 0; j < grid.p_points; ++j)
      out.values(i, j) = wigner_at(rho_field.matrix(), cplx(out.x_axis[i], out.p_axis[j]));
  return out;
}

// ---------------------------------------------------------------------------

void LzsParams::validate() const {
  if (!(delta > 0.0)) throw ConfigError("LZS gap delta must be > 0");
  if (!(velocity > 0.0)) throw ConfigError("LZS velocity must be > 0");
}

double lzs_transition_prob(const LzsParams& lzs) {
  lzs.validate();
  // exp(-2 pi Delta^2 / (4 v)) written in reduced form.
  return std::exp(-std::numbers::pi * lzs.delta * lzs.delta / (2.0 * lzs.velocity));
}

double lzs_excited_prob(const LzsParams& lzs) {
  const double p = lzs_transition_prob(lzs);
  return 2.0 * p * (1.0 - p);
}

double lzs_peak_velocity(double delta) {
  if (!(delta > 0.0)) throw ConfigError("LZS gap delta must be > 0");
  return std::numbers::pi * delta * delta / (2.0 * std::numbers::ln2);
}

// ---------------------------------------------------------------------------

namespace {

void check_curve(const EntropyCurve& curve) {
  if (curve.empty()) throw ConfigError("empty entropy curve");
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (!(curve[k].first > 0.0)) throw ConfigError("entropy curve velocities must be > 0");
    if (k > 0 && !(curve[k].first > curve[k - 1].first))
      throw ConfigError("entropy curve velocities must be strictly increasing");
  }
}

double resolve_threshold(const EntropyCurve& curve, WindowThreshold threshold) {
  if (threshold.mode == WindowThreshold::Mode::absolute) return threshold.value;
  double top = curve.front().second;
  for (const auto& [v, s] : curve) top = std::max(top, s);
  return threshold.value * top;
}

double crossing(std::pair<double, double> below, std::pair<double, double> above, double level) {
  const double la = std::log(below.first);
  const double lb = std::log(above.first);
  const double f = (level - below.second) / (above.second - below.second);
  return std::exp(la + f * (lb - la));
}

}  // namespace

std::optional<double> estimate_vmin(const EntropyCurve& curve, WindowThreshold threshold) {
  check_curve(curve);
  const double level = resolve_threshold(curve, threshold);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (curve[k].second > level) {
      if (k == 0) return curve[0].first;
      return crossing(curve[k - 1], curve[k], level);
    }
  }
  return std::nullopt;
}

std::optional<double> estimate_vmax(const EntropyCurve& curve, WindowThreshold threshold) {
  check_curve(curve);
  const double level = resolve_threshold(curve, threshold);
  for (std::size_t k = curve.size(); k-- > 0;) {
    if (curve[k].second > level) {
      if (k + 1 == curve.size()) return curve[k].first;
      return crossing(curve[k + 1], curve[k], level);
    }
  }
  return std::nullopt;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs >= 2 paired points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw ConfigError("log-log fit needs positive data");
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ConfigError("log-log fit needs distinct x values");
  return sxy / sxx;
}

}  // namespace vibronic
