#include "vibronic/dynamics.hpp"

#include "vibronic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vibronic {

void LindbladParams::validate() const {
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
  if (!(nbar >= 0.0)) throw ConfigError("nbar must be >= 0");
}

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("integrator tolerances must be > 0");
  if (!(max_step > 0.0)) throw ConfigError("max_step must be > 0");
  if (!(oracle_step > 0.0)) throw ConfigError("oracle_step must be > 0");
}

std::vector<double> uniform_samples(const PulseProtocol& protocol, int count) {
  if (count < 2) throw ConfigError("need at least two sample times");
  const double end = protocol.duration();
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) out[k] = end * static_cast<double>(k) / (count - 1);
  out.back() = end;
  return out;
}

Vec expm_action(const SparseMat& h, double dt, const Vec& v) {
  // Column-sum norm bound of the row-major matrix.
  Eigen::VectorXd col_sums = Eigen::VectorXd::Zero(h.cols());
  for (int k = 0; k < h.outerSize(); ++k)
    for (SparseMat::InnerIterator it(h, k); it; ++it) col_sums(it.col()) += std::abs(it.value());
  const double norm = col_sums.size() ? col_sums.maxCoeff() : 0.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil(norm * std::abs(dt))));
  const double tau = dt / pieces;

  Vec out = v;
  for (int p = 0; p < pieces; ++p) {
    Vec term = out;
    Vec sum = out;
    const double scale = out.norm();
    for (int k = 1; k < 60; ++k) {
      term = (cplx(0.0, -tau) / static_cast<double>(k)) * (h * term);
      sum += term;
      if (term.norm() <= 1e-17 * scale) break;
    }
    out = std::move(sum);
  }
  return out;
}

namespace {

void check_samples(const std::vector<double>& samples, const PulseProtocol& protocol) {
  if (samples.empty()) throw ConfigError("no sample times requested");
  const double end = protocol.duration();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k] < 0.0 || samples[k] > end * (1.0 + 1e-12))
      throw ConfigError("sample time " + std::to_string(samples[k]) + " outside [0, " + std::to_string(end) + "]");
    if (k > 0 && !(samples[k] > samples[k - 1])) throw ConfigError("sample times must be strictly increasing");
  }
}

// Sorted union of sample times and pulse breakpoints that lie inside the range.
std::vector<double> stop_times(const std::vector<double>& samples, const PulseProtocol& protocol) {
  std::vector<double> stops = samples;
  for (double b : protocol.breakpoints())
    if (b > 0.0 && b < samples.back()) stops.push_back(b);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  return stops;
}

SampleObservables observe(const Vec& psi, const HamiltonianAssembly& h, double lambda,
                          const SparseOperator& number) {
  SampleObservables obs;
  obs.norm = psi.norm();
  const SparseMat hm = h.static_part.matrix() + (lambda * h.norm_factor) * h.coupling_part.matrix();
  const cplx e = psi.dot(hm * psi);
  obs.energy = e.real();
  obs.energy_imag = e.imag();
  obs.lambda = lambda;
  obs.field_occupation = psi.dot(number.matrix() * psi).real();
  return obs;
}

}  // namespace

PureTrajectory evolve_pure(const PureState& initial, const ModelParams& params, const PulseProtocol& protocol,
                           const IntegratorConfig& integ, const std::vector<double>& sample_times) {
  params.validate();
  protocol.validate();
  integ.validate();
  check_samples(sample_times, protocol);
  const BasisSpec basis = basis_of(initial.dims());
  const HamiltonianAssembly h = assemble_hamiltonian(params, basis);
  const SparseOperator number = op_matrix(OpKind::number, basis);
  const SparseMat& h0 = h.static_part.matrix();
  const SparseMat& hc = h.coupling_part.matrix();
  const double c = h.norm_factor;

  PureTrajectory traj;
  Vec psi = initial.amplitudes();
  double t = 0.0;

  auto record = [&](double time) {
    const double norm = psi.norm();
    if (std::abs(norm - 1.0) > kNormDriftLimit)
      throw IntegratorError("norm drift " + std::to_string(norm - 1.0) + " at t = " + std::to_string(time));
    traj.times.push_back(time);
    traj.observables.push_back(observe(psi, h, lambda_at(time, protocol), number));
    traj.states.emplace_back(initial.dims(), psi, kNormDriftLimit);
  };

  const auto stops = stop_times(sample_times, protocol);
  std::size_t next_sample = 0;
  auto maybe_record = [&](double time) {
    if (next_sample < sample_times.size() && time == sample_times[next_sample]) {
      record(time);
      ++next_sample;
    }
  };

  if (integ.scheme == Scheme::adaptive_rk) {
    auto rhs = [&](double time, const Vec& y, Vec& dy) {
      const double lam = lambda_at(time, protocol) * c;
      dy.noalias() = h0 * y;
      dy.noalias() += lam * (hc * y);
      dy *= cplx(0.0, -1.0);
    };
    traj.stats = with_stepper<Vec>(integ.pair, rhs, integ.step_control(), [&](auto& stepper) {
      for (double stop : stops) {
        stepper.advance(t, psi, stop);
        maybe_record(stop);
      }
    });
  } else {
    for (double stop : stops) {
      const double span = stop - t;
      if (span > 0.0) {
        const long steps = std::max(1L, static_cast<long>(std::ceil(span / integ.oracle_step - 1e-9)));
        const double dt = span / static_cast<double>(steps);
        for (long k = 0; k < steps; ++k) {
          const double mid = t + (static_cast<double>(k) + 0.5) * dt;
          const SparseMat hm = h0 + (lambda_at(mid, protocol) * c) * hc;
          psi = expm_action(hm, dt, psi);
        }
        traj.stats.accepted += steps;
        t = stop;
      }
      maybe_record(stop);
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------

LindbladGenerator::LindbladGenerator(const ModelParams& params, const PulseProtocol& protocol,
                                     const LindbladParams& lind, const BasisSpec& basis)
    : hamiltonian_(assemble_hamiltonian(params, basis)), protocol_(protocol) {
  lind.validate();
  h0_ = hamiltonian_.static_part.matrix();
  hc_ = hamiltonian_.coupling_part.matrix();
  a_ = op_matrix(OpKind::annihilate, basis).matrix();
  number_diag_.resize(basis.dim());
  anti_number_diag_.resize(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const int n = i % basis.fock_dim();
    number_diag_(i) = n;
    anti_number_diag_(i) = (n < basis.fock_cutoff) ? n + 1.0 : 0.0;
  }
  down_rate_ = 2.0 * lind.kappa * (lind.nbar + 1.0);
  up_rate_ = 2.0 * lind.kappa * lind.nbar;
}

void LindbladGenerator::operator()(double t, const Mat& rho, Mat& out) const {
  const double lam = lambda_at(t, protocol_) * hamiltonian_.norm_factor;
  Mat hr = h0_ * rho;
  hr.noalias() += lam * (hc_ * rho);
  // -i [H, rho] with rho H = (H rho)^dagger.
  out = cplx(0.0, -1.0) * (hr - hr.adjoint());

  auto anticommutator = [&](const Eigen::VectorXd& d, double rate) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j)
      for (Eigen::Index i = 0; i < rho.rows(); ++i) out(i, j) -= 0.5 * rate * (d(i) + d(j)) * rho(i, j);
  };
  if (down_rate_ > 0.0) {
    const Mat ar = a_ * rho;                          // a rho
    out.noalias() += down_rate_ * (a_ * ar.adjoint());  // a rho a^dagger
    anticommutator(number_diag_, down_rate_);
  }
  if (up_rate_ > 0.0) {
    const SparseMat ad = a_.adjoint();
    const Mat adr = ad * rho;                        // a^dagger rho
    out.noalias() += up_rate_ * (ad * adr.adjoint());  // a^dagger rho a
    anticommutator(anti_number_diag_, up_rate_);
  }
}

MixedTrajectory evolve_lindblad(const DensityOp& initial, const ModelParams& params, const PulseProtocol& protocol,
                                const LindbladParams& lind, const IntegratorConfig& integ,
                                const std::vector<double>& sample_times, bool check_positivity) {
  std::vector<DensityOp> states;
  auto traj = evolve_lindblad(initial, params, protocol, lind, integ, sample_times, check_positivity,
                              [&states](double, const DensityOp& rho) { states.push_back(rho); });
  traj.states = std::move(states);
  return traj;
}

MixedTrajectory evolve_lindblad(const DensityOp& initial, const ModelParams& params, const PulseProtocol& protocol,
                                const LindbladParams& lind, const IntegratorConfig& integ,
                                const std::vector<double>& sample_times, bool check_positivity,
                                const DensitySink& sink) {
  params.validate();
  protocol.validate();
  integ.validate();
  lind.validate();
  if (integ.scheme != Scheme::adaptive_rk)
    throw ConfigError("the expm oracle scheme is only available for pure-state evolution");
  check_samples(sample_times, protocol);
  const BasisSpec basis = basis_of(initial.dims());
  const LindbladGenerator generator(params, protocol, lind, basis);
  const HamiltonianAssembly h = assemble_hamiltonian(params, basis);
  const SparseOperator number = op_matrix(OpKind::number, basis);

  MixedTrajectory traj;
  Mat rho = initial.matrix();
  double t = 0.0;

  auto record = [&](double time) {
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermiticityLimit)
      throw IntegratorError("Hermiticity defect " + std::to_string(herm) + " at t = " + std::to_string(time));
    Mat sym = 0.5 * (rho + rho.adjoint());
    const cplx tr = sym.trace();
    if (std::abs(tr - cplx(1.0, 0.0)) > kTraceDriftLimit)
      throw IntegratorError("trace drift " + std::to_string(tr.real() - 1.0) + " at t = " + std::to_string(time));
    DensityOp state(initial.dims(), std::move(sym), kTraceDriftLimit);
    if (check_positivity) {
      const double min_eig = state.min_eigenvalue();
      if (min_eig < -kPositivityLimit)
        throw IntegratorError("positivity violated: eigenvalue " + std::to_string(min_eig) + " at t = " +
                              std::to_string(time));
    }
    const double lam = lambda_at(time, protocol);
    SampleObservables obs;
    obs.norm = tr.real();
    const SparseMat hm = h.static_part.matrix() + (lam * h.norm_factor) * h.coupling_part.matrix();
    const cplx e = (hm * state.matrix()).trace();
    obs.energy = e.real();
    obs.energy_imag = e.imag();
    obs.lambda = lam;
    obs.field_occupation = (number.matrix() * state.matrix()).trace().real();
    traj.times.push_back(time);
    traj.observables.push_back(obs);
    sink(time, state);
  };

  auto rhs = [&generator](double time, const Mat& y, Mat& dy) { generator(time, y, dy); };
  std::size_t next_sample = 0;
  traj.stats = with_stepper<Mat>(integ.pair, rhs, integ.step_control(), [&](auto& stepper) {
    for (double stop : stop_times(sample_times, protocol)) {
      stepper.advance(t, rho, stop);
      if (next_sample < sample_times.size() && stop == sample_times[next_sample]) {
        record(stop);
        ++next_sample;
      }
    }
  });
  return traj;
}

// ---------------------------------------------------------------------------

DensityOp thermal_initial(const BasisSpec& basis, double nbar, const PureState& spin_state) {
  if (!(nbar >= 0.0)) throw ConfigError("nbar must be >= 0");
  if (spin_state.dims() != Bipartition{basis.spin_dim(), 1})
    throw ConfigError("spin state must live on the spin factor (dimension " + std::to_string(basis.spin_dim()) + ")");
  const double ratio = nbar / (nbar + 1.0);
  const int fd = basis.fock_dim();
  // Weight beyond the cutoff of the untruncated geometric distribution.
  const double discarded = std::pow(ratio, fd);
  if (discarded > kThermalTruncationLimit)
    throw ConfigError("fock_cutoff " + std::to_string(basis.fock_cutoff) + " too small for nbar = " +
                      std::to_string(nbar) + " (discarded weight " + std::to_string(discarded) + ")");
  Mat field = Mat::Zero(fd, fd);
  double weight = 1.0;
  double total = 0.0;
  for (int n = 0; n < fd; ++n) {
    field(n, n) = weight;
    total += weight;
    weight *= ratio;
  }
  field /= total;
  const Vec& s = spin_state.amplitudes();
  DensityOp spin({basis.spin_dim(), 1}, s * s.adjoint(), 2.0 * PureState::kNormTolerance + DensityOp::kTraceTolerance);
  return tensor(spin, DensityOp({1, fd}, std::move(field)));
}

}  // namespace vibronic
