#include "doctest.h"
#include "test_util.hpp"
#include "vibronic/dynamics.hpp"
#include "vibronic/errors.hpp"
#include "vibronic/experiments.hpp"
#include "vibronic/measures.hpp"

#include <cmath>
#include <random>

using namespace vibronic;
using testutil::max_abs;

namespace {

double trace_distance(const Mat& a, const Mat& b) {
  return 0.5 * Eigen::SelfAdjointEigenSolver<Mat>(a - b).eigenvalues().cwiseAbs().sum();
}

PureState spin_ket(const BasisSpec& b, HalfInt m) {
  Vec s = Vec::Zero(b.spin_dim());
  s[(m - (-b.j)).twice() / 2] = 1.0;
  return {{b.spin_dim(), 1}, s};
}

}  // namespace

TEST_CASE("integrators reproduce a harmonic oscillator") {
  // y'' = -y as a complex first-order system: y = e^{-it}.
  auto rhs = [](double, const Vec& y, Vec& dy) { dy = cplx(0.0, -1.0) * y; };
  for (auto pair : {RkPair::dopri5, RkPair::dop853}) {
    Vec y = Vec::Ones(1);
    double t = 0.0;
    const auto stats = with_stepper<Vec>(pair, rhs, StepControl{1e-10, 1e-12, 1.0},
                                         [&](auto& s) { s.advance(t, y, 20.0); });
    CHECK(t == 20.0);
    CHECK(std::abs(y[0] - std::exp(cplx(0.0, -20.0))) < 1e-8);
    CHECK(stats.accepted > 0);
  }
  CHECK_THROWS_AS(make_dop853<Vec>(rhs, StepControl{0.0, 1e-12, 1.0}), ConfigError);
}

TEST_CASE("step budget and underflow raise integrator errors") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy = cplx(0.0, -1.0) * y; };
  StepControl tight{1e-10, 1e-12, 1.0};
  tight.max_steps = 5;
  Vec y = Vec::Ones(1);
  double t = 0.0;
  auto stepper = make_dormand_prince<Vec>(rhs, tight);
  CHECK_THROWS_AS(stepper.advance(t, y, 100.0), IntegratorError);

  auto blowup = [](double t, const Vec& y, Vec& dy) { dy = y * (1.0 / std::pow(1.0 - t, 2)); };
  Vec z = Vec::Ones(1);
  double t2 = 0.0;
  auto s2 = make_dop853<Vec>(blowup, StepControl{1e-10, 1e-12, 1.0});
  CHECK_THROWS_AS(s2.advance(t2, z, 2.0), IntegratorError);
}

TEST_CASE("expm_action matches a dense exponential") {
  const auto b = build_basis(2, 6);
  const auto h = assemble_hamiltonian({1.0, 1.0, 2, 1.0}, b).at_lambda(0.8);
  std::mt19937_64 rng(5);
  const Vec v = testutil::random_unit(b.dim(), rng);
  Eigen::SelfAdjointEigenSolver<Mat> es(h.dense());
  const double dt = 0.37;
  const Vec phases = (es.eigenvalues().cast<cplx>() * cplx(0.0, -dt)).array().exp();
  const Vec ref = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * v));
  CHECK((expm_action(h.matrix(), dt, v) - ref).norm() < 1e-12);
}

TEST_CASE("no pulse leaves populations fixed and rotates the phase") {
  const auto b = build_basis(3, 4);
  const auto h = assemble_hamiltonian({1.0, 1.0, 3, 0.0}, b);
  const SparseMat h0 = h.static_part.matrix();
  Vec psi = basis_state(b, HalfInt::from_twice(-3), 0).amplitudes();
  auto rhs = [&](double, const Vec& y, Vec& dy) { dy = cplx(0.0, -1.0) * (h0 * y); };
  double t = 0.0;
  with_stepper<Vec>(RkPair::dop853, rhs, IntegratorConfig::pure_default().step_control(),
                    [&](auto& s) { s.advance(t, psi, 10.0); });
  CHECK(std::abs(psi[0] - std::exp(cplx(0.0, 1.5 * 10.0))) < 1e-9);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-10);

  // Through the public entry point a zero-height pulse has zero duration.
  const auto traj = evolve_pure(basis_state(b, HalfInt::from_twice(-3), 0), {1.0, 1.0, 3, 0.0}, {0.5, 0.0},
                                IntegratorConfig::pure_default(), {0.0});
  CHECK(traj.states.size() == 1);
  CHECK(state_probabilities(traj.final_state()).ground() == 1.0);
}

TEST_CASE("single dimer from X ends near Y with probability one half") {
  PulseSetup setup;
  setup.model = {1.0, 1.0, 1, 1.0};
  setup.initial = InitialStateSpec::named("X");
  const auto run = simulate_pulse(setup, std::exp2(-0.02));
  const double p_y = run.final_probabilities().at(HalfInt::from_twice(-1));
  CHECK(p_y > 0.4);
  CHECK(p_y < 0.6);
  for (double n : run.norm) CHECK(std::abs(n - 1.0) < 1e-8);
}

TEST_CASE("adaptive integration agrees with the expm oracle") {
  for (int n_spins : {1, 2, 3}) {
    CAPTURE(n_spins);
    const auto b = build_basis(n_spins, 20);
    const ModelParams params{1.0, 1.0, n_spins, 1.0};
    const PulseProtocol p{0.5, 1.0};
    const auto init = basis_state(b, -b.j, 0);
    const auto samples = uniform_samples(p, 5);
    IntegratorConfig oracle;
    oracle.scheme = Scheme::fixed_step_expm_oracle;
    oracle.oracle_step = 1e-4;
    const auto a = evolve_pure(init, params, p, IntegratorConfig::pure_default(), samples);
    const auto o = evolve_pure(init, params, p, oracle, samples);
    for (std::size_t k = 0; k < samples.size(); ++k)
      CHECK((a.states[k].amplitudes() - o.states[k].amplitudes()).norm() < 1e-6);
  }
}

TEST_CASE("unitary evolution conserves norm and parity") {
  const auto b = build_basis(3, 30);
  const ModelParams params{1.0, 1.0, 3, 1.0};
  const PulseProtocol p{0.12, 1.0};
  const SparseMat par = op_matrix(OpKind::parity, b).matrix();
  for (auto m : {HalfInt::from_twice(-3), HalfInt::from_twice(1)}) {
    const auto init = basis_state(b, m, 0);
    const auto traj = evolve_pure(init, params, p, IntegratorConfig::pure_default(), uniform_samples(p, 40));
    const double p0 = init.amplitudes().dot(par * init.amplitudes()).real();
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      const Vec& psi = traj.states[k].amplitudes();
      CHECK(std::abs(psi.norm() - 1.0) < 1e-8);
      CHECK(std::abs(psi.dot(par * psi) - p0) < 1e-7);
    }
    // lambda vanishes at both ends, so the endpoint energies are real.
    CHECK(std::abs(traj.observables.front().energy_imag) < 1e-10);
    CHECK(std::abs(traj.observables.back().energy_imag) < 1e-10);
    CHECK(traj.observables.back().lambda == 0.0);
  }
}

TEST_CASE("forward then time-reversed evolution returns the initial state") {
  const auto b = build_basis(3, 20);
  const ModelParams params{1.0, 1.0, 3, 1.0};
  const PulseProtocol p{0.4, 1.0};
  const auto init = basis_state(b, HalfInt::from_twice(-3), 0);
  const auto integ = IntegratorConfig::pure_default();
  const auto fwd = evolve_pure(init, params, p, integ, {0.0, p.duration()});

  const auto h = assemble_hamiltonian(params, b);
  const SparseMat h0 = h.static_part.matrix(), hc = h.coupling_part.matrix();
  const double end = p.duration();
  auto rhs = [&](double s, const Vec& y, Vec& dy) {
    const double lam = lambda_at(end - s, p) * h.norm_factor;
    dy.noalias() = h0 * y;
    dy.noalias() += lam * (hc * y);
    dy *= cplx(0.0, 1.0);
  };
  Vec psi = fwd.final_state().amplitudes();
  double s = 0.0;
  with_stepper<Vec>(integ.pair, rhs, integ.step_control(), [&](auto& st) {
    st.advance(s, psi, end - p.apex_time());
    st.advance(s, psi, end);
  });
  CHECK((psi - init.amplitudes()).norm() < 10 * integ.rel_tol);
}

TEST_CASE("Lindblad evolution keeps a valid density operator") {
  const auto b = build_basis(3, 15);
  const ModelParams params{1.0, 1.0, 3, 1.0};
  const PulseProtocol p{0.3, 1.0};
  const auto init = thermal_initial(b, 0.2, spin_ket(b, HalfInt::from_twice(-3)));
  const auto traj = evolve_lindblad(init, params, p, {0.02, 0.2}, IntegratorConfig::lindblad_default(),
                                    uniform_samples(p, 12));
  for (const auto& rho : traj.states) {
    CHECK(std::abs(rho.trace() - 1.0) < 1e-7);
    CHECK(max_abs(rho.matrix() - rho.matrix().adjoint()) < 1e-9);
    CHECK(rho.min_eigenvalue() >= -1e-6);
  }
  IntegratorConfig oracle;
  oracle.scheme = Scheme::fixed_step_expm_oracle;
  CHECK_THROWS_AS(evolve_lindblad(init, params, p, {}, oracle, {0.0}), ConfigError);
  CHECK_THROWS_AS(evolve_lindblad(init, params, p, {-0.1, 0.0}, IntegratorConfig::lindblad_default(), {0.0}),
                  ConfigError);
}

TEST_CASE("damped cavity occupation decays as exp(-2 kappa t)") {
  const auto b = build_basis(1, 6);
  const double kappa = 0.1;
  const LindbladGenerator gen({1.0, 1.0, 1, 0.0}, {1.0, 0.0}, {kappa, 0.0}, b);
  Mat rho = DensityOp::projector(basis_state(b, HalfInt::from_twice(-1), 1)).matrix();
  const SparseMat num = op_matrix(OpKind::number, b).matrix();
  auto rhs = [&gen](double t, const Mat& y, Mat& dy) { gen(t, y, dy); };
  double t = 0.0;
  with_stepper<Mat>(RkPair::dopri5, rhs, IntegratorConfig::lindblad_default().step_control(), [&](auto& s) {
    for (double stop : {1.0, 2.5, 5.0, 10.0}) {
      s.advance(t, rho, stop);
      CHECK((num * rho).trace().real() == doctest::Approx(std::exp(-2 * kappa * stop)).epsilon(1e-6));
    }
  });
}

TEST_CASE("undamped Lindblad evolution matches the ket") {
  const auto b = build_basis(2, 12);
  const ModelParams params{1.0, 1.0, 2, 1.0};
  const PulseProtocol p{0.5, 1.0};
  const auto init = basis_state(b, HalfInt::from_int(-1), 0);
  const auto samples = uniform_samples(p, 9);
  const auto pure = evolve_pure(init, params, p, IntegratorConfig::pure_default(), samples);
  IntegratorConfig tight = IntegratorConfig::lindblad_default();
  tight.rel_tol = 1e-9;
  tight.abs_tol = 1e-11;
  const auto mixed = evolve_lindblad(DensityOp::projector(init), params, p, {}, tight, samples);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto proj = DensityOp::projector(pure.states[k]);
    CHECK(max_abs(mixed.states[k].matrix() - proj.matrix()) < 1e-6);
    CHECK(std::abs(negativity(mixed.states[k]) - negativity(proj)) < 1e-6);
  }
}

TEST_CASE("trace distance contracts under damping") {
  const auto b = build_basis(2, 10);
  const ModelParams params{1.0, 1.0, 2, 1.0};
  const PulseProtocol p{0.4, 1.0};
  const LindbladParams lind{0.05, 0.1};
  const auto samples = uniform_samples(p, 15);
  const auto r1 = evolve_lindblad(DensityOp::projector(basis_state(b, HalfInt::from_int(-1), 0)), params, p, lind,
                                  IntegratorConfig::lindblad_default(), samples);
  const auto r2 = evolve_lindblad(DensityOp::projector(basis_state(b, HalfInt::from_int(1), 2)), params, p, lind,
                                  IntegratorConfig::lindblad_default(), samples);
  double prev = 2.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double d = trace_distance(r1.states[k].matrix(), r2.states[k].matrix());
    CHECK(d <= prev + 1e-6);
    prev = d;
  }
}

TEST_CASE("weak damping lowers but does not destroy negativity") {
  PulseSetup setup;
  setup.model = {1.0, 1.0, 5, 1.0};
  setup.fock_cutoff = 25;
  setup.initial = InitialStateSpec::named("GS");
  setup.samples = 20;
  setup.track_negativity = true;
  const auto closed = simulate_pulse(setup, 0.15);
  setup.lindblad = {0.01, 0.0};
  const auto damped = simulate_pulse(setup, 0.15);
  const double n0 = closed.entanglement.back().negativity;
  const double n1 = damped.entanglement.back().negativity;
  CHECK(n1 < n0);
  CHECK(n1 > 0.0);
}

TEST_CASE("thermal initial state") {
  const auto b = build_basis(1, 60);
  const auto spin = spin_ket(b, HalfInt::from_twice(-1));
  const auto vac = partial_trace(thermal_initial(b, 0.0, spin), Subsystem::field).matrix();
  CHECK(vac(0, 0) == cplx(1.0));
  CHECK(max_abs(vac) == 1.0);

  const auto one = partial_trace(thermal_initial(b, 1.0, spin), Subsystem::field).matrix();
  CHECK(one(1, 1).real() / one(0, 0).real() == doctest::Approx(0.5));

  // Oracle: sum n r^n / sum r^n directly.
  const double r = 0.5 / 1.5;
  double num = 0.0, den = 0.0;
  for (int n = 0; n <= 60; ++n) {
    num += n * std::pow(r, n);
    den += std::pow(r, n);
  }
  const auto half = thermal_initial(b, 0.5, spin);
  const double mean = (op_matrix(OpKind::number, b).dense() * half.matrix()).trace().real();
  CHECK(std::abs(mean - num / den) < 1e-12);
  CHECK(std::abs(mean - 0.5) < 1e-6);

  CHECK_THROWS_AS(thermal_initial(build_basis(1, 10), 5.0, spin), ConfigError);
  CHECK_THROWS_AS(thermal_initial(b, -1.0, spin), ConfigError);
}

TEST_CASE("sample times are validated") {
  const auto b = build_basis(1, 4);
  const auto init = basis_state(b, HalfInt::from_twice(-1), 0);
  const PulseProtocol p{1.0, 1.0};
  CHECK_THROWS_AS(evolve_pure(init, {1, 1, 1, 1}, p, {}, {0.0, 3.0}), ConfigError);
  CHECK_THROWS_AS(evolve_pure(init, {1, 1, 1, 1}, p, {}, {1.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(evolve_pure(init, {1, 1, 1, 1}, p, {}, {}), ConfigError);
  CHECK_THROWS_AS(uniform_samples(p, 1), ConfigError);
}
