#include "vibronic/parametric.hpp"

#include "vibronic/errors.hpp"
#include "vibronic/parallel.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace vibronic {

long ThreeModeParams::dim() const {
  return static_cast<long>(cutoffs[0] + 1) * (cutoffs[1] + 1) * (cutoffs[2] + 1);
}

int ThreeModeParams::index(int na, int nb, int nc) const {
  return (na * (cutoffs[1] + 1) + nb) * (cutoffs[2] + 1) + nc;
}

void ThreeModeParams::validate() const {
  for (int c : cutoffs)
    if (c < 1) throw ConfigError("three-mode cutoffs must be >= 1");
  if (dim() > dim_cap)
    throw ConfigError("three-mode dimension " + std::to_string(dim()) + " exceeds cap " + std::to_string(dim_cap));
}

namespace {

template <class Visit>
void for_each_state(const ThreeModeParams& p, Visit&& visit) {
  for (int na = 0; na <= p.cutoffs[0]; ++na)
    for (int nb = 0; nb <= p.cutoffs[1]; ++nb)
      for (int nc = 0; nc <= p.cutoffs[2]; ++nc) visit(na, nb, nc, p.index(na, nb, nc));
}

}  // namespace

SparseOperator build_three_mode(const ThreeModeParams& params) {
  params.validate();
  std::vector<SparseOperator::Entry> entries;
  const auto [ca, cb, cc] = params.cutoffs;
  for_each_state(params, [&](int na, int nb, int nc, int i) {
    const double diag = params.omega_a * na + params.chi * na * na + params.omega_b * nb + params.omega_c * nc;
    entries.push_back({i, i, diag});
    // g a^dag b^dag c^2 : (na, nb, nc) -> (na + 1, nb + 1, nc - 2), plus its adjoint.
    if (na < ca && nb < cb && nc >= 2) {
      const int j = params.index(na + 1, nb + 1, nc - 2);
      const double amp = params.g * std::sqrt((na + 1.0) * (nb + 1.0) * nc * (nc - 1.0));
      entries.push_back({j, i, amp});
      entries.push_back({i, j, amp});
    }
  });
  (void)cc;
  return {static_cast<int>(params.dim()), std::move(entries), true};
}

SparseOperator total_number(const ThreeModeParams& params) {
  params.validate();
  std::vector<SparseOperator::Entry> entries;
  for_each_state(params, [&](int na, int nb, int nc, int i) {
    entries.push_back({i, i, static_cast<double>(na + nb + nc)});
  });
  return {static_cast<int>(params.dim()), std::move(entries), true};
}

SparseOperator mode_annihilator(const ThreeModeParams& params, ModeName mode) {
  params.validate();
  std::vector<SparseOperator::Entry> entries;
  for_each_state(params, [&](int na, int nb, int nc, int i) {
    switch (mode) {
      case ModeName::a:
        if (na >= 1) entries.push_back({params.index(na - 1, nb, nc), i, std::sqrt(static_cast<double>(na))});
        break;
      case ModeName::b:
        if (nb >= 1) entries.push_back({params.index(na, nb - 1, nc), i, std::sqrt(static_cast<double>(nb))});
        break;
      case ModeName::c:
        if (nc >= 1) entries.push_back({params.index(na, nb, nc - 1), i, std::sqrt(static_cast<double>(nc))});
        break;
    }
  });
  return {static_cast<int>(params.dim()), std::move(entries), false};
}

// ---------------------------------------------------------------------------

PumpPreparation::PumpPreparation(cplx alpha, Smearing kind, std::vector<double> thetas, std::vector<double> weights)
    : alpha_c_(alpha), smearing_(kind), thetas_(std::move(thetas)), weights_(std::move(weights)) {
  if (thetas_.empty() || thetas_.size() != weights_.size())
    throw ConfigError("phase smearing needs matching, non-empty phase and weight lists");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ConfigError("phase smearing weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("phase smearing weights must sum to 1");
}

PumpPreparation PumpPreparation::coherent(cplx alpha_c) { return {alpha_c, Smearing::none, {0.0}, {1.0}}; }

PumpPreparation PumpPreparation::uniform(cplx alpha_c, int phases) {
  if (phases < 1) throw ConfigError("uniform smearing needs at least one phase");
  std::vector<double> thetas(phases), weights(phases, 1.0 / phases);
  for (int j = 0; j < phases; ++j) thetas[j] = 2.0 * std::numbers::pi * j / phases;
  return {alpha_c, Smearing::uniform, std::move(thetas), std::move(weights)};
}

PumpPreparation PumpPreparation::delta(cplx alpha_c, double theta) {
  return {alpha_c, Smearing::custom, {theta}, {1.0}};
}

PumpPreparation PumpPreparation::custom(cplx alpha_c, std::vector<double> thetas, std::vector<double> weights) {
  return {alpha_c, Smearing::custom, std::move(thetas), std::move(weights)};
}

cplx PumpPreparation::fourier_factor(int m) const {
  cplx sum = 0.0;
  for (std::size_t j = 0; j < thetas_.size(); ++j) sum += weights_[j] * std::polar(1.0, -m * thetas_[j]);
  return sum;
}

Vec coherent_pump_state(const ThreeModeParams& params, cplx alpha_c) {
  params.validate();
  const int cc = params.cutoffs[2];
  const double mean = std::norm(alpha_c);
  if (mean + 3.0 * std::sqrt(mean) >= cc)
    throw ConfigError("c cutoff " + std::to_string(cc) + " too small for |alpha_c|^2 = " + std::to_string(mean));
  Vec psi = Vec::Zero(params.dim());
  cplx amp = std::exp(-0.5 * mean);
  for (int n = 0; n <= cc; ++n) {
    psi(params.index(0, 0, n)) = amp;
    amp *= alpha_c / std::sqrt(n + 1.0);
  }
  psi.normalize();
  return psi;
}

cplx mode_moment(const ThreeModeParams& params, const Vec& psi, int k, int l) {
  const SparseMat a = mode_annihilator(params, ModeName::a).matrix();
  Vec left = psi;
  Vec right = psi;
  for (int i = 0; i < k; ++i) left = a * left;
  for (int i = 0; i < l; ++i) right = a * right;
  // <psi| a^dag^k a^l |psi> = (a^k psi)^dagger (a^l psi)
  return left.dot(right);
}

namespace {

// Kets at each requested time, starting from psi0 at t = 0.
std::vector<Vec> propagate(const SparseMat& h, const Vec& psi0, const std::vector<double>& times,
                           const IntegratorConfig& integ) {
  auto rhs = [&h](double, const Vec& y, Vec& dy) {
    dy.noalias() = h * y;
    dy *= cplx(0.0, -1.0);
  };
  std::vector<Vec> out;
  out.reserve(times.size());
  Vec psi = psi0;
  double t = 0.0;
  with_stepper<Vec>(integ.pair, rhs, integ.step_control(), [&](auto& stepper) {
    for (double stop : times) {
      stepper.advance(t, psi, stop);
      out.push_back(psi);
    }
  });
  return out;
}

}  // namespace

std::vector<SmearedMoment> smeared_moments(int k, int l, const PumpPreparation& prep, const std::vector<double>& times,
                                           const ThreeModeParams& params, const IntegratorConfig& integ, int workers) {
  if (k < 0 || l < 0) throw ConfigError("moment orders must be non-negative");
  if (k + l > 4) throw ConfigError("moment order k + l must be <= 4");
  integ.validate();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw ConfigError("evolution times must be >= 0");
    if (i > 0 && !(times[i] > times[i - 1])) throw ConfigError("evolution times must be increasing");
  }
  const SparseMat h = build_three_mode(params).matrix();
  const Vec psi0 = coherent_pump_state(params, prep.alpha_c());
  const SparseOperator number = total_number(params);

  // Factored side: one coherent run.
  const auto coherent_run = propagate(h, psi0, times, integ);

  // Direct side: each phase-rotated pump state e^{i N theta} |Psi> evolved on its own.
  const auto& thetas = prep.thetas();
  const auto members = parallel_map(thetas.size(), workers, [&](std::size_t j) {
    Vec rotated = psi0;
    for (const auto& e : number.entries()) rotated(e.row) *= std::polar(1.0, e.value.real() * thetas[j]);
    const auto run = propagate(h, rotated, times, integ);
    std::vector<cplx> moments;
    moments.reserve(run.size());
    for (const auto& psi : run) moments.push_back(mode_moment(params, psi, k, l));
    return moments;
  });

  const cplx factor = prep.fourier_factor(k - l);
  std::vector<SmearedMoment> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    SmearedMoment m;
    m.k = k;
    m.l = l;
    m.time = times[i];
    for (std::size_t j = 0; j < thetas.size(); ++j) m.direct += prep.weights()[j] * members[j][i];
    m.factored = mode_moment(params, coherent_run[i], k, l) * factor;
    m.difference = std::abs(m.direct - m.factored);
    out.push_back(m);
  }
  return out;
}

SmearedMoment smeared_moment(int k, int l, const PumpPreparation& prep, double evolve_to, const ThreeModeParams& params) {
  return smeared_moments(k, l, prep, {evolve_to}, params).front();
}

}  // namespace vibronic
