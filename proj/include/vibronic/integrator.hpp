// integrator.hpp - embedded explicit Runge-Kutta steppers for dense Eigen
// states (vectors for kets, matrices for density operators), and the
// exponential-midpoint stepper used as a verification oracle.
//
// Two pairs share one driver: Dormand-Prince 5(4) and Dormand-Prince
// 8(5,3) (Hairer's DOP853). Both are first-same-as-last.

#pragma once

#include "vibronic/errors.hpp"
#include "vibronic/hilbert.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace vibronic {

enum class RkPair { dopri5, dop853 };

struct StepControl {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 1.0;
  double min_step = 1e-12;
  long max_steps = 20'000'000;
};

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
};

struct Dopri5Tableau {
  static constexpr int stages = 6;  // plus the FSAL evaluation at the new point
  static constexpr double exponent = -1.0 / 5.0;
  static constexpr std::array<double, stages> c{0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0};
  static constexpr std::array<std::array<double, stages>, stages> a{{
      {},
      {1.0 / 5.0},
      {3.0 / 40.0, 9.0 / 40.0},
      {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0},
      {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0},
      {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0},
  }};
  static constexpr std::array<double, stages> b{35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                                                -2187.0 / 6784.0, 11.0 / 84.0};
  // Difference of the 5th and embedded 4th order weights; the last entry
  // multiplies the FSAL stage.
  static constexpr std::array<double, stages + 1> e{71.0 / 57600.0,     0.0,           -71.0 / 16695.0,
                                                    71.0 / 1920.0,      -17253.0 / 339200.0,
                                                    22.0 / 525.0,       -1.0 / 40.0};
};

struct Dop853Tableau {
  static constexpr int stages = 12;
  static constexpr double exponent = -1.0 / 8.0;
  static constexpr std::array<double, stages> c{
      0.0,
      0.526001519587677318785587544488e-01,
      0.789002279381515978178381316732e-01,
      0.118350341907227396726757197510,
      0.281649658092772603273242802490,
      0.333333333333333333333333333333,
      0.25,
      0.307692307692307692307692307692,
      0.651282051282051282051282051282,
      0.6,
      0.857142857142857142857142857142,
      1.0};
  static constexpr std::array<std::array<double, stages>, stages> a{{
      {},
      {5.26001519587677318785587544488e-2},
      {1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2},
      {2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2},
      {2.41365134159266685502369798665e-1, 0.0, -8.84549479328286085344864962717e-1,
       9.24834003261792003115737966543e-1},
      {3.7037037037037037037037037037e-2, 0.0, 0.0, 1.70828608729473871279604482173e-1,
       1.25467687566822425016691814123e-1},
      {3.7109375e-2, 0.0, 0.0, 1.70252211019544039314978060272e-1, 6.02165389804559606850219397283e-2,
       -1.7578125e-2},
      {3.70920001185047927108779319836e-2, 0.0, 0.0, 1.70383925712239993810214054705e-1,
       1.07262030446373284651809199168e-1, -1.53194377486244017527936158236e-2,
       8.27378916381402288758473766002e-3},
      {6.24110958716075717114429577812e-1, 0.0, 0.0, -3.36089262944694129406857109825,
       -8.68219346841726006818189891453e-1, 2.75920996994467083049415600797e1,
       2.01540675504778934086186788979e1, -4.34898841810699588477366255144e1},
      {4.77662536438264365890433908527e-1, 0.0, 0.0, -2.48811461997166764192642586468,
       -5.90290826836842996371446475743e-1, 2.12300514481811942347288949897e1,
       1.52792336328824235832596922938e1, -3.32882109689848629194453265587e1,
       -2.03312017085086261358222928593e-2},
      {-9.3714243008598732571704021658e-1, 0.0, 0.0, 5.18637242884406370830023853209,
       1.09143734899672957818500254654, -8.14978701074692612513997267357,
       -1.85200656599969598641566180701e1, 2.27394870993505042818970056734e1,
       2.49360555267965238987089396762, -3.0467644718982195003823669022},
      {2.27331014751653820792359768449, 0.0, 0.0, -1.05344954667372501984066689879e1,
       -2.00087205822486249909675718444, -1.79589318631187989172765950534e1,
       2.79488845294199600508499808837e1, -2.85899827713502369474065508674,
       -8.87285693353062954433549289258, 1.23605671757943030647266201528e1,
       6.43392746015763530355970484046e-1},
  }};
  static constexpr std::array<double, stages> b{
      5.42937341165687622380535766363e-2, 0.0, 0.0, 0.0, 0.0, 4.45031289275240888144113950566,
      1.89151789931450038304281599044, -5.8012039600105847814672114227, 3.1116436695781989440891606237e-1,
      -1.52160949662516078556178806805e-1, 2.01365400804030348374776537501e-1,
      4.47106157277725905176885569043e-2};
  // 5th and 3rd order error estimators, combined as in DOP853.
  static constexpr std::array<double, stages> e5{
      0.1312004499419488073250102996e-1, 0.0, 0.0, 0.0, 0.0, -0.1225156446376204440720569753e+1,
      -0.4957589496572501915214079952, 0.1664377182454986536961530415e+1, -0.3503288487499736816886487290,
      0.3341791187130174790297318841, 0.8192320648511571246570742613e-1, -0.2235530786388629525884427845e-1};
  static constexpr std::array<double, stages> e3{
      5.42937341165687622380535766363e-2 - 0.244094488188976377952755905512, 0.0, 0.0, 0.0, 0.0,
      4.45031289275240888144113950566, 1.89151789931450038304281599044, -5.8012039600105847814672114227,
      3.1116436695781989440891606237e-1 - 0.733846688281611857341361741547, -1.52160949662516078556178806805e-1,
      2.01365400804030348374776537501e-1, 4.47106157277725905176885569043e-2 - 0.220588235294117647058823529412e-1};
};

// Rhs is callable as rhs(double t, const State& y, State& dydt).
template <class State, class Rhs, class Tableau>
class EmbeddedRk {
 public:
  EmbeddedRk(Rhs rhs, StepControl control) : rhs_(std::move(rhs)), ctl_(control) {
    if (!(ctl_.rel_tol > 0.0) || !(ctl_.abs_tol > 0.0) || !(ctl_.max_step > 0.0))
      throw ConfigError("integrator tolerances and max_step must be > 0");
  }

  // Advances (t, y) to t_end; the final step is clipped to land on t_end.
  void advance(double& t, State& y, double t_end) {
    if (t_end <= t) return;
    if (h_ <= 0.0) h_ = std::min(ctl_.max_step, 1e-2 * std::max(1.0, t_end - t));
    eval(t, y, k_[0]);
    while (t < t_end) {
      if (stats_.accepted + stats_.rejected >= ctl_.max_steps)
        throw IntegratorError("step budget exhausted at t = " + std::to_string(t));
      double h = std::min({h_, ctl_.max_step, t_end - t});
      const bool last = (t + h >= t_end) || (t_end - (t + h) < 1e-14 * std::max(1.0, std::abs(t_end)));
      if (last) h = t_end - t;

      attempt(t, y, h);
      const double err = error_norm(y, h);
      if (err <= 1.0) {
        t = last ? t_end : t + h;
        y.swap(y_new_);
        k_[0].swap(k_[Tableau::stages]);  // first-same-as-last
        ++stats_.accepted;
        const double grow = err == 0.0 ? kMaxGrow : std::min(kMaxGrow, kSafety * std::pow(err, Tableau::exponent));
        if (!last || h >= h_) h_ = h * std::max(1.0, grow);
      } else {
        ++stats_.rejected;
        h_ = h * std::max(kMinShrink, kSafety * std::pow(err, Tableau::exponent));
        if (h_ < ctl_.min_step)
          throw IntegratorError("step size underflow at t = " + std::to_string(t) +
                                " (h = " + std::to_string(h_) + ")");
      }
    }
  }

  const StepStats& stats() const { return stats_; }

 private:
  static constexpr double kSafety = 0.9;
  static constexpr double kMaxGrow = 5.0;
  static constexpr double kMinShrink = 0.2;
  static constexpr int S = Tableau::stages;

  void eval(double t, const State& y, State& out) {
    rhs_(t, y, out);
    ++stats_.rhs_evaluations;
  }

  void attempt(double t, const State& y, double h) {
    for (int i = 1; i < S; ++i) {
      tmp_ = y;
      for (int j = 0; j < i; ++j)
        if (Tableau::a[i][j] != 0.0) tmp_ += (h * Tableau::a[i][j]) * k_[j];
      eval(t + Tableau::c[i] * h, tmp_, k_[i]);
    }
    y_new_ = y;
    for (int j = 0; j < S; ++j)
      if (Tableau::b[j] != 0.0) y_new_ += (h * Tableau::b[j]) * k_[j];
    eval(t + h, y_new_, k_[S]);
  }

  // Accumulates sum_j w[j] k_[j] into err_.
  template <std::size_t W>
  void combine(const std::array<double, W>& w) {
    err_.setZero(k_[0].rows(), k_[0].cols());
    for (std::size_t j = 0; j < W; ++j)
      if (w[j] != 0.0) err_ += w[j] * k_[j];
  }

  double error_norm(const State& y, double h) {
    const auto scale = (ctl_.abs_tol + ctl_.rel_tol * y.cwiseAbs().cwiseMax(y_new_.cwiseAbs()).array()).eval();
    const double n = static_cast<double>(y.size());
    if constexpr (requires { Tableau::e5; }) {
      combine(Tableau::e5);
      const double s5 = (err_.cwiseAbs().array() / scale).square().sum();
      combine(Tableau::e3);
      const double s3 = (err_.cwiseAbs().array() / scale).square().sum();
      if (s5 == 0.0 && s3 == 0.0) return 0.0;
      return std::abs(h) * s5 / std::sqrt((s5 + 0.01 * s3) * n);
    } else {
      combine(Tableau::e);
      const double sq = (err_.cwiseAbs().array() / scale).square().sum();
      return std::abs(h) * std::sqrt(sq / n);
    }
  }

  Rhs rhs_;
  StepControl ctl_;
  StepStats stats_;
  double h_ = 0.0;
  std::array<State, S + 1> k_;
  State tmp_, y_new_, err_;
};

template <class State, class Rhs>
using DormandPrince = EmbeddedRk<State, Rhs, Dopri5Tableau>;
template <class State, class Rhs>
using Dop853 = EmbeddedRk<State, Rhs, Dop853Tableau>;

template <class State, class Rhs>
DormandPrince<State, Rhs> make_dormand_prince(Rhs rhs, StepControl control) {
  return DormandPrince<State, Rhs>(std::move(rhs), control);
}

template <class State, class Rhs>
Dop853<State, Rhs> make_dop853(Rhs rhs, StepControl control) {
  return Dop853<State, Rhs>(std::move(rhs), control);
}

// Builds the requested stepper, hands it to fn(stepper) and returns its stats.
template <class State, class Rhs, class Fn>
StepStats with_stepper(RkPair pair, Rhs rhs, StepControl control, Fn&& fn) {
  if (pair == RkPair::dop853) {
    auto stepper = make_dop853<State>(std::move(rhs), control);
    fn(stepper);
    return stepper.stats();
  }
  auto stepper = make_dormand_prince<State>(std::move(rhs), control);
  fn(stepper);
  return stepper.stats();
}

// exp(-i H dt) v summed as a power series; dt is split so that each piece
// has ||H dt||_1 <= 1.
Vec expm_action(const SparseMat& h, double dt, const Vec& v);

}  // namespace vibronic
