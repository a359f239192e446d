#include "vibronic/hilbert.hpp"

#include "vibronic/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace vibronic {

namespace {

int parse_int(std::string_view text) {
  int value = 0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("not an integer: '" + std::string(text) + "'");
  return value;
}

}  // namespace

HalfInt HalfInt::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw ConfigError("empty half-integer");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    if (parse_int(text.substr(slash + 1)) != 2)
      throw ConfigError("half-integer denominator must be 2: '" + std::string(text) + "'");
    return from_twice(parse_int(text.substr(0, slash)));
  }
  if (text.find('.') != std::string_view::npos) {
    double v = std::stod(std::string(text));
    double twice = 2.0 * v;
    if (std::abs(twice - std::round(twice)) > 1e-12)
      throw ConfigError("not a half-integer: '" + std::string(text) + "'");
    return from_twice(static_cast<int>(std::lround(twice)));
  }
  return from_int(parse_int(text));
}

std::string HalfInt::str() const {
  if (is_integer()) return std::to_string(twice_ / 2);
  return std::to_string(twice_) + "/2";
}

bool BasisSpec::contains(HalfInt m) const {
  const int jt = j.twice();
  return m.twice() >= -jt && m.twice() <= jt && (m.twice() + jt) % 2 == 0;
}

int BasisSpec::index(HalfInt m, int n) const {
  if (!contains(m))
    throw ConfigError("spin projection " + m.str() + " outside J = " + j.str());
  if (n < 0 || n > fock_cutoff)
    throw ConfigError("Fock level " + std::to_string(n) + " outside [0, " +
                      std::to_string(fock_cutoff) + "]");
  const int s = (m.twice() + j.twice()) / 2;
  return s * fock_dim() + n;
}

std::pair<HalfInt, int> BasisSpec::label(int flat_index) const {
  if (flat_index < 0 || flat_index >= dim()) throw ConfigError("flat index out of range");
  const int s = flat_index / fock_dim();
  return {HalfInt::from_twice(2 * s - j.twice()), flat_index % fock_dim()};
}

std::vector<HalfInt> BasisSpec::projections() const {
  std::vector<HalfInt> out;
  out.reserve(spin_dim());
  for (int s = 0; s < spin_dim(); ++s) out.push_back(HalfInt::from_twice(2 * s - j.twice()));
  return out;
}

BasisSpec build_basis(int n_spins, int fock_cutoff) {
  if (n_spins < 1) throw ConfigError("n_spins must be >= 1");
  if (fock_cutoff < 0) throw ConfigError("fock_cutoff must be >= 0");
  return BasisSpec{n_spins, HalfInt::from_twice(n_spins), fock_cutoff};
}

BasisSpec basis_of(Bipartition dims) {
  if (dims.spin_dim < 2 || dims.field_dim < 1)
    throw ConfigError("bipartition does not describe a full spin x field basis");
  return build_basis(dims.spin_dim - 1, dims.field_dim - 1);
}

// ---------------------------------------------------------------------------

SparseOperator::SparseOperator(int dim, std::vector<Entry> entries, bool hermitian)
    : dim_(dim), hermitian_(hermitian) {
  if (dim < 0) throw ConfigError("negative operator dimension");
  for (const auto& e : entries)
    if (e.row < 0 || e.row >= dim || e.col < 0 || e.col >= dim)
      throw ConfigError("operator entry outside dimension");
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().row == e.row && entries_.back().col == e.col)
      entries_.back().value += e.value;
    else
      entries_.push_back(e);
  }
  std::erase_if(entries_, [](const Entry& e) { return e.value == cplx(0.0, 0.0); });

  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(entries_.size());
  for (const auto& e : entries_) triplets.emplace_back(e.row, e.col, e.value);
  csr_.resize(dim, dim);
  csr_.setFromTriplets(triplets.begin(), triplets.end());
  csr_.makeCompressed();
}

Mat SparseOperator::dense() const { return Mat(csr_); }

SparseOperator SparseOperator::adjoint() const {
  std::vector<Entry> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.col, e.row, std::conj(e.value)});
  return {dim_, std::move(out), hermitian_};
}

double SparseOperator::hermiticity_defect() const {
  SparseMat diff = csr_ - SparseMat(csr_.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMat::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

namespace {

SparseOperator from_eigen(const SparseMat& m, bool hermitian) {
  std::vector<SparseOperator::Entry> entries;
  entries.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMat::InnerIterator it(m, k); it; ++it)
      entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  return {static_cast<int>(m.rows()), std::move(entries), hermitian};
}

void require_same_dim(const SparseOperator& a, const SparseOperator& b) {
  if (a.dim() != b.dim()) throw ConfigError("operator dimension mismatch");
}

}  // namespace

SparseOperator SparseOperator::operator*(const SparseOperator& rhs) const {
  require_same_dim(*this, rhs);
  SparseMat prod = csr_ * rhs.csr_;
  return from_eigen(prod, false);
}

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
  require_same_dim(a, b);
  std::vector<SparseOperator::Entry> all = a.entries_;
  all.insert(all.end(), b.entries_.begin(), b.entries_.end());
  return {a.dim_, std::move(all), a.hermitian_ && b.hermitian_};
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
  return a + (-1.0) * b;
}

SparseOperator operator*(double s, const SparseOperator& a) {
  std::vector<SparseOperator::Entry> out = a.entries_;
  for (auto& e : out) e.value *= s;
  return {a.dim_, std::move(out), a.hermitian_};
}

// ---------------------------------------------------------------------------

OpKind parse_op_kind(std::string_view name) {
  static constexpr std::pair<std::string_view, OpKind> table[] = {
      {"annihilate", OpKind::annihilate}, {"create", OpKind::create},
      {"number", OpKind::number},         {"jz", OpKind::jz},
      {"jplus", OpKind::jplus},           {"jminus", OpKind::jminus},
      {"jx", OpKind::jx},                 {"parity", OpKind::parity},
      {"identity", OpKind::identity},
  };
  for (const auto& [key, kind] : table)
    if (key == name) return kind;
  throw ConfigError("unknown operator kind '" + std::string(name) + "'");
}

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::annihilate: return "annihilate";
    case OpKind::create: return "create";
    case OpKind::number: return "number";
    case OpKind::jz: return "jz";
    case OpKind::jplus: return "jplus";
    case OpKind::jminus: return "jminus";
    case OpKind::jx: return "jx";
    case OpKind::parity: return "parity";
    case OpKind::identity: return "identity";
  }
  return "?";
}

namespace {

// sqrt(J(J+1) - M(M+1)) in twice-units: (1/2) sqrt(jt(jt+2) - mt(mt+2)).
double raising_coefficient(int jt, int mt) {
  return 0.5 * std::sqrt(static_cast<double>(jt * (jt + 2) - mt * (mt + 2)));
}

}  // namespace

SparseOperator op_matrix(OpKind kind, const BasisSpec& basis) {
  using Entry = SparseOperator::Entry;
  std::vector<Entry> entries;
  const int fd = basis.fock_dim();
  const int jt = basis.j.twice();
  const auto ms = basis.projections();
  bool hermitian = true;

  for (int s = 0; s < basis.spin_dim(); ++s) {
    const int mt = ms[s].twice();
    for (int n = 0; n < fd; ++n) {
      const int row = s * fd + n;
      switch (kind) {
        case OpKind::annihilate:
          hermitian = false;
          if (n + 1 < fd) entries.push_back({row, row + 1, std::sqrt(static_cast<double>(n + 1))});
          break;
        case OpKind::create:
          hermitian = false;
          if (n >= 1) entries.push_back({row, row - 1, std::sqrt(static_cast<double>(n))});
          break;
        case OpKind::number:
          entries.push_back({row, row, static_cast<double>(n)});
          break;
        case OpKind::jz:
          entries.push_back({row, row, 0.5 * mt});
          break;
        case OpKind::jplus:
          hermitian = false;
          // <M+1| J+ |M>: row is M+1, column is M.
          if (s >= 1) entries.push_back({row, row - fd, raising_coefficient(jt, mt - 2)});
          break;
        case OpKind::jminus:
          hermitian = false;
          if (s + 1 < basis.spin_dim()) entries.push_back({row, row + fd, raising_coefficient(jt, mt)});
          break;
        case OpKind::jx:
          if (s >= 1) entries.push_back({row, row - fd, 0.5 * raising_coefficient(jt, mt - 2)});
          if (s + 1 < basis.spin_dim()) entries.push_back({row, row + fd, 0.5 * raising_coefficient(jt, mt)});
          break;
        case OpKind::parity:
          // exp(i pi (n + M + J)); M + J = s is an integer.
          entries.push_back({row, row, ((n + s) % 2 == 0) ? 1.0 : -1.0});
          break;
        case OpKind::identity:
          entries.push_back({row, row, 1.0});
          break;
      }
    }
  }
  return {basis.dim(), std::move(entries), hermitian};
}

// ---------------------------------------------------------------------------

PureState::PureState(Bipartition dims, Vec amplitudes, double norm_tol)
    : dims_(dims), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != dims_.dim()) throw ConfigError("state length does not match basis dimension");
  const double norm = amplitudes_.norm();
  if (!(std::abs(norm - 1.0) <= norm_tol))
    throw ConfigError("state is not normalized (norm = " + std::to_string(norm) + ")");
}

DensityOp::DensityOp(Bipartition dims, Mat matrix, double trace_tol)
    : dims_(dims), matrix_(std::move(matrix)) {
  if (matrix_.rows() != dims_.dim() || matrix_.cols() != dims_.dim())
    throw ConfigError("density matrix shape does not match basis dimension");
  const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTolerance)
    throw ConfigError("density matrix is not Hermitian (defect " + std::to_string(herm) + ")");
  const cplx tr = matrix_.trace();
  if (!(std::abs(tr - cplx(1.0, 0.0)) <= trace_tol))
    throw ConfigError("density matrix trace differs from 1 (" + std::to_string(tr.real()) + ")");
}

DensityOp DensityOp::projector(const PureState& psi) {
  return {psi.dims(), psi.amplitudes() * psi.amplitudes().adjoint(),
          2.0 * PureState::kNormTolerance + kTraceTolerance};
}

double DensityOp::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat> solver(matrix_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

PureState basis_state(const BasisSpec& basis, HalfInt m, int n) {
  Vec amps = Vec::Zero(basis.dim());
  amps(basis.index(m, n)) = 1.0;
  return {basis.bipartition(), std::move(amps)};
}

PureState tensor(const Vec& spin, const Vec& field) {
  Vec out(spin.size() * field.size());
  for (Eigen::Index s = 0; s < spin.size(); ++s) out.segment(s * field.size(), field.size()) = spin(s) * field;
  return {{static_cast<int>(spin.size()), static_cast<int>(field.size())}, std::move(out)};
}

DensityOp tensor(const DensityOp& spin, const DensityOp& field) {
  if (spin.dims().field_dim != 1 || field.dims().spin_dim != 1)
    throw ConfigError("tensor expects a spin-only and a field-only operator");
  const int sd = spin.dims().spin_dim;
  const int fd = field.dims().field_dim;
  Mat out(sd * fd, sd * fd);
  for (int s = 0; s < sd; ++s)
    for (int t = 0; t < sd; ++t) out.block(s * fd, t * fd, fd, fd) = spin.matrix()(s, t) * field.matrix();
  return {{sd, fd}, std::move(out)};
}

DensityOp partial_trace(const DensityOp& rho, Subsystem keep) {
  const int sd = rho.dims().spin_dim;
  const int fd = rho.dims().field_dim;
  const Mat& m = rho.matrix();
  if (keep == Subsystem::field) {
    Mat out = Mat::Zero(fd, fd);
    for (int s = 0; s < sd; ++s) out += m.block(s * fd, s * fd, fd, fd);
    return {{1, fd}, std::move(out)};
  }
  Mat out(sd, sd);
  for (int s = 0; s < sd; ++s)
    for (int t = 0; t < sd; ++t) out(s, t) = m.block(s * fd, t * fd, fd, fd).trace();
  return {{sd, 1}, std::move(out)};
}

DensityOp partial_trace(const PureState& psi, Subsystem keep) {
  const auto a = psi.as_matrix();  // field_dim x spin_dim
  const double tol = 2.0 * PureState::kNormTolerance + DensityOp::kTraceTolerance;
  if (keep == Subsystem::field) {
    Mat out = a * a.adjoint();
    return {{1, psi.dims().field_dim}, 0.5 * (out + out.adjoint()).eval(), tol};
  }
  Mat out = a.transpose() * a.conjugate();
  return {{psi.dims().spin_dim, 1}, 0.5 * (out + out.adjoint()).eval(), tol};
}

}  // namespace vibronic
