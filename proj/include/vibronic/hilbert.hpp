// hilbert.hpp - truncated spin(J = N/2) x Fock space, sparse operators,
// pure/mixed states and the spin|field bipartition.
//
// Flat index layout: index = (M + J) * (n_max + 1) + n, so every spin
// projection owns a contiguous block of Fock levels.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <compare>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vibronic {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using SparseMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// Half-integer stored as its exact double 2m.
class HalfInt {
 public:
  constexpr HalfInt() = default;
  static constexpr HalfInt from_twice(int twice) { return HalfInt(twice); }
  static constexpr HalfInt from_int(int value) { return HalfInt(2 * value); }
  // Accepts "3/2", "-1/2", "2", "0.5", "-1.5".
  static HalfInt parse(std::string_view text);

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }
  std::string str() const;

  constexpr HalfInt operator-() const { return HalfInt(-twice_); }
  constexpr HalfInt operator+(HalfInt o) const { return HalfInt(twice_ + o.twice_); }
  constexpr HalfInt operator-(HalfInt o) const { return HalfInt(twice_ - o.twice_); }
  constexpr auto operator<=>(const HalfInt&) const = default;

 private:
  constexpr explicit HalfInt(int twice) : twice_(twice) {}
  int twice_ = 0;
};

// Dimensions of the two tensor factors a state or operator lives on.
// Reduced states use a unit dimension for the traced-out factor.
struct Bipartition {
  int spin_dim = 1;
  int field_dim = 1;
  int dim() const { return spin_dim * field_dim; }
  auto operator<=>(const Bipartition&) const = default;
};

struct BasisSpec {
  int n_spins = 1;
  HalfInt j = HalfInt::from_twice(1);
  int fock_cutoff = 0;

  int spin_dim() const { return n_spins + 1; }
  int fock_dim() const { return fock_cutoff + 1; }
  int dim() const { return spin_dim() * fock_dim(); }
  Bipartition bipartition() const { return {spin_dim(), fock_dim()}; }

  bool contains(HalfInt m) const;
  int index(HalfInt m, int n) const;
  std::pair<HalfInt, int> label(int flat_index) const;
  // Spin projections -J..J in index order.
  std::vector<HalfInt> projections() const;

  bool operator==(const BasisSpec&) const = default;
};

BasisSpec build_basis(int n_spins, int fock_cutoff);
// Inverse of BasisSpec::bipartition for full (spin_dim >= 2) layouts.
BasisSpec basis_of(Bipartition dims);

// Immutable coordinate-list operator. Entries are kept sorted by
// (row, col), duplicates are summed and exact zeros are dropped.
class SparseOperator {
 public:
  struct Entry {
    int row = 0;
    int col = 0;
    cplx value;
  };

  SparseOperator() = default;
  SparseOperator(int dim, std::vector<Entry> entries, bool hermitian);

  int dim() const { return dim_; }
  bool hermitian() const { return hermitian_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const SparseMat& matrix() const { return csr_; }

  Mat dense() const;
  Vec apply(const Vec& v) const { return csr_ * v; }
  SparseOperator adjoint() const;
  // max |A - A^dagger| over all elements.
  double hermiticity_defect() const;

  SparseOperator operator*(const SparseOperator& rhs) const;
  friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator*(double s, const SparseOperator& a);

 private:
  int dim_ = 0;
  bool hermitian_ = false;
  std::vector<Entry> entries_;
  SparseMat csr_;
};

enum class OpKind { annihilate, create, number, jz, jplus, jminus, jx, parity, identity };

OpKind parse_op_kind(std::string_view name);
std::string_view to_string(OpKind kind);

SparseOperator op_matrix(OpKind kind, const BasisSpec& basis);

enum class Subsystem { spin, field };

class PureState {
 public:
  static constexpr double kNormTolerance = 1e-9;

  // Throws ConfigError if the norm deviates from 1 by more than norm_tol.
  PureState(Bipartition dims, Vec amplitudes, double norm_tol = kNormTolerance);

  const Bipartition& dims() const { return dims_; }
  const Vec& amplitudes() const { return amplitudes_; }
  int dim() const { return dims_.dim(); }

  // A(n, s) = psi[s * field_dim + n]; column s is the field block of spin level s.
  Eigen::Map<const Mat> as_matrix() const {
    return {amplitudes_.data(), dims_.field_dim, dims_.spin_dim};
  }

 private:
  Bipartition dims_;
  Vec amplitudes_;
};

class DensityOp {
 public:
  static constexpr double kHermitianTolerance = 1e-10;
  static constexpr double kTraceTolerance = 1e-8;
  static constexpr double kPositivityTolerance = 1e-7;

  // Checks shape, Hermiticity and unit trace. Positivity needs an
  // eigendecomposition and is checked by min_eigenvalue() on demand.
  DensityOp(Bipartition dims, Mat matrix, double trace_tol = kTraceTolerance);
  static DensityOp projector(const PureState& psi);

  const Bipartition& dims() const { return dims_; }
  const Mat& matrix() const { return matrix_; }
  int dim() const { return dims_.dim(); }
  cplx trace() const { return matrix_.trace(); }
  double min_eigenvalue() const;

 private:
  Bipartition dims_;
  Mat matrix_;
};

PureState basis_state(const BasisSpec& basis, HalfInt m, int n);
PureState tensor(const Vec& spin, const Vec& field);
DensityOp tensor(const DensityOp& spin, const DensityOp& field);

// Reduced density operator of the kept factor.
DensityOp partial_trace(const DensityOp& rho, Subsystem keep);
DensityOp partial_trace(const PureState& psi, Subsystem keep);

}  // namespace vibronic
