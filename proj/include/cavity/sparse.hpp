#pragma once

#include <Eigen/SparseCore>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cavity/linalg.hpp"

namespace cavity {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Symmetric sparse operator in compressed-row layout. Both triangles are stored, columns are
/// sorted within each row.
class SparseSymOp {
 public:
  SparseSymOp() = default;
  explicit SparseSymOp(SparseRowMatrix m);

  /// Sums duplicates in input order, so the result only depends on the triplet sequence.
  static SparseSymOp from_triplets(int n, const std::vector<Triplet>& triplets);
  static SparseSymOp identity(int n);
  static SparseSymOp diagonal(const VecX& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  long long nnz() const { return m_.nonZeros(); }

  std::span<const int> row_offsets() const { return {m_.outerIndexPtr(), static_cast<std::size_t>(dim() + 1)}; }
  std::span<const int> col_indices() const { return {m_.innerIndexPtr(), static_cast<std::size_t>(nnz())}; }
  std::span<const double> values() const { return {m_.valuePtr(), static_cast<std::size_t>(nnz())}; }
  const SparseRowMatrix& matrix() const { return m_; }

  double coeff(int i, int j) const { return m_.coeff(i, j); }
  VecX multiply(const VecX& x) const { return m_ * x; }
  VecX operator*(const VecX& x) const { return m_ * x; }
  double quad(const VecX& x) const { return x.dot(m_ * x); }

  /// a * this + b * other.
  SparseSymOp combine(double a, const SparseSymOp& other, double b) const;
  /// T^T this T for a (possibly rectangular) sparse T.
  SparseSymOp congruence(const SparseRowMatrix& T) const;

  double max_abs() const;
  double symmetry_error() const;
  bool structurally_symmetric() const;
  MatX to_dense() const { return MatX(m_); }

  /// Coordinate text dump "row col value" (0-based) with a one-line header.
  void write_coordinate(std::ostream& os) const;
  void write_coordinate(const std::string& path) const;

 private:
  SparseRowMatrix m_;
};

}  // namespace cavity
