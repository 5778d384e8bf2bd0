#pragma once

#include <memory>
#include <vector>

#include "cavity/ordering.hpp"
#include "cavity/sparse.hpp"

namespace cavity {

struct LdltOptions {
  OrderingMethod ordering = OrderingMethod::nested_dissection;
  /// Problems below this dimension are factored densely (pivoted Eigen::LDLT).
  int dense_below = 2000;
  /// A pivot with |d| <= pivot_tol * max|A_ii| raises Errc::factorization_singular.
  double pivot_tol = 1e-13;
};

/// Symmetric LDL^T factorization P A P^T = L D L^T without pivoting (sparse path) using a
/// supernodal multifrontal scheme on a fill-reducing ordering.
class SparseLdlt {
 public:
  SparseLdlt();
  explicit SparseLdlt(const SparseSymOp& A, LdltOptions opts = {});
  ~SparseLdlt();
  SparseLdlt(SparseLdlt&&) noexcept;
  SparseLdlt& operator=(SparseLdlt&&) noexcept;

  /// Ordering and symbolic factorization; depends only on the sparsity pattern.
  void analyze(const SparseSymOp& A);
  /// Numeric factorization. Reuses the symbolic data when the pattern matches the analyzed one.
  void factorize(const SparseSymOp& A);

  VecX solve(const VecX& b) const;
  MatX solve(const MatX& B) const;

  int dim() const;
  bool dense() const;
  /// Count of negative pivots: the number of negative eigenvalues of A (Sylvester's law).
  int negative_pivots() const;
  long long factor_nonzeros() const;
  int supernode_count() const;
  const std::vector<int>& permutation() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  LdltOptions opts_;
};

}  // namespace cavity
