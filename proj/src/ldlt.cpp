#include "cavity/ldlt.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavity/error.hpp"

namespace cavity {

namespace {

constexpr int kPanel = 64;

[[noreturn]] void singular_pivot(int col, double d) {
  std::ostringstream msg;
  msg << "zero or tiny pivot " << d << " at column " << col << "; the matrix is (numerically) singular";
  fail(Errc::factorization_singular, msg.str());
}

// Factors the leading k columns of the lower triangle of F in place:
// F(:, :k) <- [L11; L21] (unit diagonal implied), D <- pivots, F(k:, k:) <- Schur complement.
void partial_ldlt(Eigen::Ref<MatX> F, int k, double* D, double tiny, int col0, int& negatives) {
  const int m = static_cast<int>(F.rows());
  for (int jb = 0; jb < k; jb += kPanel) {
    const int b = std::min(kPanel, k - jb);
    for (int c = jb; c < jb + b; ++c) {
      const double d = F(c, c);
      if (!(std::abs(d) > tiny)) singular_pivot(col0 + c, d);
      D[c] = d;
      if (d < 0.0) ++negatives;
      for (int c2 = c + 1; c2 < jb + b; ++c2) {
        const double f = F(c2, c) / d;
        F.col(c2).segment(c2, m - c2).noalias() -= f * F.col(c).segment(c2, m - c2);
      }
      F.col(c).segment(c + 1, m - c - 1) /= d;
    }
    const int r0 = jb + b;
    if (r0 < m) {
      const auto Lp = F.block(r0, jb, m - r0, b);
      const MatX W = Lp * Eigen::Map<const VecX>(D + jb, b).asDiagonal();
      F.block(r0, r0, m - r0, m - r0).triangularView<Eigen::Lower>() -= W * Lp.transpose();
    }
  }
}

}  // namespace

struct SparseLdlt::Impl {
  int n = 0;
  bool dense = false;
  bool analyzed = false;
  bool factored = false;
  std::vector<int> perm, iperm;
  std::vector<int> pattern_offsets, pattern_cols;

  // Supernodes: columns [first[s], first[s+1]) in permuted numbering.
  std::vector<int> first;
  std::vector<std::vector<int>> rows;
  std::vector<int> child_count;
  std::vector<long long> offset;
  std::vector<double> L;
  VecX D;
  int negatives = 0;
  long long nnz = 0;

  Eigen::LDLT<MatX> dense_ldlt;

  int supernodes() const { return static_cast<int>(first.size()) - 1; }
};

SparseLdlt::SparseLdlt() : impl_(std::make_unique<Impl>()) {}
SparseLdlt::SparseLdlt(const SparseSymOp& A, LdltOptions opts) : impl_(std::make_unique<Impl>()), opts_(opts) {
  analyze(A);
  factorize(A);
}
SparseLdlt::~SparseLdlt() = default;
SparseLdlt::SparseLdlt(SparseLdlt&&) noexcept = default;
SparseLdlt& SparseLdlt::operator=(SparseLdlt&&) noexcept = default;

void SparseLdlt::analyze(const SparseSymOp& A) {
  Impl& s = *impl_;
  s = Impl{};
  s.n = A.dim();
  s.pattern_offsets.assign(A.row_offsets().begin(), A.row_offsets().end());
  s.pattern_cols.assign(A.col_indices().begin(), A.col_indices().end());
  s.dense = s.n < opts_.dense_below;
  s.analyzed = true;
  if (s.dense) return;

  // Ordering composed with an elimination-tree postorder, so supernodes are contiguous and
  // children precede parents.
  const std::vector<int> p0 = fill_reducing_ordering(A, opts_.ordering);
  const EliminationTree t0 = elimination_tree(A, p0);
  const std::vector<int> post = tree_postorder(t0.parent);
  s.perm.resize(s.n);
  for (int k = 0; k < s.n; ++k) s.perm[k] = p0[post[k]];
  s.iperm.resize(s.n);
  for (int k = 0; k < s.n; ++k) s.iperm[s.perm[k]] = k;
  const EliminationTree t = elimination_tree(A, s.perm);
  const auto& parent = t.parent;
  const auto& cc = t.col_count;

  // Supernode partition with relaxed amalgamation along parent chains.
  s.first = {0};
  long long true_nnz = cc[0];
  for (int j = 1; j < s.n; ++j) {
    const int f = s.first.back();
    bool merge = parent[j - 1] == j;
    if (merge && cc[j - 1] != cc[j] + 1) {
      const long long nc = j - f + 1;
      const long long front = nc + cc[j] - 1;
      const long long storage = nc * front - nc * (nc - 1) / 2;
      const double zeros = static_cast<double>(storage - (true_nnz + cc[j])) / static_cast<double>(storage);
      merge = nc <= 4 || (nc <= 16 && zeros < 0.5) || (nc <= 48 && zeros < 0.1) || zeros < 0.05;
    }
    if (merge) {
      true_nnz += cc[j];
    } else {
      s.first.push_back(j);
      true_nnz = cc[j];
    }
  }
  s.first.push_back(s.n);
  const int ns = s.supernodes();

  std::vector<int> owner(s.n);
  for (int q = 0; q < ns; ++q)
    for (int j = s.first[q]; j < s.first[q + 1]; ++j) owner[j] = q;
  std::vector<int> sn_parent(ns, -1);
  s.child_count.assign(ns, 0);
  for (int q = 0; q < ns; ++q) {
    const int last = s.first[q + 1] - 1;
    if (parent[last] >= 0) {
      sn_parent[q] = owner[parent[last]];
      ++s.child_count[sn_parent[q]];
    }
  }

  // Row structures: own columns, then the union of A's entries and the children's structures.
  std::vector<std::vector<int>> children(ns);
  for (int q = 0; q < ns; ++q)
    if (sn_parent[q] >= 0) children[sn_parent[q]].push_back(q);
  const auto rp = A.row_offsets();
  const auto ci = A.col_indices();
  std::vector<int> mark(s.n, -1);
  s.rows.resize(ns);
  s.offset.assign(ns + 1, 0);
  for (int q = 0; q < ns; ++q) {
    const int f = s.first[q], l = s.first[q + 1] - 1;
    std::vector<int> extra;
    for (int c = f; c <= l; ++c) {
      const int old = s.perm[c];
      for (int k = rp[old]; k < rp[old + 1]; ++k) {
        const int i = s.iperm[ci[k]];
        if (i > l && mark[i] != q) {
          mark[i] = q;
          extra.push_back(i);
        }
      }
    }
    for (int ch : children[q]) {
      const auto& cr = s.rows[ch];
      const int cn = s.first[ch + 1] - s.first[ch];
      for (std::size_t r = cn; r < cr.size(); ++r) {
        const int i = cr[r];
        if (i > l && mark[i] != q) {
          mark[i] = q;
          extra.push_back(i);
        }
      }
    }
    std::sort(extra.begin(), extra.end());
    auto& rows = s.rows[q];
    rows.reserve(l - f + 1 + extra.size());
    for (int c = f; c <= l; ++c) rows.push_back(c);
    rows.insert(rows.end(), extra.begin(), extra.end());
    const long long k = l - f + 1;
    s.offset[q + 1] = s.offset[q] + static_cast<long long>(rows.size()) * k;
    s.nnz += k * static_cast<long long>(rows.size()) - k * (k - 1) / 2;
  }
}

void SparseLdlt::factorize(const SparseSymOp& A) {
  Impl& s = *impl_;
  const bool same_pattern = s.analyzed && A.dim() == s.n &&
                            std::equal(A.row_offsets().begin(), A.row_offsets().end(), s.pattern_offsets.begin(),
                                       s.pattern_offsets.end()) &&
                            std::equal(A.col_indices().begin(), A.col_indices().end(), s.pattern_cols.begin(),
                                       s.pattern_cols.end());
  if (!same_pattern) analyze(A);
  s.factored = false;

  double diag_max = 0.0;
  for (int i = 0; i < s.n; ++i) diag_max = std::max(diag_max, std::abs(A.coeff(i, i)));
  if (diag_max == 0.0) diag_max = std::max(A.max_abs(), 1.0);
  const double tiny = opts_.pivot_tol * diag_max;

  if (s.dense) {
    const MatX M = A.to_dense();
    s.dense_ldlt.compute(M);
    if (s.dense_ldlt.info() != Eigen::Success) fail(Errc::factorization_singular, "dense LDLT failed");
    const VecX d = s.dense_ldlt.vectorD();
    s.negatives = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(std::abs(d[i]) > tiny)) singular_pivot(static_cast<int>(i), d[i]);
      if (d[i] < 0.0) ++s.negatives;
    }
    s.nnz = static_cast<long long>(s.n) * (s.n + 1) / 2;
    s.factored = true;
    return;
  }

  const int ns = s.supernodes();
  s.L.assign(static_cast<std::size_t>(s.offset[ns]), 0.0);
  s.D.resize(s.n);
  s.negatives = 0;
  const auto rp = A.row_offsets();
  const auto ci = A.col_indices();
  const auto va = A.values();

  struct Update {
    std::vector<int> rows;
    MatX U;
  };
  std::vector<Update> stack;
  std::vector<int> relpos(s.n, -1);
  MatX F;

  for (int q = 0; q < ns; ++q) {
    const int f = s.first[q];
    const int k = s.first[q + 1] - f;
    const auto& rows = s.rows[q];
    const int m = static_cast<int>(rows.size());
    for (int r = 0; r < m; ++r) relpos[rows[r]] = r;
    F.setZero(m, m);

    for (int c = f; c < f + k; ++c) {
      const int old = s.perm[c];
      for (int e = rp[old]; e < rp[old + 1]; ++e) {
        const int i = s.iperm[ci[e]];
        if (i >= c) F(relpos[i], c - f) += va[e];
      }
    }
    for (int ch = 0; ch < s.child_count[q]; ++ch) {
      Update& u = stack.back();
      const int mu = static_cast<int>(u.rows.size());
      std::vector<int> loc(mu);
      for (int a = 0; a < mu; ++a) loc[a] = relpos[u.rows[a]];
      for (int b = 0; b < mu; ++b)
        for (int a = b; a < mu; ++a) F(loc[a], loc[b]) += u.U(a, b);
      stack.pop_back();
    }

    partial_ldlt(F, k, s.D.data() + f, tiny, f, s.negatives);

    Eigen::Map<MatX>(s.L.data() + s.offset[q], m, k) = F.leftCols(k);
    if (m > k) {
      Update u;
      u.rows.assign(rows.begin() + k, rows.end());
      u.U = F.bottomRightCorner(m - k, m - k);
      stack.push_back(std::move(u));
    }
    for (int r = 0; r < m; ++r) relpos[rows[r]] = -1;
  }
  s.factored = true;
}

VecX SparseLdlt::solve(const VecX& b) const {
  const Impl& s = *impl_;
  if (!s.factored) fail(Errc::factorization_singular, "solve called without a successful factorization");
  if (b.size() != s.n) fail(Errc::range_error, "right-hand side has the wrong size");
  if (s.dense) return s.dense_ldlt.solve(b);

  VecX y(s.n);
  for (int k = 0; k < s.n; ++k) y[k] = b[s.perm[k]];
  const int ns = s.supernodes();
  VecX tmp;
  for (int q = 0; q < ns; ++q) {
    const int f = s.first[q], k = s.first[q + 1] - f;
    const auto& rows = s.rows[q];
    const int m = static_cast<int>(rows.size());
    const Eigen::Map<const MatX> Lq(s.L.data() + s.offset[q], m, k);
    auto x1 = y.segment(f, k);
    Lq.topRows(k).triangularView<Eigen::UnitLower>().solveInPlace(x1);
    if (m > k) {
      tmp.noalias() = Lq.bottomRows(m - k) * x1;
      for (int r = 0; r < m - k; ++r) y[rows[k + r]] -= tmp[r];
    }
  }
  y.array() /= s.D.array();
  for (int q = ns - 1; q >= 0; --q) {
    const int f = s.first[q], k = s.first[q + 1] - f;
    const auto& rows = s.rows[q];
    const int m = static_cast<int>(rows.size());
    const Eigen::Map<const MatX> Lq(s.L.data() + s.offset[q], m, k);
    auto x1 = y.segment(f, k);
    if (m > k) {
      tmp.resize(m - k);
      for (int r = 0; r < m - k; ++r) tmp[r] = y[rows[k + r]];
      x1.noalias() -= Lq.bottomRows(m - k).transpose() * tmp;
    }
    Lq.topRows(k).triangularView<Eigen::UnitLower>().transpose().solveInPlace(x1);
  }
  VecX x(s.n);
  for (int k = 0; k < s.n; ++k) x[s.perm[k]] = y[k];
  return x;
}

MatX SparseLdlt::solve(const MatX& B) const {
  MatX X(B.rows(), B.cols());
  for (Eigen::Index c = 0; c < B.cols(); ++c) X.col(c) = solve(VecX(B.col(c)));
  return X;
}

int SparseLdlt::dim() const { return impl_->n; }
bool SparseLdlt::dense() const { return impl_->dense; }
int SparseLdlt::negative_pivots() const { return impl_->negatives; }
long long SparseLdlt::factor_nonzeros() const { return impl_->nnz; }
int SparseLdlt::supernode_count() const { return impl_->dense ? 0 : impl_->supernodes(); }
const std::vector<int>& SparseLdlt::permutation() const { return impl_->perm; }

}  // namespace cavity
