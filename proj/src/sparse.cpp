#include "cavity/sparse.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>

#include "cavity/error.hpp"

namespace cavity {

SparseSymOp::SparseSymOp(SparseRowMatrix m) : m_(std::move(m)) {
  m_.makeCompressed();
}

SparseSymOp SparseSymOp::from_triplets(int n, const std::vector<Triplet>& triplets) {
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Triplet &x = triplets[a], &y = triplets[b];
    return x.row() != y.row() ? x.row() < y.row() : x.col() < y.col();
  });
  SparseRowMatrix m(n, n);
  std::vector<int> counts(n, 0);
  for (std::size_t a = 0; a < order.size();) {
    std::size_t b = a + 1;
    const Triplet& t = triplets[order[a]];
    while (b < order.size() && triplets[order[b]].row() == t.row() && triplets[order[b]].col() == t.col()) ++b;
    ++counts[t.row()];
    a = b;
  }
  m.reserve(counts);
  for (std::size_t a = 0; a < order.size();) {
    const Triplet& t = triplets[order[a]];
    double v = 0.0;
    std::size_t b = a;
    for (; b < order.size() && triplets[order[b]].row() == t.row() && triplets[order[b]].col() == t.col(); ++b)
      v += triplets[order[b]].value();
    m.insert(t.row(), t.col()) = v;
    a = b;
  }
  return SparseSymOp(std::move(m));
}

SparseSymOp SparseSymOp::identity(int n) {
  SparseRowMatrix m(n, n);
  m.setIdentity();
  return SparseSymOp(std::move(m));
}

SparseSymOp SparseSymOp::diagonal(const VecX& d) {
  SparseRowMatrix m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Ones(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  return SparseSymOp(std::move(m));
}

SparseSymOp SparseSymOp::combine(double a, const SparseSymOp& other, double b) const {
  if (other.dim() != dim()) fail(Errc::range_error, "operator dimensions differ");
  return SparseSymOp(SparseRowMatrix(a * m_ + b * other.m_));
}

SparseSymOp SparseSymOp::congruence(const SparseRowMatrix& T) const {
  if (T.rows() != m_.rows()) fail(Errc::range_error, "congruence transform has the wrong row count");
  const SparseRowMatrix KT = m_ * T;
  SparseRowMatrix R = SparseRowMatrix(T.transpose()) * KT;
  R.prune(0.0);
  return SparseSymOp(std::move(R));
}

double SparseSymOp::max_abs() const {
  double m = 0.0;
  for (double v : values()) m = std::max(m, std::abs(v));
  return m;
}

double SparseSymOp::symmetry_error() const {
  const SparseRowMatrix d = m_ - SparseRowMatrix(m_.transpose());
  double e = 0.0;
  for (Eigen::Index k = 0; k < d.nonZeros(); ++k) e = std::max(e, std::abs(d.valuePtr()[k]));
  return e;
}

bool SparseSymOp::structurally_symmetric() const {
  const auto rp = row_offsets();
  const auto ci = col_indices();
  for (int i = 0; i < dim(); ++i)
    for (int k = rp[i]; k < rp[i + 1]; ++k) {
      const int j = ci[k];
      if (!std::binary_search(ci.begin() + rp[j], ci.begin() + rp[j + 1], i)) return false;
    }
  return true;
}

void SparseSymOp::write_coordinate(std::ostream& os) const {
  os.precision(17);
  os << "# cavity-coo 1 " << dim() << " " << nnz() << "\n";
  const auto rp = row_offsets();
  const auto ci = col_indices();
  const auto v = values();
  for (int i = 0; i < dim(); ++i)
    for (int k = rp[i]; k < rp[i + 1]; ++k) os << i << " " << ci[k] << " " << v[k] << "\n";
}

void SparseSymOp::write_coordinate(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(Errc::io_failure, "cannot write matrix file " + path);
  write_coordinate(out);
  if (!out) fail(Errc::io_failure, "error while writing matrix file " + path);
}

}  // namespace cavity
