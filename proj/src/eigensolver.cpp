#include "cavity/eigensolver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "cavity/error.hpp"

namespace cavity {

namespace {

MatX random_block(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatX X(n, p);
  for (int c = 0; c < p; ++c)
    for (int i = 0; i < n; ++i) X(i, c) = g(rng);
  return X;
}

// Removes from W its M-projection onto the M-orthonormal columns of B (two passes).
void project_out(const SparseRowMatrix& M, const MatX& B, MatX& W) {
  if (B.cols() == 0 || W.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const MatX MW = M * W;
    W.noalias() -= B * (B.transpose() * MW);
  }
}

// M-orthonormal QR of W (already orthogonal to B): W = Q R. Columns that vanish are replaced by
// random directions orthogonal to everything (zero row in R) while the space has room, and
// dropped otherwise, so Q may have fewer columns than W.
void orthonormalize(const SparseRowMatrix& M, const MatX& B, const MatX& W, MatX& Q, MatX& R, std::mt19937_64& rng) {
  const int n = static_cast<int>(W.rows());
  const int p = static_cast<int>(W.cols());
  Q.resize(n, p);
  MatX MQ(n, p);
  R = MatX::Zero(p, p);
  int q = 0;
  auto orthogonalize_in_block = [&](VecX& w, int col) {
    for (int pass = 0; pass < 2; ++pass)
      for (int r = 0; r < q; ++r) {
        const double c = MQ.col(r).dot(w);
        w -= c * Q.col(r);
        if (col >= 0) R(r, col) += c;
      }
  };
  for (int c = 0; c < p; ++c) {
    VecX w = W.col(c);
    const double before = std::sqrt(std::max(0.0, w.dot(M * w)));
    orthogonalize_in_block(w, c);
    VecX Mw = M * w;
    double nrm = std::sqrt(std::max(0.0, w.dot(Mw)));
    if (before > 0.0 && nrm > 1e-10 * before) {
      Q.col(q) = w / nrm;
      MQ.col(q) = Mw / nrm;
      R(q, c) = nrm;
      ++q;
      continue;
    }
    if (B.cols() + q + 1 > n) continue;
    for (int attempt = 0; attempt < 3; ++attempt) {
      MatX z = random_block(n, 1, rng);
      project_out(M, B, z);
      VecX zv = z.col(0);
      orthogonalize_in_block(zv, -1);
      MatX zm(n, 1);
      zm.col(0) = zv;
      project_out(M, B, zm);
      zv = zm.col(0);
      orthogonalize_in_block(zv, -1);
      const VecX Mz = M * zv;
      nrm = std::sqrt(std::max(0.0, zv.dot(Mz)));
      if (nrm > 1e-8) {
        Q.col(q) = zv / nrm;
        MQ.col(q) = Mz / nrm;
        ++q;
        break;
      }
    }
  }
  Q.conservativeResize(n, q);
  R.conservativeResize(q, p);
}

struct LanczosResult {
  VecX theta;  // ordered by target preference
  MatX X;
  VecX rho;
  int iterations = 0;
  bool converged = false;
};

class BlockLanczos {
 public:
  BlockLanczos(const SparseSymOp& A, const SparseSymOp& M, const SparseLdlt& factor, const EigenOptions& opts,
               double sigma, int block)
      : A_(A), M_(M), factor_(factor), opts_(opts), sigma_(sigma), rng_(opts.seed) {
    n_ = A.dim();
    p_ = std::max(1, std::min(block, n_));
    const int auto_basis = std::max(2 * opts.count + 3 * p_, 6 * p_);
    max_basis_ = std::min(n_, opts.max_basis > 0 ? opts.max_basis : auto_basis);
    max_basis_ = std::max(max_basis_, std::min(n_, opts.count + 2 * p_));
  }

  // Returns the wanted pairs as (lambda ascending, vectors, residuals).
  Spectrum run() {
    const SparseRowMatrix& M = M_.matrix();
    MatX V(n_, 0), H(0, 0), C(0, 0);
    MatX Vn, R;
    orthonormalize(M, V, random_block(n_, p_, rng_), Vn, R, rng_);
    C.resize(Vn.cols(), 0);
    double eta = opts_.tol;
    Spectrum out;
    out.shift = sigma_;
    for (int it = 1; it <= opts_.max_iter; ++it) {
      // Expand the basis by one block.
      if (Vn.cols() > 0) {
        MatX W = factor_.solve(MatX(M * Vn));
        const MatX Hnn0 = Vn.transpose() * (M * W);
        const MatX Hnn = 0.5 * (Hnn0 + Hnn0.transpose());
        MatX All(n_, V.cols() + Vn.cols());
        All << V, Vn;
        project_out(M, All, W);
        MatX Q;
        orthonormalize(M, All, W, Q, R, rng_);
        const int k = static_cast<int>(V.cols()), q = static_cast<int>(Vn.cols());
        MatX Hx = MatX::Zero(k + q, k + q);
        Hx.topLeftCorner(k, k) = H;
        Hx.block(k, 0, q, k) = C;
        Hx.block(0, k, k, q) = C.transpose();
        Hx.bottomRightCorner(q, q) = Hnn;
        H.swap(Hx);
        V.swap(All);
        C = MatX::Zero(Q.cols(), k + q);
        C.rightCols(q) = R;
        Vn.swap(Q);
      }
      const int k = static_cast<int>(V.cols());

      Eigen::SelfAdjointEigenSolver<MatX> es(H);
      const VecX& th = es.eigenvalues();
      std::vector<int> order(k);
      std::iota(order.begin(), order.end(), 0);
      auto key = [&](int i) {
        if (opts_.target == SpectrumTarget::nearest) return std::abs(th[i]);
        return th[i] > 0.0 ? th[i] : -std::numeric_limits<double>::infinity();
      };
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) > key(b); });
      const int want = opts_.count;
      bool ok = k >= want;
      const bool invariant = Vn.cols() == 0;
      for (int i = 0; ok && i < want; ++i) {
        const int j = order[i];
        if (opts_.target == SpectrumTarget::smallest && !(th[j] > 0.0)) ok = false;
        const double rho = invariant ? 0.0 : (C * es.eigenvectors().col(j)).norm();
        if (rho > eta * std::abs(th[j])) ok = false;
      }
      if (ok) {
        MatX S(k, want);
        VecX lam(want);
        for (int i = 0; i < want; ++i) {
          S.col(i) = es.eigenvectors().col(order[i]);
          lam[i] = sigma_ + 1.0 / th[order[i]];
        }
        MatX X = V * S;
        std::vector<int> asc(want);
        std::iota(asc.begin(), asc.end(), 0);
        std::stable_sort(asc.begin(), asc.end(), [&](int a, int b) { return lam[a] < lam[b]; });
        out.eigenvalues.resize(want);
        out.eigenvectors.resize(n_, want);
        for (int i = 0; i < want; ++i) {
          out.eigenvalues[i] = lam[asc[i]];
          out.eigenvectors.col(i) = X.col(asc[i]);
        }
        out.residuals = residual_norms(A_, M_, out.eigenvalues, out.eigenvectors);
        bool good = true;
        for (int i = 0; i < want; ++i)
          good = good && out.residuals[i] <= opts_.tol * (std::abs(out.eigenvalues[i]) + 1.0);
        out.iterations = it;
        if (good) {
          // Next Ritz value, used for inertia verification.
          next_lambda_ = k > want && key(order[want]) > -std::numeric_limits<double>::infinity()
                             ? sigma_ + 1.0 / th[order[want]]
                             : std::numeric_limits<double>::quiet_NaN();
          return out;
        }
        if (invariant) break;
        eta *= 1e-2;
      }
      if (invariant && !ok) break;
      // Thick restart keeps the best Ritz vectors and the coupling to the pending block.
      if (k + Vn.cols() > max_basis_) {
        const int keep = std::min(k, std::max(want + p_, max_basis_ / 2));
        MatX S(k, keep);
        VecX tk(keep);
        for (int i = 0; i < keep; ++i) {
          S.col(i) = es.eigenvectors().col(order[i]);
          tk[i] = th[order[i]];
        }
        V = V * S;
        H = tk.asDiagonal();
        C = C * S;
      }
    }
    fail(Errc::no_convergence, "block Lanczos did not converge to " + std::to_string(opts_.count) + " eigenpairs in " +
                                   std::to_string(opts_.max_iter) + " steps");
  }

  double next_lambda() const { return next_lambda_; }

 private:
  const SparseSymOp& A_;
  const SparseSymOp& M_;
  const SparseLdlt& factor_;
  const EigenOptions& opts_;
  double sigma_;
  std::mt19937_64 rng_;
  int n_ = 0, p_ = 1, max_basis_ = 0;
  double next_lambda_ = std::numeric_limits<double>::quiet_NaN();
};

SparseLdlt factor_shifted(const SparseSymOp& A, const SparseSymOp& M, double& sigma, const EigenOptions& opts,
                          int& factorizations) {
  const double step = 1e-3 * (std::abs(sigma) + 1.0);
  const double base = sigma;
  for (int attempt = 0; attempt < 4; ++attempt) {
    double s = base;
    if (attempt > 0) {
      const double sign = opts.target == SpectrumTarget::smallest || attempt % 2 == 1 ? -1.0 : 1.0;
      s = base + sign * step * std::pow(3.0, attempt - 1) * 1.2345;
    }
    try {
      ++factorizations;
      SparseLdlt f(A.combine(1.0, M, -s), opts.factor);
      sigma = s;
      return f;
    } catch (const Error& e) {
      if (e.code() != Errc::factorization_singular || attempt == 3) throw;
    }
  }
  fail(Errc::factorization_singular, "shifted factorization failed");
}

}  // namespace

std::string_view to_string(ModeTag tag) noexcept {
  switch (tag) {
    case ModeTag::maxwell: return "maxwell";
    case ModeTag::gradient: return "gradient";
    case ModeTag::unclassified: return "unclassified";
  }
  return "unclassified";
}

VecX residual_norms(const SparseSymOp& A, const SparseSymOp& M, const VecX& lambda, const MatX& X) {
  Eigen::ConjugateGradient<SparseRowMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.compute(M.matrix());
  cg.setTolerance(1e-13);
  cg.setMaxIterations(std::max(100, 4 * static_cast<int>(std::sqrt(static_cast<double>(M.dim()))) + 200));
  const MatX R = A.matrix() * X - (M.matrix() * X) * lambda.asDiagonal();
  VecX out(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const VecX r = R.col(c);
    const VecX z = cg.solve(r);
    out[c] = std::sqrt(std::max(0.0, r.dot(z)));
  }
  return out;
}

Spectrum solve_gevp(const SparseSymOp& A, const SparseSymOp& M, const EigenOptions& opts) {
  if (A.dim() != M.dim()) fail(Errc::range_error, "stiffness and mass dimensions differ");
  if (opts.count < 1 || opts.count > A.dim())
    fail(Errc::range_error, "eigenpair count must be in [1, " + std::to_string(A.dim()) + "]");
  if (!(opts.tol > 0.0 && opts.tol <= 1e-2)) fail(Errc::range_error, "tol must be in (0, 1e-2]");
  if (opts.block_size < 1) fail(Errc::range_error, "block_size must be positive");

  int factorizations = 0;
  double sigma = opts.shift;
  const SparseLdlt factor = factor_shifted(A, M, sigma, opts, factorizations);

  EigenOptions o = opts;
  for (int attempt = 0; attempt < 3; ++attempt) {
    BlockLanczos solver(A, M, factor, o, sigma, o.block_size);
    Spectrum s = solver.run();
    s.factorizations = factorizations;
    if (!opts.verify_count || opts.target != SpectrumTarget::smallest) return s;

    // Inertia check: cut between the last two clusters (or after the last value if the next Ritz
    // value is well separated) and compare the eigenvalue count below the cut.
    const VecX& lam = s.eigenvalues;
    const int m = s.size();
    auto gap = [](double a, double b) { return b - a > 1e-6 * (std::abs(a) + 1.0); };
    int below = -1;
    double cut = 0.0;
    if (!std::isnan(solver.next_lambda()) && gap(lam[m - 1], solver.next_lambda()) &&
        solver.next_lambda() - lam[m - 1] > 1e-3 * (std::abs(lam[m - 1]) + 1.0)) {
      // The next Ritz value only bounds the true one from above, so cut just above the last value.
      cut = lam[m - 1] + 1e-4 * (std::abs(lam[m - 1]) + 1.0);
      below = m;
    } else {
      for (int j = m - 2; j >= 0; --j)
        if (gap(lam[j], lam[j + 1])) {
          cut = 0.5 * (lam[j] + lam[j + 1]);
          below = j + 1;
          break;
        }
    }
    if (below < 0) return s;
    double mu = cut;
    EigenOptions fo = opts;
    fo.target = SpectrumTarget::nearest;
    const SparseLdlt check = factor_shifted(A, M, mu, fo, s.factorizations);
    int expected = 0;
    for (int i = 0; i < m; ++i) expected += lam[i] < mu;
    if (check.negative_pivots() == expected) {
      s.verified_below = mu;
      s.verified_count = expected;
      return s;
    }
    o.block_size *= 2;
    o.seed += 7919u;
  }
  fail(Errc::no_convergence, "eigenvalues below the requested range were missed; increase block_size");
}

void classify_modes(Spectrum& s, const SparseSymOp& M, const SparseSymOp& D, double tau, const ClassifyOptions& opts) {
  if (!(tau > 0.0)) fail(Errc::range_error, "tau must be positive");
  const int m = s.size();
  auto tag_of = [&](double r) {
    if (std::abs(r - opts.threshold) <= opts.band * opts.threshold) return ModeTag::unclassified;
    return r > opts.threshold ? ModeTag::gradient : ModeTag::maxwell;
  };
  auto rotate = [&](int first, int count) {
    const MatX X = s.eigenvectors.middleCols(first, count);
    const MatX G = X.transpose() * (D.matrix() * X);
    return std::pair{X, Eigen::SelfAdjointEigenSolver<MatX>(0.5 * (G + G.transpose()))};
  };
  for (const Cluster& c : cluster_values(s.eigenvalues, opts.cluster_tol)) {
    if (c.count < 2) continue;
    const auto [X, es] = rotate(c.first, c.count);
    s.eigenvectors.middleCols(c.first, c.count) = X * es.eigenvectors();
  }
  s.div_ratio.resize(m);
  s.tags.assign(m, ModeTag::unclassified);
  for (const Cluster& g : cluster_values(s.eigenvalues, opts.group_tol)) {
    const auto [X, es] = rotate(g.first, g.count);
    const MatX Y = X * es.eigenvectors();
    std::vector<std::pair<double, double>> modes;  // (Rayleigh quotient, ratio)
    for (int j = 0; j < g.count; ++j) {
      const VecX y = Y.col(j);
      const double mass = M.quad(y);
      double rq = 0.0;
      for (int i = 0; i < g.count; ++i) rq += es.eigenvectors()(i, j) * es.eigenvectors()(i, j) * s.eigenvalues[g.first + i];
      const double lam = std::max(rq, std::numeric_limits<double>::min());
      modes.emplace_back(rq, (std::max(0.0, es.eigenvalues()[j]) / mass) / (lam / tau));
    }
    std::stable_sort(modes.begin(), modes.end());
    for (int j = 0; j < g.count; ++j) {
      s.div_ratio[g.first + j] = modes[j].second;
      s.tags[g.first + j] = tag_of(modes[j].second);
    }
  }
}

void classify_modes(Spectrum& s, const FemSpace& space, double tau, const ClassifyOptions& opts) {
  const FemForms forms(space);
  classify_modes(s, forms.mass(), forms.div_div(), tau, opts);
}

std::vector<Cluster> cluster_values(const VecX& v, double rel_tol) {
  std::vector<Cluster> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const bool join = i > 0 && v[i] - v[i - 1] <= rel_tol * std::max({std::abs(v[i]), std::abs(v[i - 1]), 1e-300});
    if (!join) out.push_back({0.0, static_cast<int>(i), 0});
    Cluster& c = out.back();
    c.value = (c.value * c.count + v[i]) / (c.count + 1);
    ++c.count;
  }
  return out;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  os << "# cavity-spectrum 1\n";
  os << "index,lambda,residual,div_energy_ratio,tag\n";
  os << std::setprecision(12);
  for (int i = 0; i < s.size(); ++i) {
    os << i << ',' << s.eigenvalues[i] << ',' << (s.residuals.size() > i ? s.residuals[i] : 0.0) << ',';
    if (s.div_ratio.size() > i) os << s.div_ratio[i];
    os << ',' << (static_cast<int>(s.tags.size()) > i ? to_string(s.tags[i]) : "unclassified") << '\n';
  }
}

void write_spectrum_csv(const std::string& path, const Spectrum& s) {
  std::ofstream f(path);
  if (!f) fail(Errc::io_failure, "cannot open " + path + " for writing");
  write_spectrum_csv(f, s);
  if (!f) fail(Errc::io_failure, "write to " + path + " failed");
}

}  // namespace cavity
