#include "cavity/harness.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "cavity/error.hpp"
#include "cavity/gaffney.hpp"
#include "cavity/quadrature.hpp"

namespace cavity {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool same_value(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

// ---------------------------------------------------------------------------------------------
// Cube oracle

std::vector<CubeEigenvalue> analytic_cube_spectrum(double tau, double side, int m) {
  if (!(side > 0.0)) fail(Errc::range_error, "cube side must be positive");
  if (!(tau > 0.0)) fail(Errc::range_error, "tau must be positive");
  if (m < 1) fail(Errc::range_error, "m must be positive");
  const double c = (kPi / side) * (kPi / side);
  for (long Q = 16;; Q *= 2) {
    std::map<long, int> maxwell, gradient;  // keyed by q = i^2 + j^2 + k^2
    const int K = static_cast<int>(std::sqrt(static_cast<double>(Q))) + 1;
    for (int i = 0; i <= K; ++i)
      for (int j = 0; j <= K; ++j)
        for (int k = 0; k <= K; ++k) {
          const long q = static_cast<long>(i) * i + static_cast<long>(j) * j + static_cast<long>(k) * k;
          if (q == 0 || q > Q) continue;
          const int positive = (i > 0) + (j > 0) + (k > 0);
          if (positive >= 2) maxwell[q] += positive == 3 ? 2 : 1;
          if (positive == 3) gradient[q] += 1;
        }
    std::vector<CubeEigenvalue> all;
    for (const auto& [q, mult] : maxwell) all.push_back({c * q, mult, ModeTag::maxwell});
    for (const auto& [q, mult] : gradient) all.push_back({tau * c * q, mult, ModeTag::gradient});
    std::stable_sort(all.begin(), all.end(), [](const CubeEigenvalue& a, const CubeEigenvalue& b) {
      if (!same_value(a.lambda, b.lambda)) return a.lambda < b.lambda;
      return a.tag == ModeTag::maxwell && b.tag == ModeTag::gradient;
    });
    // Every value up to c Q min(1, tau) is complete.
    const double complete = c * static_cast<double>(Q) * std::min(1.0, tau) * (1.0 + 1e-12);
    std::vector<CubeEigenvalue> out;
    int total = 0;
    for (const auto& e : all) {
      if (e.lambda > complete) break;
      if (total >= m && !same_value(e.lambda, out.back().lambda)) return out;
      out.push_back(e);
      total += e.multiplicity;
    }
  }
}

std::vector<CubeCluster> cluster_cube_spectrum(const std::vector<CubeEigenvalue>& spectrum, double rel_tol) {
  std::vector<CubeCluster> out;
  for (const auto& e : spectrum) {
    if (out.empty() || std::abs(e.lambda - out.back().value) > rel_tol * out.back().value) out.push_back({e.lambda});
    (e.tag == ModeTag::gradient ? out.back().gradient : out.back().maxwell) += e.multiplicity;
  }
  return out;
}

bool CubeBenchmark::pass(int clusters, double rel_tol) const {
  if (static_cast<int>(rows.size()) < clusters) return false;
  for (int i = 0; i < clusters; ++i) {
    const auto& r = rows[i];
    if (!(r.rel_error <= rel_tol) || !r.multiplicity_ok || !r.tags_ok) return false;
  }
  return true;
}

namespace {

struct CubeProblem {
  FemSpace space;
  SparseSymOp A, M, D;
};

CubeProblem cube_problem(double tau, int n_mesh, int order) {
  const Rect side{{0, kPi}, {0, kPi}};
  CubeProblem p{build_space(mesh_box(side, 0.0, kPi, {n_mesh, n_mesh, n_mesh}), order), {}, {}, {}};
  const FemForms forms(p.space);
  p.A = forms.stiffness(tau);
  p.M = forms.mass();
  p.D = forms.div_div();
  return p;
}

}  // namespace

CubeBenchmark cube_benchmark(double tau, int n_mesh, int order, int m, double window, const EigenOptions& solver) {
  const auto t0 = Clock::now();
  const CubeProblem p = cube_problem(tau, n_mesh, order);
  EigenOptions o = solver;
  o.count = m;
  o.target = SpectrumTarget::smallest;
  CubeBenchmark b;
  b.tau = tau;
  b.n_mesh = n_mesh;
  b.order = order;
  b.dofs = p.A.dim();
  b.spectrum = solve_gevp(p.A, p.M, o);
  classify_modes(b.spectrum, p.M, p.D, tau);

  const auto exact = cluster_cube_spectrum(analytic_cube_spectrum(tau, kPi, m));
  const VecX& lam = b.spectrum.eigenvalues;
  int idx = 0;
  for (const auto& e : exact) {
    if (idx + e.count() > b.spectrum.size()) break;
    CubeClusterRow r;
    r.exact = e;
    double sum = 0.0;
    for (int i = idx; i < idx + e.count(); ++i) {
      sum += lam[i];
      r.rel_error = std::max(r.rel_error, std::abs(lam[i] - e.value) / e.value);
      (b.spectrum.tags[i] == ModeTag::gradient ? r.computed_gradient : r.computed_maxwell) +=
          b.spectrum.tags[i] != ModeTag::unclassified;
    }
    r.computed = sum / e.count();
    for (int i = 0; i < b.spectrum.size(); ++i) r.in_window += std::abs(lam[i] - e.value) <= window * e.value;
    // A window reaching past the last computed value cannot confirm the multiplicity.
    const bool window_covered = idx + e.count() < b.spectrum.size() || lam[lam.size() - 1] > e.value * (1.0 + window);
    r.multiplicity_ok = window_covered && r.in_window == e.count() && r.rel_error <= window;
    r.tags_ok = r.computed_maxwell == e.maxwell && r.computed_gradient == e.gradient;
    b.rows.push_back(r);
    idx += e.count();
  }
  b.seconds = seconds_since(t0);
  return b;
}

TaggedValues cube_tagged_values(double tau, int n_mesh, int order, int m, const std::vector<double>& window_shifts,
                                int window_count, const EigenOptions& solver) {
  const CubeProblem p = cube_problem(tau, n_mesh, order);
  TaggedValues out;
  EigenOptions o = solver;
  o.count = m;
  o.target = SpectrumTarget::smallest;
  Spectrum s = solve_gevp(p.A, p.M, o);
  classify_modes(s, p.M, p.D, tau);
  // Value ranges already harvested; a window contributes gradient modes outside all of them.
  std::vector<std::pair<double, double>> covered{{-std::numeric_limits<double>::infinity(), s.eigenvalues[s.size() - 1]}};
  for (int i = 0; i < s.size(); ++i) {
    if (s.tags[i] == ModeTag::maxwell) out.maxwell.push_back(s.eigenvalues[i]);
    if (s.tags[i] == ModeTag::gradient) out.gradient.push_back(s.eigenvalues[i]);
  }
  for (double shift : window_shifts) {
    EigenOptions w = solver;
    w.count = window_count;
    w.shift = shift;
    w.target = SpectrumTarget::nearest;
    Spectrum ws = solve_gevp(p.A, p.M, w);
    classify_modes(ws, p.M, p.D, tau);
    for (int i = 0; i < ws.size(); ++i) {
      const double v = ws.eigenvalues[i];
      const bool seen = std::any_of(covered.begin(), covered.end(),
                                    [&](const auto& r) { return v >= r.first && v <= r.second; });
      if (ws.tags[i] == ModeTag::gradient && !seen) out.gradient.push_back(v);
    }
    covered.emplace_back(ws.eigenvalues[0], ws.eigenvalues[ws.size() - 1]);
  }
  std::sort(out.maxwell.begin(), out.maxwell.end());
  std::sort(out.gradient.begin(), out.gradient.end());
  return out;
}

TauScalingReport compare_tau_branches(const TaggedValues& base, const TaggedValues& scaled, double tau) {
  if (scaled.gradient.size() < base.gradient.size() || scaled.maxwell.size() < base.maxwell.size())
    fail(Errc::range_error, "the scaled run resolved fewer tagged eigenvalues than the base run");
  TauScalingReport r;
  r.tau = tau;
  for (std::size_t i = 0; i < base.gradient.size(); ++i) {
    const double ratio = scaled.gradient[i] / base.gradient[i];
    r.gradient_ratios.push_back(ratio);
    r.max_gradient_deviation = std::max(r.max_gradient_deviation, std::abs(ratio / tau - 1.0));
  }
  for (std::size_t i = 0; i < base.maxwell.size(); ++i) {
    const double change = std::abs(scaled.maxwell[i] / base.maxwell[i] - 1.0);
    r.maxwell_changes.push_back(change);
    r.max_maxwell_change = std::max(r.max_maxwell_change, change);
  }
  return r;
}

TaggedValues benchmark_tagged_values(const CubeBenchmark& bench, int clusters) {
  TaggedValues out;
  int idx = 0;
  for (int c = 0; c < clusters && c < static_cast<int>(bench.rows.size()); ++c) {
    for (int i = idx; i < idx + bench.rows[c].exact.count(); ++i) {
      if (bench.spectrum.tags[i] == ModeTag::maxwell) out.maxwell.push_back(bench.spectrum.eigenvalues[i]);
      if (bench.spectrum.tags[i] == ModeTag::gradient) out.gradient.push_back(bench.spectrum.eigenvalues[i]);
    }
    idx += bench.rows[c].exact.count();
  }
  std::sort(out.maxwell.begin(), out.maxwell.end());
  std::sort(out.gradient.begin(), out.gradient.end());
  return out;
}

Spectrum benchmark_spectrum(const CubeBenchmark& bench, int clusters) {
  int modes = 0;
  for (int c = 0; c < clusters && c < static_cast<int>(bench.rows.size()); ++c) modes += bench.rows[c].exact.count();
  const Spectrum& s = bench.spectrum;
  Spectrum out = s;
  out.eigenvalues = s.eigenvalues.head(modes);
  out.eigenvectors = s.eigenvectors.leftCols(modes);
  out.residuals = s.residuals.head(modes);
  out.div_ratio = s.div_ratio.head(modes);
  out.tags.assign(s.tags.begin(), s.tags.begin() + modes);
  return out;
}

void write_cube_csv(std::ostream& os, const CubeBenchmark& bench, int clusters) {
  os << "# cavity-cube 1\n";
  os << "cluster,exact,maxwell,gradient,computed,rel_error,in_window,computed_maxwell,computed_gradient,"
        "multiplicity_ok,tags_ok\n";
  os << std::setprecision(12);
  for (int c = 0; c < clusters && c < static_cast<int>(bench.rows.size()); ++c) {
    const CubeClusterRow& r = bench.rows[c];
    os << c + 1 << ',' << r.exact.value << ',' << r.exact.maxwell << ',' << r.exact.gradient << ',' << r.computed
       << ',' << r.rel_error << ',' << r.in_window << ',' << r.computed_maxwell << ',' << r.computed_gradient << ','
       << (r.multiplicity_ok ? 1 : 0) << ',' << (r.tags_ok ? 1 : 0) << '\n';
  }
}

void write_tau_csv(std::ostream& os, const TaggedValues& base, const std::vector<TauComparison>& comparisons) {
  os << "# cavity-tau 1\n";
  os << "tau,tag,index,lambda_base,lambda_scaled,deviation\n";
  os << std::setprecision(12);
  for (const auto& [scaled, r] : comparisons) {
    for (std::size_t i = 0; i < r.gradient_ratios.size(); ++i)
      os << r.tau << ",gradient," << i + 1 << ',' << base.gradient[i] << ',' << scaled.gradient[i] << ','
         << std::abs(r.gradient_ratios[i] / r.tau - 1.0) << '\n';
    for (std::size_t i = 0; i < r.maxwell_changes.size(); ++i)
      os << r.tau << ",maxwell," << i + 1 << ',' << base.maxwell[i] << ',' << scaled.maxwell[i] << ','
         << r.maxwell_changes[i] << '\n';
  }
}

// ---------------------------------------------------------------------------------------------
// E-distances

EDistance e_distance(const FemSpace& eps_space, const MatX& u_eps, const FemSpace& ref_space, const MatX& u_0,
                     int quad_n, const std::function<bool(const Vec3&)>& inside_reference) {
  const int k = static_cast<int>(u_eps.cols());
  if (k < 1 || u_0.cols() != k) fail(Errc::range_error, "E-distance needs clusters of equal, positive size");
  if (u_eps.rows() != eps_space.free_dofs() || u_0.rows() != ref_space.free_dofs())
    fail(Errc::range_error, "E-distance fields do not match their spaces");
  const TetRule rule = tet_rule(quad_n);
  const TetMesh& mesh = eps_space.mesh;

  // Pass 1: Gram matrix G(i, j) = (u_eps,i, E u_0,j) over Omega_eps.
  MatX G = MatX::Zero(k, k);
  EDistance d;
  std::vector<VecX> eps_cols(k), ref_cols(k);
  for (int i = 0; i < k; ++i) {
    eps_cols[i] = u_eps.col(i);
    ref_cols[i] = u_0.col(i);
  }
  auto sweep_points = [&](auto&& visit) {
    for (int t = 0; t < static_cast<int>(mesh.tets.size()); ++t) {
      const double vol = std::abs(mesh.signed_volume(t));
      const auto& tet = mesh.tets[t];
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& b = rule.bary[q];
        Vec3 p = Vec3::Zero();
        for (int a = 0; a < 4; ++a) p += b[a] * mesh.vertices[tet[a]];
        visit(t, b, p, vol * rule.weights[q]);
      }
    }
  };
  std::vector<Vec3> ue(k), u0(k);
  sweep_points([&](int t, const std::array<double, 4>& b, const Vec3& p, double w) {
    const PointLocation loc = locate_point(ref_space.mesh, p);
    ++d.points;
    if (!loc.found()) {
      if (inside_reference && inside_reference(p))
        ++d.failures;
      else
        ++d.outside;
      return;
    }
    for (int i = 0; i < k; ++i) {
      ue[i] = eps_space.value(eps_cols[i], t, b);
      u0[i] = ref_space.value(ref_cols[i], loc.tet, loc.bary);
    }
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) G(i, j) += w * ue[i].dot(u0[j]);
  });
  if (d.points > 0 && static_cast<double>(d.failures) > 1e-3 * static_cast<double>(d.points)) {
    std::ostringstream msg;
    msg << d.failures << " of " << d.points << " quadrature points inside the reference domain were not located";
    fail(Errc::point_location_failure, msg.str());
  }

  // Best rotation: maximize tr(G Q) over orthogonal Q, Q = V U^T from G = U S V^T.
  const Eigen::JacobiSVD<MatX> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatX Q = svd.matrixV() * svd.matrixU().transpose();

  // Pass 2: direct integral of |u_eps,i - sum_j u_0,j Q(j, i)|^2.
  double total = 0.0, outside = 0.0;
  sweep_points([&](int t, const std::array<double, 4>& b, const Vec3& p, double w) {
    const PointLocation loc = locate_point(ref_space.mesh, p);
    for (int i = 0; i < k; ++i) ue[i] = eps_space.value(eps_cols[i], t, b);
    if (!loc.found()) {
      for (int i = 0; i < k; ++i) {
        const double s = w * ue[i].squaredNorm();
        total += s;
        outside += s;
      }
      return;
    }
    for (int j = 0; j < k; ++j) u0[j] = ref_space.value(ref_cols[j], loc.tet, loc.bary);
    for (int i = 0; i < k; ++i) {
      Vec3 diff = ue[i];
      for (int j = 0; j < k; ++j) diff -= Q(j, i) * u0[j];
      total += w * diff.squaredNorm();
    }
  });
  d.distance = std::sqrt(total / k);
  d.outside_norm = std::sqrt(outside / k);
  return d;
}

// ---------------------------------------------------------------------------------------------
// Epsilon sweep

SweepOptions make_sweep_options() {
  SweepOptions o;
  o.solver.count = 10;
  o.solver.block_size = 6;
  o.solver.tol = 1e-8;
  return o;
}

bool SweepReport::pass() const {
  if (exploratory || !gaps_decreasing || !final_gap_ok) return false;
  return std::all_of(e_decreasing.begin(), e_decreasing.end(), [](bool b) { return b; });
}

namespace {

void check_box_chart(const AtlasDomain& dom) {
  if (dom.atlas.s_prime != 1 || dom.atlas.charts.empty() || dom.profiles.empty())
    fail(Errc::range_error, "the sweep needs a domain with exactly one boundary chart");
  if (!dom.atlas.charts[0].rotation.isApprox(Mat3::Identity(), 1e-12))
    fail(Errc::range_error, "the sweep needs an axis-aligned boundary chart");
}

// Mean of the profile over a midpoint grid: the level the vertical grading is built against.
double mean_top(const AtlasDomain& dom) {
  const Rect W = dom.atlas.charts[0].base_rect();
  constexpr int n = 64;
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      sum += dom.profiles[0].value(Vec2(W.x.lo + (i + 0.5) * W.x.length() / n, W.y.lo + (j + 0.5) * W.y.length() / n));
  return sum / (n * n);
}

// int_W (g_eps - g) with composite 4-point Gauss cells at least 20 per eps-period.
double volume_change(const ProfileFunction& g_eps, const ProfileFunction& g, const Rect& W, double eps) {
  const int cells = std::max(64, static_cast<int>(std::ceil(20.0 * std::max(W.x.length(), W.y.length()) / eps)));
  const LineRule r = gauss_legendre(4);
  const double hx = W.x.length() / cells, hy = W.y.length() / cells;
  CompensatedSum sum;
  for (int j = 0; j < cells; ++j)
    for (int qj = 0; qj < 4; ++qj)
      for (int i = 0; i < cells; ++i)
        for (int qi = 0; qi < 4; ++qi) {
          const Vec2 x(W.x.lo + (i + r.nodes[qi]) * hx, W.y.lo + (j + r.nodes[qj]) * hy);
          sum.add(r.weights[qi] * r.weights[qj] * hx * hy * (g_eps.value(x) - g.value(x)));
        }
  return sum.value();
}

struct LevelSolve {
  FemSpace space;
  Spectrum spectrum;
  double gaffney = 0.0;
};

LevelSolve solve_level(const AtlasDomain& dom, int& n_xy, const SweepOptions& opts) {
  LevelSolve out;
  TetMesh mesh;
  try {
    mesh = box_chart_mesh(dom, n_xy, opts.mesh);
  } catch (const Error& e) {
    if (e.code() != Errc::inverted_element) throw;
    n_xy *= 2;
    mesh = box_chart_mesh(dom, n_xy, opts.mesh);
  }
  out.space = build_space(mesh, opts.mesh.order);
  const FemForms forms(out.space);
  const SparseSymOp M = forms.mass();
  {
    const SparseSymOp A = forms.stiffness(opts.tau);
    out.spectrum = solve_gevp(A, M, opts.solver);
  }
  classify_modes(out.spectrum, M, forms.div_div(), opts.tau);
  if (opts.gaffney) out.gaffney = discrete_gaffney_constant(forms, out.spectrum);
  return out;
}

void log_message(const SweepOptions& opts, const std::string& msg) {
  if (opts.log) opts.log(msg);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

int policy_cells(const AtlasDomain& dom, double eps, const SweepMeshPolicy& policy) {
  if (!(eps > 0.0)) fail(Errc::range_error, "policy cells need eps > 0");
  check_box_chart(dom);
  const Rect W = dom.atlas.charts[0].base_rect();
  const double L = std::max(W.x.length(), W.y.length());
  return std::max(policy.min_cells, static_cast<int>(std::ceil(L * policy.h_factor / eps - 1e-9)));
}

TetMesh box_chart_mesh(const AtlasDomain& dom, int n_xy, const SweepMeshPolicy& policy) {
  check_box_chart(dom);
  if (n_xy < 1) fail(Errc::range_error, "n_xy must be positive");
  const AtlasChart& chart = dom.atlas.charts[0];
  const Rect W = chart.base_rect();
  const double z_lo = chart.bounds[2].lo;
  const double top = mean_top(dom);
  if (!(top > z_lo)) fail(Errc::range_error, "profile lies below the chart floor");
  const double h = std::max(W.x.length(), W.y.length()) / n_xy;
  const auto levels = graded_levels(z_lo, top, std::min(h, top - z_lo), policy.grading_ratio,
                                    std::max(policy.max_layer, h));
  const TetMesh box = mesh_box(W, levels, {n_xy, n_xy});
  return shear_fit(box, dom.profiles[0], z_lo, top);
}

SweepReport sweep_epsilon(const PerturbationFamily& fam, double alpha, const std::vector<double>& eps_list,
                          const SweepOptions& opts) {
  const auto t0 = Clock::now();
  if (eps_list.empty()) fail(Errc::range_error, "eps_list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i)
    if (!(eps_list[i] > 0.0) || (i > 0 && !(eps_list[i] < eps_list[i - 1])))
      fail(Errc::range_error, "eps_list must be positive and strictly decreasing");
  if (opts.track < 1 || opts.track > opts.solver.count) fail(Errc::range_error, "track must lie in [1, solver.count]");
  check_box_chart(fam.base);

  SweepReport rep;
  rep.alpha = alpha;
  rep.exploratory = alpha <= 1.5;
  rep.conditions = check_convergence_conditions(fam, eps_list);
  if (!rep.exploratory && !rep.conditions.all_decreasing())
    fail(Errc::range_error, "the family violates the kappa convergence conditions");

  // Reference on the finest mesh of the sweep.
  int n_ref = 0;
  for (double eps : eps_list) n_ref = std::max(n_ref, policy_cells(fam.base, eps, opts.mesh));
  log_message(opts, "reference solve, n = " + std::to_string(n_ref));
  auto tl = Clock::now();
  LevelSolve ref = solve_level(fam.base, n_ref, opts);
  rep.reference.eps = 0.0;
  rep.reference.n_xy = n_ref;
  rep.reference.layers = ref.space.mesh.n[2];
  rep.reference.dofs = ref.space.free_dofs();
  rep.reference.eigenvalues = ref.spectrum.eigenvalues;
  rep.reference.tags = ref.spectrum.tags;
  rep.reference.gaffney = ref.gaffney;
  rep.reference.seconds = seconds_since(tl);
  rep.reference_clusters = cluster_values(ref.spectrum.eigenvalues, opts.cluster_tol);
  const int e_clusters = std::min<int>(opts.e_clusters, static_cast<int>(rep.reference_clusters.size()));
  const Rect W = fam.base.atlas.charts[0].base_rect();
  const ProfileFunction& g0 = fam.base.profiles[0];
  const auto inside_reference = [&](const Vec3& p) { return domain_contains(fam.base, p); };

  std::vector<std::vector<double>> e_series(e_clusters);
  for (double eps : eps_list) {
    const AtlasDomain dom = fam.at(eps);
    int n = policy_cells(fam.base, eps, opts.mesh);
    log_message(opts, "eps = " + std::to_string(eps) + ", n = " + std::to_string(n));
    tl = Clock::now();
    LevelSolve lv = solve_level(dom, n, opts);
    SweepLevel L;
    L.eps = eps;
    L.n_xy = n;
    L.layers = lv.space.mesh.n[2];
    L.dofs = lv.space.free_dofs();
    L.eigenvalues = lv.spectrum.eigenvalues;
    L.tags = lv.spectrum.tags;
    L.gaffney = lv.gaffney;
    L.volume_change = volume_change(dom.profiles[0], g0, W, eps);
    const int common = std::min(L.eigenvalues.size(), rep.reference.eigenvalues.size());
    L.abs_gaps = (L.eigenvalues.head(common) - rep.reference.eigenvalues.head(common)).cwiseAbs();
    L.rel_gaps = L.abs_gaps.cwiseQuotient(rep.reference.eigenvalues.head(common).cwiseAbs());
    for (int c = 0; c < e_clusters; ++c) {
      const Cluster& cl = rep.reference_clusters[c];
      if (cl.first + cl.count > lv.spectrum.size()) fail(Errc::range_error, "tracked cluster exceeds the solve count");
      L.e_distances.push_back(e_distance(lv.space, lv.spectrum.eigenvectors.middleCols(cl.first, cl.count), ref.space,
                                         ref.spectrum.eigenvectors.middleCols(cl.first, cl.count), opts.e_quad,
                                         inside_reference));
      e_series[c].push_back(L.e_distances.back().distance);
    }
    L.seconds = seconds_since(tl);
    rep.max_rel_gap.push_back(L.rel_gaps.head(std::min(opts.track, common)).maxCoeff());
    rep.levels.push_back(std::move(L));
  }

  rep.gaps_decreasing = strictly_decreasing(rep.max_rel_gap);
  rep.final_gap_ok = rep.max_rel_gap.back() < opts.gap_tol;
  for (const auto& s : e_series) rep.e_decreasing.push_back(strictly_decreasing(s));
  if (opts.gaffney) {
    double lo = rep.levels[0].gaffney, hi = lo;
    for (const auto& L : rep.levels) {
      lo = std::min(lo, L.gaffney);
      hi = std::max(hi, L.gaffney);
    }
    rep.gaffney_variation = lo > 0.0 ? (hi - lo) / lo : 0.0;
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

void write_sweep_csv(std::ostream& os, const SweepReport& r) {
  os << "# cavity-sweep 1\n";
  os << "eps,n,n_xy,dofs,lambda_eps,lambda_ref,gap,rel_gap,tag,cluster,e_distance,gaffney,volume_change\n";
  os << std::setprecision(12);
  const auto cluster_of = [&](int n) {
    for (std::size_t c = 0; c < r.reference_clusters.size(); ++c) {
      const Cluster& cl = r.reference_clusters[c];
      if (n >= cl.first && n < cl.first + cl.count) return static_cast<int>(c);
    }
    return -1;
  };
  for (const auto& L : r.levels)
    for (int n = 0; n < L.abs_gaps.size(); ++n) {
      const int c = cluster_of(n);
      os << L.eps << ',' << n + 1 << ',' << L.n_xy << ',' << L.dofs << ',' << L.eigenvalues[n] << ','
         << r.reference.eigenvalues[n] << ',' << L.abs_gaps[n] << ',' << L.rel_gaps[n] << ','
         << to_string(L.tags[n]) << ',' << c << ',';
      if (c >= 0 && c < static_cast<int>(L.e_distances.size())) os << L.e_distances[c].distance;
      os << ',' << L.gaffney << ',' << L.volume_change << '\n';
    }
}

void write_sweep_summary(std::ostream& os, const SweepReport& r) {
  os << std::setprecision(6);
  os << "alpha " << r.alpha << (r.exploratory ? " (exploratory: no pass/fail claim)" : "") << "\n";
  os << "reference: n_xy " << r.reference.n_xy << ", layers " << r.reference.layers << ", dofs " << r.reference.dofs
     << ", " << r.reference.seconds << " s\n";
  os << "reference clusters:";
  for (const auto& c : r.reference_clusters) os << " " << c.value << "(x" << c.count << ")";
  os << "\n";
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const auto& L = r.levels[i];
    os << "eps " << L.eps << ": n_xy " << L.n_xy << ", dofs " << L.dofs << ", max rel gap " << r.max_rel_gap[i]
       << ", E-distances";
    for (const auto& d : L.e_distances) os << " " << d.distance;
    os << ", gaffney " << L.gaffney << ", volume change " << L.volume_change << ", " << L.seconds << " s\n";
  }
  os << "gaps decreasing: " << (r.gaps_decreasing ? "yes" : "no") << ", final gap below tolerance: "
     << (r.final_gap_ok ? "yes" : "no") << "\n";
  os << "E-distances decreasing:";
  for (bool b : r.e_decreasing) os << (b ? " yes" : " no");
  os << "\ngaffney variation " << r.gaffney_variation << "\n";
  os << "total " << r.seconds << " s\n";
}

}  // namespace cavity
