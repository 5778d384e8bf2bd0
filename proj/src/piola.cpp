#include "cavity/piola.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "cavity/error.hpp"
#include "cavity/quadrature.hpp"

namespace cavity {

namespace {

// C-infinity step: 0 for s <= 0, 1 for s >= 1, with its derivative.
double smooth_step(double s, double* ds) {
  if (s <= 0.0 || s >= 1.0) {
    if (ds) *ds = 0.0;
    return s <= 0.0 ? 0.0 : 1.0;
  }
  const double f = std::exp(-1.0 / s), g = std::exp(-1.0 / (1.0 - s));
  const double fp = f > 0.0 ? f / (s * s) : 0.0;
  const double gp = g > 0.0 ? -g / ((1.0 - s) * (1.0 - s)) : 0.0;
  const double den = f + g;
  if (ds) *ds = (fp * den - f * (fp + gp)) / (den * den);
  return f / den;
}

// Plateau on [lo, hi]: zero outside, one at distance >= width from both ends.
double plateau(double t, double lo, double hi, double width, double* dt) {
  double d1 = 0.0, d2 = 0.0;
  const double a = smooth_step((t - lo) / width, &d1);
  const double b = smooth_step((hi - t) / width, &d2);
  if (dt) *dt = (d1 * b - a * d2) / width;
  return a * b;
}

std::string fmt_point(const Vec3& p) {
  std::ostringstream os;
  os << "(" << p[0] << ", " << p[1] << ", " << p[2] << ")";
  return os.str();
}

bool same_chart(const AtlasChart& a, const AtlasChart& b) {
  if ((a.rotation - b.rotation).cwiseAbs().maxCoeff() > 1e-14) return false;
  for (int i = 0; i < 3; ++i)
    if (a.bounds[i].lo != b.bounds[i].lo || a.bounds[i].hi != b.bounds[i].hi) return false;
  return true;
}

// Closed chart test with a relative slack for points on the faces.
bool contains_closed(const AtlasChart& c, const LocalPoint& q) {
  for (int i = 0; i < 3; ++i) {
    const double x = i < 2 ? q.xbar[i] : q.x3;
    const double slack = 1e-12 * (1.0 + c.bounds[i].length());
    if (x < c.bounds[i].lo - slack || x > c.bounds[i].hi + slack) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

PartitionOfUnity::PartitionOfUnity(const Atlas& atlas, double margin, double transition)
    : charts_(atlas.charts), margin_(margin), transition_(transition) {
  if (!(margin >= 0.0) || !(transition > 0.0 && transition <= 0.5))
    fail(Errc::range_error, "partition needs margin >= 0 and transition in (0, 0.5]");
  for (const auto& c : charts_)
    for (int i = 0; i < 3; ++i)
      if (!(c.bounds[i].length() > 2.0 * margin))
        fail(Errc::range_error, "partition margin swallows a chart");
}

double PartitionOfUnity::bump(int j, const Vec3& p, Vec3* grad) const {
  const AtlasChart& c = charts_[j];
  const Vec3 q = c.rotation * p;
  double val = 1.0;
  Vec3 factor, dfactor;
  for (int i = 0; i < 3; ++i) {
    const double lo = c.bounds[i].lo + margin_, hi = c.bounds[i].hi - margin_;
    factor[i] = plateau(q[i], lo, hi, transition_ * (hi - lo), &dfactor[i]);
    val *= factor[i];
  }
  if (grad) {
    Vec3 gl;
    gl[0] = dfactor[0] * factor[1] * factor[2];
    gl[1] = factor[0] * dfactor[1] * factor[2];
    gl[2] = factor[0] * factor[1] * dfactor[2];
    *grad = c.rotation.transpose() * gl;
  }
  return val;
}

double PartitionOfUnity::value(int j, const Vec3& p) const {
  double sum = 0.0;
  for (int i = 0; i < size(); ++i) sum += bump(i, p);
  if (sum > 0.0) return bump(j, p) / sum;
  // Off every support. With margin == 0 this only happens on chart faces, where the first chart
  // holding the point takes all the weight; otherwise the point is uncovered.
  if (margin_ > 0.0) return 0.0;
  for (int i = 0; i < size(); ++i)
    if (contains_closed(charts_[i], charts_[i].to_local(p))) return i == j ? 1.0 : 0.0;
  return 0.0;
}

Vec3 PartitionOfUnity::gradient(int j, const Vec3& p) const {
  double sum = 0.0;
  Vec3 dsum = Vec3::Zero(), dj = Vec3::Zero();
  double bj = 0.0;
  for (int i = 0; i < size(); ++i) {
    Vec3 g;
    const double b = bump(i, p, &g);
    sum += b;
    dsum += g;
    if (i == j) {
      bj = b;
      dj = g;
    }
  }
  if (!(sum > 0.0)) return Vec3::Zero();
  // Divide stepwise: sum can be denormal near the edge of the supports.
  return dj / sum - (bj / sum) * (dsum / sum);
}

// ---------------------------------------------------------------------------------------------

Mat3 finite_difference_jacobian(const std::function<Vec3(const Vec3&)>& f, const Vec3& p, double step) {
  Mat3 J;
  for (int k = 0; k < 3; ++k) {
    Vec3 a = p, b = p;
    a[k] += step;
    b[k] -= step;
    J.col(k) = (f(a) - f(b)) / (2.0 * step);
  }
  return J;
}

Mat3 AnalyticVectorField::jacobian(const Vec3& p) const {
  if (du) return du(p);
  return finite_difference_jacobian(u, p, fd_step);
}

// ---------------------------------------------------------------------------------------------

PiolaMap::PiolaMap(AtlasDomain source, AtlasDomain target, double k, double kappa, double margin, int check_grid)
    : source_(std::move(source)), target_(std::move(target)), k_(k), kappa_(kappa > 0.0 ? kappa : k / 6.0) {
  const Atlas& A = source_.atlas;
  const Atlas& B = target_.atlas;
  if (A.s() != B.s() || A.s_prime != B.s_prime || A.s() != static_cast<int>(source_.profiles.size()) ||
      B.s_prime > static_cast<int>(target_.profiles.size()))
    fail(Errc::range_error, "source and target must share one atlas");
  for (int j = 0; j < A.s(); ++j)
    if (!same_chart(A.charts[j], B.charts[j])) fail(Errc::range_error, "source and target charts differ");
  if (!(k > 0.0)) fail(Errc::range_error, "k must be positive");
  if (check_grid < 2) fail(Errc::range_error, "check_grid must be at least 2");
  partition_ = PartitionOfUnity(A, margin);

  // k > sup |gt - g| and gt - k > a3 + rho, sampled on each boundary chart base.
  for (int j = 0; j < A.s_prime; ++j) {
    const Rect W = A.charts[j].base_rect();
    const double a3 = A.charts[j].bounds[2].lo;
    for (int iy = 0; iy < check_grid; ++iy)
      for (int ix = 0; ix < check_grid; ++ix) {
        const Vec2 x(W.x.lo + W.x.length() * ix / (check_grid - 1), W.y.lo + W.y.length() * iy / (check_grid - 1));
        const double gt = target_.profiles[j].value(x), g = source_.profiles[j].value(x);
        if (!(k > std::abs(gt - g))) {
          std::ostringstream msg;
          msg << "k = " << k << " does not exceed |gt - g| = " << std::abs(gt - g) << " in chart " << j;
          fail(Errc::range_error, msg.str());
        }
        if (!(gt - k > a3 + A.rho)) {
          std::ostringstream msg;
          msg << "transition layer gt - k = " << gt - k << " leaves the margin above a3 + rho = " << a3 + A.rho
              << " in chart " << j;
          fail(Errc::range_error, msg.str());
        }
      }
  }
}

PiolaMap PiolaMap::from_family(const PerturbationFamily& fam, double eps, double margin, int check_grid) {
  const double kappa = fam.kappa(eps);
  return PiolaMap(fam.base, fam.at(eps), 6.0 * kappa, kappa, margin, check_grid);
}

double PiolaMap::g_hat(int j, const Vec2& xbar) const { return target_.profiles[j].value(xbar) - k_; }

HJet PiolaMap::h_jet(int j, const Vec2& xbar, double x3) const {
  if (j < 0 || j >= source_.atlas.s_prime) fail(Errc::out_of_subgraph, "h_j is defined on boundary charts only");
  const AtlasChart& c = source_.atlas.charts[j];
  const ProfileSample gt = target_.profiles[j].eval(xbar);
  const double slack = 1e-12 * (1.0 + c.bounds[2].length());
  if (!c.bounds[0].contains_closed(xbar[0]) || !c.bounds[1].contains_closed(xbar[1]) || !(x3 > c.bounds[2].lo) ||
      x3 > gt.value + slack) {
    std::ostringstream msg;
    msg << "point (" << xbar[0] << ", " << xbar[1] << ", " << x3 << ") is outside the subgraph of chart " << j;
    fail(Errc::out_of_subgraph, msg.str());
  }
  HJet out;
  const double gh = gt.value - k_;
  if (x3 <= gh) return out;
  const ProfileSample g = source_.profiles[j].eval(xbar);
  const double d = gt.value - g.value;
  const Vec3 dd(gt.gradient[0] - g.gradient[0], gt.gradient[1] - g.gradient[1], 0.0);
  Mat3 ddd = Mat3::Zero();
  ddd.topLeftCorner<2, 2>() = gt.hessian - g.hessian;
  const double s = (x3 - gh) / k_;
  const Vec3 ds(-gt.gradient[0] / k_, -gt.gradient[1] / k_, 1.0 / k_);
  Mat3 dds = Mat3::Zero();
  dds.topLeftCorner<2, 2>() = -gt.hessian / k_;
  const double s2 = s * s, s3 = s2 * s;
  out.value = d * s3;
  out.gradient = dd * s3 + 3.0 * d * s2 * ds;
  out.hessian = ddd * s3 + 3.0 * s2 * (dd * ds.transpose() + ds * dd.transpose()) + 6.0 * d * s * ds * ds.transpose() +
                3.0 * d * s2 * dds;
  return out;
}

bool PiolaMap::chart_holds(int j, const Vec3& p) const {
  const AtlasChart& c = source_.atlas.charts[j];
  return contains_closed(c, c.to_local(p));
}

ChartMapValue PiolaMap::phi_psi_map(int j, const Vec3& p) const {
  if (j < 0 || j >= chart_count()) fail(Errc::out_of_domain, "chart index out of range");
  const AtlasChart& c = source_.atlas.charts[j];
  const LocalPoint q = c.to_local(p);
  if (!contains_closed(c, q)) fail(Errc::out_of_domain, "point " + fmt_point(p) + " is outside chart " + std::to_string(j));
  ChartMapValue out;
  out.image = p;
  if (!boundary_chart(j)) return out;
  const double top = target_.profiles[j].value(q.xbar);
  if (q.x3 > top + 1e-12 * (1.0 + c.bounds[2].length()))
    fail(Errc::out_of_domain, "point " + fmt_point(p) + " is above the target boundary in chart " + std::to_string(j));
  const HJet h = h_jet(j, q.xbar, q.x3);
  if (h.gradient.isZero(0.0) && h.value == 0.0) return out;
  const Mat3& R = c.rotation;
  Mat3 DPhi = Mat3::Identity();
  DPhi.row(2) -= h.gradient.transpose();
  out.image = R.transpose() * Vec3(q.xbar[0], q.xbar[1], q.x3 - h.value);
  out.jacobian = R.transpose() * DPhi * R;
  out.det = 1.0 - h.gradient[2];
  return out;
}

std::array<Mat3, 3> PiolaMap::psi_hessian(int j, const Vec3& p) const {
  std::array<Mat3, 3> out{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  if (!boundary_chart(j)) return out;
  const AtlasChart& c = source_.atlas.charts[j];
  const LocalPoint q = c.to_local(p);
  const HJet h = h_jet(j, q.xbar, q.x3);
  const Mat3& R = c.rotation;
  // Only the third local component of Phi is nonlinear: d^2 Phi_3 = -Hess h.
  const Mat3 H = -(R.transpose() * h.hessian * R);
  for (int m = 0; m < 3; ++m) out[m] = R(2, m) * H;
  return out;
}

bool PiolaMap::in_identity_region(const Vec3& p) const {
  for (int j = 0; j < source_.atlas.s_prime; ++j) {
    const AtlasChart& c = source_.atlas.charts[j];
    const LocalPoint q = c.to_local(p);
    if (contains_closed(c, q) && q.x3 > g_hat(j, q.xbar)) return false;
  }
  return true;
}

void PiolaMap::require_target(const Vec3& p) const {
  for (int j = 0; j < chart_count(); ++j) {
    const AtlasChart& c = target_.atlas.charts[j];
    const LocalPoint q = c.to_local(p);
    if (!contains_closed(c, q)) continue;
    if (!boundary_chart(j)) return;
    if (q.x3 <= target_.profiles[j].value(q.xbar) + 1e-12 * (1.0 + c.bounds[2].length())) return;
  }
  fail(Errc::out_of_domain, "point " + fmt_point(p) + " is outside the target domain");
}

namespace {

void require_flag(const AnalyticVectorField& phi) {
  if (!phi.tangential_trace_zero)
    fail(Errc::flag_missing, "pullback needs a field with vanishing tangential trace");
}

}  // namespace

Vec3 PiolaMap::pullback(const AnalyticVectorField& phi, const Vec3& p) const {
  require_flag(phi);
  require_target(p);
  Vec3 out = Vec3::Zero();
  for (int j = 0; j < chart_count(); ++j) {
    if (!chart_holds(j, p)) continue;
    const ChartMapValue m = phi_psi_map(j, p);
    const double w = partition_.value(j, m.image);
    if (w == 0.0) continue;
    out += m.jacobian.transpose() * (w * phi.value(m.image));
  }
  return out;
}

Vec3 PiolaMap::pullback_curl(const AnalyticVectorField& phi, const Vec3& p) const {
  require_flag(phi);
  require_target(p);
  Vec3 out = Vec3::Zero();
  for (int j = 0; j < chart_count(); ++j) {
    if (!chart_holds(j, p)) continue;
    const ChartMapValue m = phi_psi_map(j, p);
    if (std::abs(m.det) < 1e-8) fail(Errc::det_near_zero, "det DPsi vanishes at " + fmt_point(p));
    const double w = partition_.value(j, m.image);
    const Vec3 dw = partition_.gradient(j, m.image);
    if (w == 0.0 && dw.isZero(0.0)) continue;
    // curl (J^T F o Psi) = det J J^-1 (curl F) o Psi with F = w phi.
    const Vec3 curl_f = w * phi.curl(m.image) + dw.cross(phi.value(m.image));
    out += m.det * m.jacobian.inverse() * curl_f;
  }
  return out;
}

DivergenceTerms PiolaMap::pullback_div_terms(const AnalyticVectorField& phi, const Vec3& p) const {
  require_flag(phi);
  require_target(p);
  DivergenceTerms out;
  for (int j = 0; j < chart_count(); ++j) {
    if (!chart_holds(j, p)) continue;
    const ChartMapValue m = phi_psi_map(j, p);
    if (std::abs(m.det) < 1e-8) fail(Errc::det_near_zero, "det DPsi vanishes at " + fmt_point(p));
    const double w = partition_.value(j, m.image);
    const Vec3 dw = partition_.gradient(j, m.image);
    if (w == 0.0 && dw.isZero(0.0)) continue;
    const Vec3 v = phi.value(m.image);
    const Vec3 F = w * v;
    const Mat3 DF = w * phi.jacobian(m.image) + v * dw.transpose();
    out.a += (DF * m.jacobian * m.jacobian.transpose()).trace();
    const auto H = psi_hessian(j, p);
    for (int c = 0; c < 3; ++c) out.b += H[c].trace() * F[c];
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

namespace {

struct XIntegrand {
  double value = 0.0;
  double curl = 0.0;
  double div = 0.0;
  double total() const { return value + curl + div; }
};

// Chart-wise tensor quadrature of f over {a3 < x3 < top(x)} in chart j, weighted by the
// partition. The vertical range is split at `split(x)` when it lies inside.
template <class Top, class Split, class F>
void integrate_chart(const AtlasChart& c, const PartitionOfUnity& pu, int j, const PiolaQuadrature& quad, Top top,
                     Split split, F f) {
  const LineRule rule = gauss_legendre(quad.points);
  const Rect W = c.base_rect();
  const double hx = W.x.length() / quad.cells, hy = W.y.length() / quad.cells;
  const double a3 = c.bounds[2].lo;
  for (int cy = 0; cy < quad.cells; ++cy)
    for (int cx = 0; cx < quad.cells; ++cx)
      for (int iy = 0; iy < quad.points; ++iy)
        for (int ix = 0; ix < quad.points; ++ix) {
          const Vec2 xbar(W.x.lo + hx * (cx + rule.nodes[ix]), W.y.lo + hy * (cy + rule.nodes[iy]));
          const double wxy = hx * hy * rule.weights[ix] * rule.weights[iy];
          const double t = std::min(top(xbar), c.bounds[2].hi);
          if (!(t > a3)) continue;
          const double s = split(xbar);
          double cuts[3] = {a3, t, t};
          int segs = 1;
          if (s > a3 && s < t) {
            cuts[1] = s;
            segs = 2;
          }
          for (int seg = 0; seg < segs; ++seg) {
            const double lo = cuts[seg], len = cuts[seg + 1] - lo;
            for (int iz = 0; iz < quad.points; ++iz) {
              const Vec3 p = c.to_global({xbar, lo + len * rule.nodes[iz]});
              const double w = pu.value(j, p);
              if (w == 0.0) continue;
              f(p, w * wxy * len * rule.weights[iz]);
            }
          }
        }
}

}  // namespace

PiolaReport verify_piolamain(const AnalyticVectorField& phi, const PiolaMap& map, PiolaQuadrature quad) {
  if (quad.points < 1 || quad.points > 20 || quad.cells < 1)
    fail(Errc::quadrature_degenerate, "quadrature needs 1..20 points and at least one cell per axis");
  require_flag(phi);
  PiolaReport rep;
  rep.min_det = std::numeric_limits<double>::infinity();
  rep.max_det = -rep.min_det;
  CompensatedSum src, tgt, gap;
  const auto& atlas = map.source().atlas;
  for (int j = 0; j < atlas.s(); ++j) {
    const AtlasChart& c = atlas.charts[j];
    const bool boundary = map.boundary_chart(j);
    const auto& g = map.source().profiles;
    const auto& gt = map.target().profiles;
    const auto no_top = [&](const Vec2&) { return c.bounds[2].hi; };
    const auto no_split = [&](const Vec2&) { return -std::numeric_limits<double>::infinity(); };

    // ||phi||_X over the source.
    const auto source_term = [&](const Vec3& p, double w) {
      const Mat3 J = phi.jacobian(p);
      src.add(w * (phi.value(p).squaredNorm() + curl_from_jacobian(J).squaredNorm() + J.trace() * J.trace()));
    };
    // ||P phi||_X over the target, with the layer split at gh.
    const auto target_term = [&](const Vec3& p, double w) {
      const Vec3 v = map.pullback(phi, p);
      const Vec3 cu = map.pullback_curl(phi, p);
      const double dv = map.pullback_div(phi, p);
      tgt.add(w * (v.squaredNorm() + cu.squaredNorm() + dv * dv));
      if (boundary) {
        const ChartMapValue m = map.phi_psi_map(j, p);
        rep.min_det = std::min(rep.min_det, m.det);
        rep.max_det = std::max(rep.max_det, m.det);
      }
      ++rep.nodes;
    };
    // ||P phi - phi||_X over the overlap.
    const auto overlap_term = [&](const Vec3& p, double w) {
      const Vec3 v = map.pullback(phi, p) - phi.value(p);
      const Mat3 J = phi.jacobian(p);
      const Vec3 cu = map.pullback_curl(phi, p) - curl_from_jacobian(J);
      const double dv = map.pullback_div(phi, p) - J.trace();
      gap.add(w * (v.squaredNorm() + cu.squaredNorm() + dv * dv));
      if (map.in_identity_region(p)) rep.identity_on_compact = std::max(rep.identity_on_compact, v.norm());
    };

    const PartitionOfUnity& pu = map.partition();
    if (boundary) {
      const auto gh = [&](const Vec2& x) { return map.g_hat(j, x); };
      integrate_chart(c, pu, j, quad, [&](const Vec2& x) { return g[j].value(x); }, gh, source_term);
      integrate_chart(c, pu, j, quad, [&](const Vec2& x) { return gt[j].value(x); }, gh, target_term);
      integrate_chart(
          c, pu, j, quad, [&](const Vec2& x) { return std::min(g[j].value(x), gt[j].value(x)); }, gh, overlap_term);
    } else {
      integrate_chart(c, pu, j, quad, no_top, no_split, source_term);
      integrate_chart(c, pu, j, quad, no_top, no_split, target_term);
      integrate_chart(c, pu, j, quad, no_top, no_split, overlap_term);
    }
  }
  if (!std::isfinite(rep.min_det)) rep.min_det = rep.max_det = 1.0;
  rep.norm_source = std::sqrt(std::max(0.0, src.value()));
  rep.norm_target = std::sqrt(std::max(0.0, tgt.value()));
  rep.overlap_distance = std::sqrt(std::max(0.0, gap.value()));
  return rep;
}

PiolaBounds sample_piola_bounds(const PiolaMap& map, int grid_n, int layers) {
  if (grid_n < 2 || layers < 1) fail(Errc::range_error, "sampling needs grid_n >= 2 and layers >= 1");
  PiolaBounds b;
  b.min_det = std::numeric_limits<double>::infinity();
  b.max_det = -b.min_det;
  const auto& atlas = map.source().atlas;
  const double kappa = map.kappa();
  for (int j = 0; j < atlas.s_prime; ++j) {
    const AtlasChart& c = atlas.charts[j];
    const Rect W = c.base_rect();
    const Mat3& R = c.rotation;
    for (int iy = 0; iy < grid_n; ++iy)
      for (int ix = 0; ix < grid_n; ++ix) {
        const Vec2 x(W.x.lo + W.x.length() * ix / (grid_n - 1), W.y.lo + W.y.length() * iy / (grid_n - 1));
        const ProfileSample gt = map.target().profiles[j].eval(x);
        const ProfileSample g = map.source().profiles[j].eval(x);
        const double d0 = std::abs(gt.value - g.value);
        const double d1 = (gt.gradient - g.gradient).cwiseAbs().maxCoeff();
        const double d2 = (gt.hessian - g.hessian).cwiseAbs().maxCoeff();
        b.gap_derivative[0] = std::max(b.gap_derivative[0], d0);
        b.gap_derivative[1] = std::max(b.gap_derivative[1], d1);
        b.gap_derivative[2] = std::max(b.gap_derivative[2], d2);
        const double gh = gt.value - map.k();
        for (int l = 0; l <= layers; ++l) {
          const double x3 = gh + map.k() * l / layers;
          const HJet h = map.h_jet(j, x, x3);
          const double h0 = std::abs(h.value), h1 = h.gradient.cwiseAbs().maxCoeff(), h2 = h.hessian.cwiseAbs().maxCoeff();
          b.h_derivative[0] = std::max(b.h_derivative[0], h0);
          b.h_derivative[1] = std::max(b.h_derivative[1], h1);
          b.h_derivative[2] = std::max(b.h_derivative[2], h2);
          // Pointwise ratio against the right-hand side of the Leibniz estimate.
          const double r0 = d0 > 0.0 ? h0 / d0 : 0.0;
          const double rhs1 = d1 + d0 / kappa, rhs2 = d2 + d1 / kappa + d0 / (kappa * kappa);
          const double r1 = rhs1 > 0.0 ? h1 / rhs1 : 0.0, r2 = rhs2 > 0.0 ? h2 / rhs2 : 0.0;
          b.estimate_constant = std::max({b.estimate_constant, r0, r1, r2});
          const double det = 1.0 - h.gradient[2];
          b.min_det = std::min(b.min_det, det);
          b.max_det = std::max(b.max_det, det);
          const Mat3 H = R.transpose() * h.hessian * R;
          for (int m = 0; m < 3; ++m) b.psi_second = std::max(b.psi_second, std::abs(R(2, m)) * H.diagonal().cwiseAbs().maxCoeff());
        }
      }
  }
  if (!std::isfinite(b.min_det)) b.min_det = b.max_det = 1.0;
  return b;
}

void write_piola_csv(std::ostream& os, const std::vector<PiolaReport>& rows) {
  os.precision(12);
  os << "# cavity-piola 1\n";
  os << "eps,norm_source,norm_target,overlap_distance,min_det,max_det\n";
  for (const auto& r : rows)
    os << r.eps << "," << r.norm_source << "," << r.norm_target << "," << r.overlap_distance << "," << r.min_det << ","
       << r.max_det << "\n";
}

const std::vector<std::string>& box_test_field_names() {
  static const std::vector<std::string> names{"gradient", "mixed", "transverse"};
  return names;
}

AnalyticVectorField box_test_field(std::string_view name, const Rect& W, double z_lo, double z_hi) {
  if (!(W.x.length() > 0.0 && W.y.length() > 0.0 && z_hi > z_lo)) fail(Errc::range_error, "empty box");
  constexpr double pi = 3.14159265358979323846;
  const Vec3 lo(W.x.lo, W.y.lo, z_lo);
  const Vec3 k(pi / W.x.length(), pi / W.y.length(), pi / (z_hi - z_lo));
  // Per-axis sin and cos of pi s_i, plus s_3 itself.
  struct Trig {
    Vec3 s, c;
    double s3;
  };
  const auto trig = [lo, k](const Vec3& p) {
    Trig t;
    for (int i = 0; i < 3; ++i) {
      t.s[i] = std::sin(k[i] * (p[i] - lo[i]));
      t.c[i] = std::cos(k[i] * (p[i] - lo[i]));
    }
    t.s3 = k[2] * (p[2] - lo[2]) / pi;
    return t;
  };
  AnalyticVectorField f;
  f.tangential_trace_zero = true;
  if (name == "gradient") {
    f.u = [trig, k](const Vec3& p) {
      const Trig t = trig(p);
      return Vec3(k[0] * t.c[0] * t.s[1] * t.s[2], k[1] * t.s[0] * t.c[1] * t.s[2], k[2] * t.s[0] * t.s[1] * t.c[2]);
    };
    f.du = [trig, k](const Vec3& p) {
      const Trig t = trig(p);
      Mat3 J;
      J(0, 0) = -k[0] * k[0] * t.s[0] * t.s[1] * t.s[2];
      J(1, 1) = -k[1] * k[1] * t.s[0] * t.s[1] * t.s[2];
      J(2, 2) = -k[2] * k[2] * t.s[0] * t.s[1] * t.s[2];
      J(0, 1) = J(1, 0) = k[0] * k[1] * t.c[0] * t.c[1] * t.s[2];
      J(0, 2) = J(2, 0) = k[0] * k[2] * t.c[0] * t.s[1] * t.c[2];
      J(1, 2) = J(2, 1) = k[1] * k[2] * t.s[0] * t.c[1] * t.c[2];
      return J;
    };
  } else if (name == "mixed") {
    f.u = [trig](const Vec3& p) {
      const Trig t = trig(p);
      return Vec3(t.c[0] * t.s[1] * t.s[2], 0.0, t.s[0] * t.s[1] * (1.0 + t.s3));
    };
    f.du = [trig, k](const Vec3& p) {
      const Trig t = trig(p);
      Mat3 J = Mat3::Zero();
      J.row(0) << -k[0] * t.s[0] * t.s[1] * t.s[2], k[1] * t.c[0] * t.c[1] * t.s[2], k[2] * t.c[0] * t.s[1] * t.c[2];
      J.row(2) << k[0] * t.c[0] * t.s[1] * (1.0 + t.s3), k[1] * t.s[0] * t.c[1] * (1.0 + t.s3),
          t.s[0] * t.s[1] * k[2] / pi;
      return J;
    };
  } else if (name == "transverse") {
    f.u = [trig](const Vec3& p) {
      const Trig t = trig(p);
      return Vec3(0.0, 0.0, t.s[0] * t.s[1]);
    };
    f.du = [trig, k](const Vec3& p) {
      const Trig t = trig(p);
      Mat3 J = Mat3::Zero();
      J(2, 0) = k[0] * t.c[0] * t.s[1];
      J(2, 1) = k[1] * t.s[0] * t.c[1];
      return J;
    };
  } else {
    fail(Errc::range_error, "unknown test field '" + std::string(name) + "'");
  }
  return f;
}

}  // namespace cavity
