#include "cavity/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavity/error.hpp"

namespace cavity {

namespace {

std::string fmt_point(const Vec3& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << p[0] << ", " << p[1] << ", " << p[2] << ")";
  return os.str();
}

// Grid of grid_n x grid_n points covering the closed rectangle.
Vec2 grid_point(const Rect& W, int grid_n, int i, int j) {
  const double tx = grid_n > 1 ? static_cast<double>(i) / (grid_n - 1) : 0.5;
  const double ty = grid_n > 1 ? static_cast<double>(j) / (grid_n - 1) : 0.5;
  return {W.x.lo + tx * W.x.length(), W.y.lo + ty * W.y.length()};
}

// All partial derivatives of order `order` at x: 1, 2 or 3 numbers.
std::vector<double> partials(const ProfileSample& s, int order) {
  switch (order) {
    case 0: return {s.value};
    case 1: return {s.gradient[0], s.gradient[1]};
    default: return {s.hessian(0, 0), s.hessian(0, 1), s.hessian(1, 1)};
  }
}

ProfileSample sample_checked(const ProfileFunction& g, const Vec2& x, int order) {
  ProfileSample s = g.eval(x);
  if (order >= 2 && !s.hessian_defined) {
    std::ostringstream msg;
    msg << "second derivatives of the " << to_string(g.kind()) << " profile are unavailable at (" << x[0] << ", "
        << x[1] << ")";
    fail(Errc::derivative_unavailable, msg.str());
  }
  return s;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    const bool both_zero = v[i] == 0.0 && v[i - 1] == 0.0;
    if (!(v[i] < v[i - 1] || both_zero)) return false;
  }
  return true;
}

}  // namespace

LocalPoint AtlasChart::to_local(const Vec3& p) const {
  const Vec3 q = rotation * p;
  return {Vec2(q[0], q[1]), q[2]};
}

Vec3 AtlasChart::to_global(const LocalPoint& q) const { return rotation.transpose() * q.as_vec(); }

bool AtlasChart::contains_local(const LocalPoint& q) const {
  return bounds[0].contains(q.xbar[0]) && bounds[1].contains(q.xbar[1]) && bounds[2].contains(q.x3);
}

void AtlasChart::validate() const {
  const double orth = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(orth < 1e-12) || !(rotation.determinant() > 0.0))
    fail(Errc::range_error, "chart rotation is not a proper rotation");
  for (int i = 0; i < 3; ++i) {
    if (!(bounds[i].lo < bounds[i].hi)) {
      std::ostringstream msg;
      msg << "chart interval " << i << " is empty: [" << bounds[i].lo << ", " << bounds[i].hi << "]";
      fail(Errc::range_error, msg.str());
    }
  }
}

void Atlas::validate() const {
  if (!(rho > 0.0)) fail(Errc::range_error, "atlas rho must be positive");
  if (s_prime < 0 || s_prime > s()) fail(Errc::range_error, "atlas s_prime must lie in [0, number of charts]");
  for (int j = 0; j < s(); ++j) {
    charts[j].validate();
    if (charts[j].touches_boundary != (j < s_prime))
      fail(Errc::range_error, "exactly the first s_prime charts must touch the boundary");
  }
}

void AtlasDomain::validate(int grid_n) const {
  atlas.validate();
  if (static_cast<int>(profiles.size()) != atlas.s_prime)
    fail(Errc::range_error, "domain needs exactly one profile per boundary chart");
  constexpr double slack = 1e-12;
  for (int j = 0; j < atlas.s_prime; ++j) {
    const AtlasChart& c = atlas.charts[j];
    const Rect W = c.base_rect();
    for (int iy = 0; iy < grid_n; ++iy) {
      for (int ix = 0; ix < grid_n; ++ix) {
        const Vec2 x = grid_point(W, grid_n, ix, iy);
        const double g = profiles[j].value(x);
        if (!(g >= c.bounds[2].lo + atlas.rho - slack && g <= c.bounds[2].hi - atlas.rho + slack)) {
          std::ostringstream msg;
          msg << "profile of chart " << j << " leaves the band [a3 + rho, b3 - rho] at (" << x[0] << ", " << x[1]
              << "): g = " << g;
          fail(Errc::range_error, msg.str());
        }
      }
    }
  }
  if (regularity.M > 0.0) {
    const double m = check_atlas_class(*this, regularity.k, regularity.gamma, grid_n);
    if (m > regularity.M * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "declared class bound M = " << regularity.M << " is below the sampled norm " << m;
      fail(Errc::range_error, msg.str());
    }
  }
}

LocalPoint chart_local_coords(const AtlasChart& chart, const Vec3& p) {
  const LocalPoint q = chart.to_local(p);
  for (int i = 0; i < 3; ++i) {
    const double t = i < 2 ? q.xbar[i] : q.x3;
    if (!chart.bounds[i].contains_closed(t)) fail(Errc::point_outside_chart, "point " + fmt_point(p) + " is outside the chart");
  }
  return q;
}

bool domain_contains(const AtlasDomain& dom, const Vec3& p) {
  for (int j = 0; j < dom.atlas.s(); ++j) {
    const AtlasChart& c = dom.atlas.charts[j];
    const LocalPoint q = c.to_local(p);
    if (!c.contains_local(q)) continue;
    if (j < dom.atlas.s_prime) return q.x3 < dom.profiles[j].value(q.xbar);
    return true;
  }
  return false;
}

double profile_class_norm(const ProfileFunction& g, const Rect& W, int k, double gamma, int grid_n) {
  if (k < 0 || k > 2) fail(Errc::derivative_unavailable, "class norms are available for k = 0, 1, 2 only");
  if (grid_n < 2) fail(Errc::range_error, "grid_n must be at least 2");
  const int n = grid_n;
  const int ncomp = k == 0 ? 1 : (k == 1 ? 2 : 3);
  std::vector<double> top(static_cast<std::size_t>(n) * n * ncomp);
  double sup = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const ProfileSample s = sample_checked(g, grid_point(W, n, ix, iy), k);
      for (int order = 0; order <= k; ++order)
        for (double d : partials(s, order)) sup = std::max(sup, std::abs(d));
      const auto d = partials(s, k);
      std::copy(d.begin(), d.end(), top.begin() + (static_cast<std::size_t>(iy) * n + ix) * ncomp);
    }
  }

  auto at = [&](int ix, int iy, int c) { return top[(static_cast<std::size_t>(iy) * n + ix) * ncomp + c]; };
  double hoelder = 0.0;
  auto pair = [&](int ax, int ay, int bx, int by) {
    const double dist = (grid_point(W, n, ax, ay) - grid_point(W, n, bx, by)).norm();
    if (dist == 0.0) return;
    const double denom = std::pow(dist, gamma);
    for (int c = 0; c < ncomp; ++c) hoelder = std::max(hoelder, std::abs(at(ax, ay, c) - at(bx, by, c)) / denom);
  };
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      if (ix + 1 < n) pair(ix, iy, ix + 1, iy);
      if (iy + 1 < n) pair(ix, iy, ix, iy + 1);
      if (ix + 1 < n && iy + 1 < n) pair(ix, iy, ix + 1, iy + 1);
      if (ix + 1 < n && iy > 0) pair(ix, iy, ix + 1, iy - 1);
    }
  }
  // Long-range pairs on a subgrid of about 32 points per axis.
  const int stride = std::max(1, (n - 1) / 31);
  std::vector<std::pair<int, int>> sub;
  for (int iy = 0; iy < n; iy += stride)
    for (int ix = 0; ix < n; ix += stride) sub.emplace_back(ix, iy);
  for (std::size_t a = 0; a < sub.size(); ++a)
    for (std::size_t b = a + 1; b < sub.size(); ++b) pair(sub[a].first, sub[a].second, sub[b].first, sub[b].second);
  return sup + hoelder;
}

double check_atlas_class(const AtlasDomain& dom, int k, double gamma, int grid_n) {
  double m = 0.0;
  for (int j = 0; j < dom.atlas.s_prime; ++j)
    m = std::max(m, profile_class_norm(dom.profiles[j], dom.atlas.charts[j].base_rect(), k, gamma, grid_n));
  return m;
}

double sampled_derivative_gap(const ProfileFunction& f, const ProfileFunction& g, const Rect& W, int order,
                              int grid_n) {
  double m = 0.0;
  for (int iy = 0; iy < grid_n; ++iy) {
    for (int ix = 0; ix < grid_n; ++ix) {
      const Vec2 x = grid_point(W, grid_n, ix, iy);
      const auto a = partials(sample_checked(f, x, order), order);
      const auto b = partials(sample_checked(g, x, order), order);
      for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, std::abs(a[c] - b[c]));
    }
  }
  return m;
}

PerturbationFamily PerturbationFamily::oscillatory(AtlasDomain base, double alpha, CosineCell cell, Cutoff cutoff,
                                                   double kappa_exponent, int chart) {
  if (chart < 0 || chart >= base.atlas.s_prime) fail(Errc::range_error, "perturbed chart index out of range");
  if (base.profiles[chart].kind() != ProfileKind::constant)
    fail(Errc::range_error, "oscillatory families perturb a constant base profile");
  if (!(kappa_exponent > 0.0)) fail(Errc::range_error, "kappa exponent must be positive");
  const double top = base.profiles[chart].value(Vec2::Zero());
  PerturbationFamily fam;
  fam.base = base;
  fam.perturbed = [base, alpha, cell, cutoff, chart, top](double eps) {
    AtlasDomain d = base;
    d.profiles[chart] = ProfileFunction::oscillatory(alpha, eps, cell, cutoff).shifted(top);
    return d;
  };
  fam.kappa = [kappa_exponent](double eps) { return std::pow(eps, kappa_exponent); };
  return fam;
}

PerturbationFamily PerturbationFamily::identical(AtlasDomain base) {
  PerturbationFamily fam;
  fam.base = base;
  fam.perturbed = [base](double) { return base; };
  fam.kappa = [](double eps) { return eps; };
  return fam;
}

ConvergenceReport check_convergence_conditions(const PerturbationFamily& fam, const std::vector<double>& eps_list,
                                               int grid_n) {
  ConvergenceReport rep;
  const AtlasDomain& base = fam.base;
  for (double eps : eps_list) {
    const AtlasDomain d = fam.at(eps);
    ConvergenceRow row;
    row.eps = eps;
    row.kappa = fam.kappa(eps);
    for (int order = 0; order <= 2; ++order) {
      double gap = 0.0;
      for (int j = 0; j < base.atlas.s_prime; ++j)
        gap = std::max(gap, sampled_derivative_gap(d.profiles[j], base.profiles[j],
                                                   base.atlas.charts[j].base_rect(), order, grid_n));
      if (order == 0) row.sup_gap = gap;
      row.ratios[order] = gap / std::pow(row.kappa, 1.5 - order);
    }
    row.kappa_dominates = row.kappa > row.sup_gap;
    rep.rows.push_back(row);
  }
  std::vector<double> kappas;
  for (const auto& r : rep.rows) kappas.push_back(r.kappa);
  rep.kappa_decreasing = strictly_decreasing(kappas);
  for (int order = 0; order <= 2; ++order) {
    std::vector<double> v;
    for (const auto& r : rep.rows) v.push_back(r.ratios[order]);
    rep.decreasing[order] = strictly_decreasing(v);
  }
  return rep;
}

AtlasDomain box_domain(const Rect& W, double z_lo, double z_hi, double top, double rho) {
  AtlasDomain d;
  d.atlas.rho = rho;
  d.atlas.s_prime = 1;
  AtlasChart c;
  c.bounds = {W.x, W.y, Interval{z_lo, z_hi}};
  d.atlas.charts.push_back(c);
  d.profiles.push_back(ProfileFunction::constant(top));
  d.regularity = {1, 1.0, 0.0};
  return d;
}

}  // namespace cavity
