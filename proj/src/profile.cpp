#include "cavity/profile.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cavity/error.hpp"

namespace cavity {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

ProfileSample eval_impl(const ProfileFunction::Constant& p, const Vec2&) {
  ProfileSample s;
  s.value = p.c;
  return s;
}

ProfileSample eval_impl(const ProfileFunction::Oscillatory& p, const Vec2& x) {
  const ProfileSample b = eval_cell(p.cell, x / p.eps);
  const ProfileSample psi = eval_cutoff(p.cutoff, x);
  const double ea = std::pow(p.eps, p.alpha);
  const double ea1 = ea / p.eps;
  const double ea2 = ea1 / p.eps;

  ProfileSample s;
  s.value = ea * b.value * psi.value;
  s.gradient = ea1 * b.gradient * psi.value + ea * b.value * psi.gradient;
  s.hessian = ea2 * b.hessian * psi.value +
              ea1 * (b.gradient * psi.gradient.transpose() + psi.gradient * b.gradient.transpose()) +
              ea * b.value * psi.hessian;
  return s;
}

ProfileSample eval_impl(const ProfileFunction::HoelderPower& p, const Vec2& x) {
  const Vec2 d = x - p.center;
  const double r = d.norm();
  ProfileSample s;
  if (r == 0.0) {
    s.value = 0.0;
    s.gradient.setZero();
    if (p.power > 2.0) {
      s.hessian.setZero();
    } else if (p.power == 2.0) {
      s.hessian = 2.0 * p.coefficient * Mat2::Identity();
    } else {
      s.hessian_defined = false;
    }
    return s;
  }
  const double rp2 = std::pow(r, p.power - 2.0);
  s.value = p.coefficient * rp2 * r * r;
  s.gradient = p.coefficient * p.power * rp2 * d;
  s.hessian = p.coefficient * p.power * rp2 *
              (Mat2::Identity() + (p.power - 2.0) * d * d.transpose() / (r * r));
  return s;
}

ProfileSample eval_impl(const ProfileFunction::LogCounterexample& p, const Vec2& x) {
  const double t = std::abs(x[0]);
  const double sign = x[0] < 0.0 ? -1.0 : 1.0;
  ProfileSample s;
  if (t == 0.0) {
    s.hessian_defined = false;
    return s;
  }
  const double t0 = p.cutoff;
  if (t <= t0) {
    const double l = std::log(t);
    s.value = t / l;
    s.gradient = Vec2(sign * (l - 1.0) / (l * l), 0.0);
    s.hessian(0, 0) = (2.0 - l) / (t * l * l * l);
    return s;
  }
  const double l0 = std::log(t0);
  const double v0 = t0 / l0;
  const double d0 = (l0 - 1.0) / (l0 * l0);
  s.value = v0 + d0 * (t - t0);
  s.gradient = Vec2(sign * d0, 0.0);
  return s;
}

// Catmull-Rom weights for the four samples p_{i-1}, p_i, p_{i+1}, p_{i+2} and their derivatives.
struct CubicWeights {
  std::array<double, 4> w, dw, ddw;
};

CubicWeights catmull_rom(double t) {
  const double t2 = t * t, t3 = t2 * t;
  CubicWeights c;
  c.w = {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
  c.dw = {0.5 * (-3 * t2 + 4 * t - 1), 0.5 * (9 * t2 - 10 * t), 0.5 * (-9 * t2 + 8 * t + 1), 0.5 * (3 * t2 - 2 * t)};
  c.ddw = {0.5 * (-6 * t + 4), 0.5 * (18 * t - 10), 0.5 * (-18 * t + 8), 0.5 * (6 * t - 2)};
  return c;
}

// Locates a coordinate in a uniform 1D grid; `inside` is false when the coordinate was clamped.
struct GridPos {
  int cell;
  double t;
  bool inside;
};

GridPos locate(double x, const Interval& iv, int n) {
  const double h = iv.length() / (n - 1);
  bool inside = true;
  if (x <= iv.lo) {
    x = iv.lo;
    inside = false;
  } else if (x >= iv.hi) {
    x = iv.hi;
    inside = false;
  }
  const double u = (x - iv.lo) / h;
  int i = static_cast<int>(std::floor(u));
  if (i > n - 2) i = n - 2;
  if (i < 0) i = 0;
  return {i, u - i, inside};
}

ProfileSample eval_impl(const ProfileFunction::Tabulated& p, const Vec2& x) {
  const GridPos gx = locate(x[0], p.region.x, p.nx);
  const GridPos gy = locate(x[1], p.region.y, p.ny);
  const double hx = p.region.x.length() / (p.nx - 1);
  const double hy = p.region.y.length() / (p.ny - 1);

  // Samples with linear extrapolation one cell past each edge.
  auto sample = [&](int ix, int iy) {
    auto at = [&](int i, int j) { return p.values[static_cast<std::size_t>(j) * p.nx + i]; };
    auto along_x = [&](int i, int j) {
      if (i < 0) return 2 * at(0, j) - at(1, j);
      if (i >= p.nx) return 2 * at(p.nx - 1, j) - at(p.nx - 2, j);
      return at(i, j);
    };
    if (iy < 0) return 2 * along_x(ix, 0) - along_x(ix, 1);
    if (iy >= p.ny) return 2 * along_x(ix, p.ny - 1) - along_x(ix, p.ny - 2);
    return along_x(ix, iy);
  };

  const CubicWeights cx = catmull_rom(gx.t);
  const CubicWeights cy = catmull_rom(gy.t);
  ProfileSample s;
  s.gradient.setZero();
  s.hessian.setZero();
  for (int b = 0; b < 4; ++b) {
    for (int a = 0; a < 4; ++a) {
      const double v = sample(gx.cell - 1 + a, gy.cell - 1 + b);
      s.value += cx.w[a] * cy.w[b] * v;
      s.gradient[0] += cx.dw[a] * cy.w[b] * v;
      s.gradient[1] += cx.w[a] * cy.dw[b] * v;
      s.hessian(0, 0) += cx.ddw[a] * cy.w[b] * v;
      s.hessian(1, 1) += cx.w[a] * cy.ddw[b] * v;
      s.hessian(0, 1) += cx.dw[a] * cy.dw[b] * v;
    }
  }
  s.gradient[0] /= hx;
  s.gradient[1] /= hy;
  s.hessian(0, 0) /= hx * hx;
  s.hessian(1, 1) /= hy * hy;
  s.hessian(0, 1) /= hx * hy;
  if (!gx.inside) {
    s.gradient[0] = 0.0;
    s.hessian(0, 0) = s.hessian(0, 1) = 0.0;
  }
  if (!gy.inside) {
    s.gradient[1] = 0.0;
    s.hessian(1, 1) = s.hessian(0, 1) = 0.0;
  }
  s.hessian(1, 0) = s.hessian(0, 1);
  return s;
}

}  // namespace

std::string_view to_string(ProfileKind kind) noexcept {
  switch (kind) {
    case ProfileKind::constant: return "constant";
    case ProfileKind::oscillatory: return "oscillatory";
    case ProfileKind::hoelder_power: return "hoelder_power";
    case ProfileKind::log_counterexample: return "log_counterexample";
    case ProfileKind::tabulated: return "tabulated";
  }
  return "unknown";
}

std::optional<ProfileKind> profile_kind_from_string(std::string_view name) noexcept {
  for (auto k : {ProfileKind::constant, ProfileKind::oscillatory, ProfileKind::hoelder_power,
                 ProfileKind::log_counterexample, ProfileKind::tabulated}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

ProfileSample eval_cell(const CosineCell& cell, const Vec2& y) {
  const double c1 = std::cos(two_pi * y[0]), s1 = std::sin(two_pi * y[0]);
  const double c2 = std::cos(two_pi * y[1]), s2 = std::sin(two_pi * y[1]);
  const double a = cell.amplitude;
  ProfileSample s;
  s.value = cell.offset + a * c1 * c2;
  s.gradient = Vec2(-two_pi * a * s1 * c2, -two_pi * a * c1 * s2);
  const double k2 = two_pi * two_pi * a;
  s.hessian << -k2 * c1 * c2, k2 * s1 * s2, k2 * s1 * s2, -k2 * c1 * c2;
  return s;
}

ProfileSample eval_cutoff(const Cutoff& cutoff, const Vec2& x) {
  ProfileSample s;
  if (cutoff.kind == Cutoff::Kind::one) {
    s.value = 1.0;
    return s;
  }
  const double r2inv = 1.0 / (cutoff.radius * cutoff.radius);
  const Vec2 d = x - cutoff.center;
  const double q = d.squaredNorm() * r2inv;
  if (q >= 1.0) return ProfileSample{0.0, Vec2::Zero(), Mat2::Zero(), true};
  const double om = 1.0 - q;
  const double v = std::exp(1.0 - 1.0 / om);
  const double dq = -1.0 / (om * om);        // d(exponent)/dq
  const double ddq = -2.0 / (om * om * om);  // d^2(exponent)/dq^2
  const Vec2 gq = 2.0 * r2inv * d;
  s.value = v;
  s.gradient = v * dq * gq;
  s.hessian = v * ((dq * dq + ddq) * gq * gq.transpose() + dq * 2.0 * r2inv * Mat2::Identity());
  return s;
}

ProfileFunction ProfileFunction::constant(double c) { return ProfileFunction(Constant{c}); }

ProfileFunction ProfileFunction::oscillatory(double alpha, double eps, CosineCell cell, Cutoff cutoff) {
  if (!(eps > 0.0)) fail(Errc::range_error, "oscillatory profile: eps must be positive");
  if (cutoff.kind == Cutoff::Kind::bump && !(cutoff.radius > 0.0))
    fail(Errc::range_error, "oscillatory profile: cutoff radius must be positive");
  return ProfileFunction(Oscillatory{alpha, eps, cell, cutoff});
}

ProfileFunction ProfileFunction::hoelder_power(double coefficient, double power, Vec2 center) {
  if (!(power > 1.0)) fail(Errc::range_error, "hoelder_power profile: power must exceed 1");
  return ProfileFunction(HoelderPower{coefficient, power, center});
}

ProfileFunction ProfileFunction::log_counterexample(double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) fail(Errc::range_error, "log_counterexample profile: cutoff must lie in (0,1)");
  return ProfileFunction(LogCounterexample{cutoff});
}

ProfileFunction ProfileFunction::tabulated(Rect region, int nx, int ny, std::vector<double> values) {
  if (nx < 2 || ny < 2 || static_cast<std::size_t>(nx) * ny != values.size()) {
    std::ostringstream msg;
    msg << "tabulated profile: expected " << nx << "x" << ny << " samples (at least 2x2), got " << values.size();
    fail(Errc::range_error, msg.str());
  }
  if (!(region.x.length() > 0.0 && region.y.length() > 0.0)) fail(Errc::range_error, "tabulated profile: empty region");
  return ProfileFunction(Tabulated{region, nx, ny, std::move(values)});
}

ProfileFunction ProfileFunction::scaled(double factor) const {
  ProfileFunction g = *this;
  g.scale_ *= factor;
  g.offset_ *= factor;
  return g;
}

ProfileFunction ProfileFunction::shifted(double delta) const {
  ProfileFunction g = *this;
  g.offset_ += delta;
  return g;
}

ProfileKind ProfileFunction::kind() const noexcept { return static_cast<ProfileKind>(params_.index()); }

ProfileSample ProfileFunction::eval(const Vec2& x) const {
  ProfileSample s = std::visit([&](const auto& p) { return eval_impl(p, x); }, params_);
  if (scale_ != 1.0 || offset_ != 0.0) {
    s.value = scale_ * s.value + offset_;
    s.gradient *= scale_;
    s.hessian *= scale_;
  }
  return s;
}

Mat2 ProfileFunction::hessian(const Vec2& x) const {
  const ProfileSample s = eval(x);
  if (!s.hessian_defined) {
    std::ostringstream msg;
    msg << to_string(kind()) << " profile has no second derivative at (" << x[0] << ", " << x[1] << ")";
    fail(Errc::hessian_undefined, msg.str());
  }
  return s.hessian;
}

}  // namespace cavity
