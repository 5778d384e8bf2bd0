#include "cavity/gaffney.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <ostream>
#include <sstream>

#include "cavity/error.hpp"
#include "cavity/quadrature.hpp"

namespace cavity {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInvE = 0.36787944117144233;

}  // namespace

// ---------------------------------------------------------------------------------------------

ModulusOfContinuity ModulusOfContinuity::power(double exponent, double coefficient, double cap) {
  if (!(exponent > 0.0 && coefficient > 0.0 && cap > 0.0))
    fail(Errc::range_error, "power modulus needs positive exponent, coefficient and cap");
  ModulusOfContinuity m;
  m.kind_ = Kind::power;
  m.exponent_ = exponent;
  m.coefficient_ = coefficient;
  m.cap_ = cap;
  return m;
}

ModulusOfContinuity ModulusOfContinuity::lipschitz_capped(double slope) {
  if (!(slope > 0.0)) fail(Errc::range_error, "Lipschitz slope must be positive");
  ModulusOfContinuity m;
  m.kind_ = Kind::lipschitz_capped;
  m.exponent_ = 1.0;
  m.coefficient_ = slope;
  m.cap_ = 1.0;
  return m;
}

ModulusOfContinuity ModulusOfContinuity::log_counterexample() {
  ModulusOfContinuity m;
  m.kind_ = Kind::log_counterexample;
  m.cap_ = 1.0;
  return m;
}

ModulusOfContinuity ModulusOfContinuity::scaled(const ModulusOfContinuity& base, double alpha, double eps) {
  if (!(eps > 0.0)) fail(Errc::range_error, "eps must be positive");
  ModulusOfContinuity m;
  m.kind_ = Kind::scaled;
  m.alpha_ = alpha;
  m.eps_ = eps;
  m.base_ = std::make_shared<const ModulusOfContinuity>(base);
  return m;
}

double ModulusOfContinuity::operator()(double t) const {
  if (!(t > 0.0)) return 0.0;
  switch (kind_) {
    case Kind::power:
    case Kind::lipschitz_capped:
      return std::min(coefficient_ * std::pow(t, exponent_), cap_);
    case Kind::log_counterexample:
      return t <= kInvE ? 1.0 / std::abs(std::log(t)) : 1.0;
    case Kind::scaled:
      return std::pow(eps_, alpha_ - 1.0) * (*base_)(t / eps_);
  }
  return 0.0;
}

std::vector<double> ModulusOfContinuity::breakpoints() const {
  switch (kind_) {
    case Kind::power:
    case Kind::lipschitz_capped:
      if (std::isfinite(cap_)) return {std::pow(cap_ / coefficient_, 1.0 / exponent_)};
      return {};
    case Kind::log_counterexample:
      return {kInvE};
    case Kind::scaled: {
      std::vector<double> b = base_->breakpoints();
      for (double& x : b) x *= eps_;
      return b;
    }
  }
  return {};
}

double ModulusOfContinuity::saturation() const {
  if (kind_ == Kind::scaled) return eps_ * base_->saturation();
  if (!std::isfinite(cap_)) return std::numeric_limits<double>::infinity();
  const auto b = breakpoints();
  return b.empty() ? 0.0 : b.back();
}

// ---------------------------------------------------------------------------------------------

namespace {

// int_a^b (omega(t)/t)^2 dt with t = e^s, split at the breakpoints.
double dini_segment(const ModulusOfContinuity& omega, double a, double b, int depth) {
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{std::log(a)};
  for (double x : omega.breakpoints())
    if (x > a && x < b) cuts.push_back(std::log(x));
  cuts.push_back(std::log(b));
  const auto f = [&](double s) {
    const double t = std::exp(s);
    const double w = omega(t);
    return w * w / t;
  };
  CompensatedSum sum;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    sum.add(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], depth, 1e-13));
  return sum.value();
}

}  // namespace

DiniResult dini_integral(const ModulusOfContinuity& omega, double t_min, double t_max, int quad_n) {
  if (!(t_min > 0.0) || !(t_max > t_min)) fail(Errc::range_error, "dini_integral needs 0 < t_min < t_max");
  if (quad_n < 1) fail(Errc::range_error, "quad_n must be positive");
  constexpr double kBlock = 1024.0;  // 10 halvings
  if (!(t_min / (kBlock * kBlock * kBlock) > 1e-300)) fail(Errc::range_error, "t_min is too small for the halving test");
  DiniResult r;
  if (std::isfinite(t_max)) {
    r.value = dini_segment(omega, t_min, t_max, quad_n);
  } else {
    const double sat = omega.saturation();
    if (!std::isfinite(sat)) fail(Errc::range_error, "an infinite upper limit needs a saturating modulus");
    const double T = std::max(sat, t_min);
    const double w = omega(T);
    r.value = dini_segment(omega, t_min, T, quad_n) + w * w / T;
  }
  double hi = t_min;
  for (int k = 0; k < 3; ++k) {
    r.blocks[k] = dini_segment(omega, hi / kBlock, hi, quad_n);
    hi /= kBlock;
  }
  const auto keeps = [](double prev, double next) { return next > prev / 1.5; };
  r.divergent = keeps(r.blocks[0], r.blocks[1]) && keeps(r.blocks[1], r.blocks[2]) && r.blocks[2] > 0.0;
  if (r.divergent) {
    r.tail_estimate = std::numeric_limits<double>::infinity();
  } else {
    const double ratio = r.blocks[1] > 0.0 ? std::min(r.blocks[2] / r.blocks[1], 1.0 / 1.5) : 0.0;
    r.tail_estimate = r.blocks[0] + r.blocks[1] + r.blocks[2] + r.blocks[2] * ratio / (1.0 - ratio);
  }
  return r;
}

ScalingLawReport scaling_law_check(double alpha, const ModulusOfContinuity& omega_b, const std::vector<double>& eps_list) {
  if (eps_list.size() < 2) fail(Errc::range_error, "scaling law needs at least two eps values");
  ScalingLawReport rep;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double eps : eps_list) {
    const ModulusOfContinuity w = ModulusOfContinuity::scaled(omega_b, alpha, eps);
    const DiniResult d = dini_integral(w, 1e-14 * eps, std::numeric_limits<double>::infinity());
    rep.eps.push_back(eps);
    rep.values.push_back(d.value);
    rep.divergent.push_back(d.divergent);
    const double x = std::log(eps), y = std::log(d.value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(eps_list.size());
  rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return rep;
}

// ---------------------------------------------------------------------------------------------

double ESet::measure(int N) const {
  if (N == 2) return 2.0 * (radius - inner);
  return kPi * (radius * radius - inner * inner);
}

namespace {

// Composite Gauss rule on [0, 1] with `total` points in 8-point panels.
LineRule composite_rule(int total) {
  const int per = std::min(total, 8);
  const int panels = (total + per - 1) / per;
  const LineRule base = gauss_legendre(per);
  LineRule out;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < per; ++i) {
      out.nodes.push_back((p + base.nodes[i]) / panels);
      out.weights.push_back(base.weights[i] / panels);
    }
  return out;
}

// Squared D_{3/2} norm with n radial points (and 2n angular points in the plane).
double d32_squared(const ProfileFunction& g, const Vec2& xbar, double rho, const ESet& E, int n, int N) {
  const LineRule rule = composite_rule(n);
  n = static_cast<int>(rule.nodes.size());
  CompensatedSum total;
  const double span = E.radius - E.inner;
  if (N == 2) {
    // E = two intervals inner < |x - xbar1| < radius on the x1 axis; h = +-rho u^2.
    for (int side = 0; side < 2; ++side)
      for (int i = 0; i < n; ++i) {
        const double x = xbar[0] + (side == 0 ? 1.0 : -1.0) * (E.inner + span * rule.nodes[i]);
        const double wx = span * rule.weights[i];
        const double gx = g.gradient(Vec2(x, xbar[1]))[0];
        CompensatedSum inner;
        for (int k = 0; k < n; ++k) {
          const double u = rule.nodes[k], r = rho * u * u;
          const double jac = 2.0 / (rho * u * u * u);
          for (double sgn : {1.0, -1.0}) {
            const double d = gx - g.gradient(Vec2(x + sgn * r, xbar[1]))[0];
            inner.add(rule.weights[k] * jac * d * d);
          }
        }
        total.add(wx * inner.value());
      }
    return total.value();
  }
  const int na = 2 * n;
  const double dphi = 2.0 * kPi / na;
  for (int i = 0; i < n; ++i) {
    const double rx = E.inner + span * rule.nodes[i];
    for (int a = 0; a < na; ++a) {
      const double phi = (a + 0.5) * dphi;
      const Vec2 x = xbar + rx * Vec2(std::cos(phi), std::sin(phi));
      const double wx = span * rule.weights[i] * rx * dphi;
      const Vec2 gx = g.gradient(x);
      CompensatedSum inner;
      for (int k = 0; k < n; ++k) {
        const double u = rule.nodes[k], r = rho * u * u;
        // |h|^-3 h dh dtheta = r^-2 dr dtheta and dr = 2 rho u du.
        const double jac = 2.0 / (rho * u * u * u) * dphi;
        for (int b = 0; b < na; ++b) {
          const double th = b * dphi;
          const Vec2 d = gx - g.gradient(x + r * Vec2(std::cos(th), std::sin(th)));
          inner.add(rule.weights[k] * jac * d.squaredNorm());
        }
      }
      total.add(wx * inner.value());
    }
  }
  return total.value();
}

}  // namespace

double d32_seminorm(const ProfileFunction& g, const Vec2& xbar, double rho, const ESet& E, int quad_n, int N) {
  if (!(rho > 0.0)) fail(Errc::range_error, "rho must be positive");
  if (N != 2 && N != 3) fail(Errc::range_error, "N must be 2 or 3");
  if (!(E.radius > E.inner && E.inner >= 0.0 && E.radius <= rho * (1.0 + 1e-12)))
    fail(Errc::range_error, "E must be a disk or annulus inside B_rho");
  if (quad_n < 4 || quad_n > 256) fail(Errc::range_error, "quad_n out of range");
  // Three levels quad_n / 2, quad_n, 2 quad_n. Besides the 5% test, the change between the last
  // two levels must at least halve the previous change unless it is already below 0.1%.
  const int levels[3] = {quad_n / 2, quad_n, 2 * quad_n};
  double v[3];
  for (int i = 0; i < 3; ++i) v[i] = std::sqrt(std::max(0.0, d32_squared(g, xbar, rho, E, levels[i], N)));
  const double fine = v[2];
  const double floor = 1e-9 * std::sqrt(E.measure(N)) * (1.0 + g.gradient(xbar).norm());
  const double last = std::abs(v[2] - v[1]), prev = std::abs(v[1] - v[0]);
  const bool jump = last > 0.05 * fine + floor;
  const bool stalled = last > 1e-3 * fine + floor && last > 0.5 * prev;
  if (!std::isfinite(fine) || jump || stalled) {
    std::ostringstream msg;
    msg << "D_{3/2} quadrature did not stabilize: " << v[0] << ", " << v[1] << ", " << v[2] << " with " << levels[0]
        << ", " << levels[1] << ", " << levels[2] << " radial points";
    fail(Errc::quadrature_nonconvergent, msg.str());
  }
  return fine;
}

std::vector<MazyaCriterionReport> mazya_criterion(const ProfileFunction& g, const Vec2& xbar, double delta,
                                                  const std::vector<double>& rho_list, int N, int quad_n) {
  if (N != 2 && N != 3) fail(Errc::range_error, "N must be 2 or 3");
  std::vector<MazyaCriterionReport> out;
  for (double rho : rho_list) {
    MazyaCriterionReport r;
    r.rho = rho;
    r.delta = delta;
    for (double frac : {0.25, 0.5, 1.0}) {
      const ESet E{frac * rho, 0.0};
      const double m = E.measure(N);
      double norm = 0.0;
      try {
        norm = d32_seminorm(g, xbar, rho, E, quad_n, N);
      } catch (const Error& e) {
        if (e.code() != Errc::quadrature_nonconvergent) throw;
        r.flagged = true;
        continue;
      }
      const double scaled = N == 3 ? norm / std::pow(m, 0.25) : norm * std::sqrt(std::abs(std::log(m)));
      r.d32_term = std::max(r.d32_term, scaled);
    }
    // sup |grad g| on a polar grid of the ball (N = 3) or the segment (N = 2).
    constexpr int kRadial = 64, kAngular = 128;
    for (int i = 0; i <= kRadial; ++i) {
      const double rr = rho * i / kRadial;
      if (N == 2) {
        for (double sgn : {1.0, -1.0})
          r.grad_sup = std::max(r.grad_sup, std::abs(g.gradient(Vec2(xbar[0] + sgn * rr, xbar[1]))[0]));
        continue;
      }
      for (int a = 0; a < (i == 0 ? 1 : kAngular); ++a) {
        const double phi = 2.0 * kPi * a / kAngular;
        r.grad_sup = std::max(r.grad_sup, g.gradient(xbar + rr * Vec2(std::cos(phi), std::sin(phi))).norm());
      }
    }
    out.push_back(r);
  }
  // Samples of a smaller ball are samples of every larger one.
  for (auto& r : out)
    for (const auto& other : out)
      if (other.rho < r.rho) r.grad_sup = std::max(r.grad_sup, other.grad_sup);
  return out;
}

void write_mazya_csv(std::ostream& os, const std::string& profile, const std::vector<MazyaCriterionReport>& rows,
                     const DiniResult& dini) {
  os.precision(12);
  os << "# cavity-mazya 1\n";
  os << "profile,rho,d32_term,grad_sup,delta,dini_value_or_flag\n";
  for (const auto& r : rows) {
    os << profile << "," << r.rho << ",";
    if (r.flagged && r.d32_term == 0.0)
      os << "nonconvergent";
    else
      os << r.d32_term;
    os << "," << r.grad_sup << "," << r.delta << ",";
    if (dini.divergent)
      os << "divergent";
    else
      os << dini.value;
    os << "\n";
  }
}

// ---------------------------------------------------------------------------------------------

double discrete_gaffney_constant(const Spectrum& spectrum, const SparseSymOp& h1, const SparseSymOp& mass,
                                 const SparseSymOp& stiffness_tau1) {
  if (h1.dim() != mass.dim() || h1.dim() != stiffness_tau1.dim() || spectrum.eigenvectors.rows() != h1.dim())
    fail(Errc::range_error, "Gaffney probe needs operators and eigenvectors of one space");
  double best = 0.0;
  for (int i = 0; i < spectrum.eigenvectors.cols(); ++i) {
    const VecX u = spectrum.eigenvectors.col(i);
    const double den = mass.quad(u) + stiffness_tau1.quad(u);
    if (den > 0.0) best = std::max(best, std::sqrt(h1.quad(u) / den));
  }
  return best;
}

double discrete_gaffney_constant(const FemForms& forms, const Spectrum& spectrum) {
  return discrete_gaffney_constant(spectrum, forms.h1(), forms.mass(), forms.stiffness(1.0));
}

}  // namespace cavity
