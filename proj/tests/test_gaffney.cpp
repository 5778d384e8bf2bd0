#include <cmath>
#include <limits>
#include <sstream>

#include "cavity/error.hpp"
#include "cavity/gaffney.hpp"
#include "doctest.h"

using namespace cavity;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

ProfileFunction oscillatory_profile(double eps) {
  return ProfileFunction::oscillatory(2.0, eps, {1.0, 1.0}, {Cutoff::Kind::bump, {0.25, 0.25}, 0.2});
}

}  // namespace

TEST_CASE("moduli are non-decreasing and vanish at zero") {
  const auto base = ModulusOfContinuity::lipschitz_capped(3.0);
  for (const auto& w : {ModulusOfContinuity::power(0.75, 1.0, 1.0), ModulusOfContinuity::power(0.5),
                        base, ModulusOfContinuity::log_counterexample(),
                        ModulusOfContinuity::scaled(base, 2.0, 0.1)}) {
    double prev = 0.0;
    for (int k = -300; k <= 40; ++k) {
      const double v = w(std::pow(1.2, k));
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(w(1e-200) < 0.01);
  }
  const auto s = ModulusOfContinuity::scaled(base, 2.0, 0.1);
  CHECK(s(0.01) == doctest::Approx(0.1 * std::min(3.0 * 0.1, 1.0)));
  CHECK(s.saturation() == doctest::Approx(0.1 / 3.0));
  CHECK(ModulusOfContinuity::log_counterexample()(std::exp(-4.0)) == doctest::Approx(0.25));
}

TEST_CASE("Dini integral of capped powers matches the antiderivative") {
  for (double beta : {0.6, 0.75, 0.9}) {
    const double t_min = 1e-100;
    const DiniResult r = dini_integral(ModulusOfContinuity::power(beta, 1.0, 1.0), t_min, kInf);
    const double exact = (1.0 - std::pow(t_min, 2 * beta - 1)) / (2 * beta - 1) + 1.0;
    CHECK_FALSE(r.divergent);
    CHECK(std::abs(r.value - exact) < 1e-6);
    CHECK(std::isfinite(r.tail_estimate));
    CHECK(r.tail_estimate < 1e-6);
  }
  // Finite interval: int_{1/4}^{4} min(t^0.75,1)^2 / t^2 dt.
  const DiniResult r = dini_integral(ModulusOfContinuity::power(0.75, 1.0, 1.0), 0.25, 4.0);
  CHECK(r.value == doctest::Approx(2.0 * (1.0 - std::sqrt(0.25)) + (1.0 - 0.25)).epsilon(1e-10));
  const DiniResult lip = dini_integral(ModulusOfContinuity::lipschitz_capped(5.0), 1e-12, kInf);
  CHECK(lip.value == doctest::Approx(10.0 - 25.0 * 1e-12).epsilon(1e-10));
}

TEST_CASE("Dini divergence is flagged for the square root and the logarithmic modulus") {
  const DiniResult half = dini_integral(ModulusOfContinuity::power(0.5), 1e-6, 1.0);
  CHECK(half.divergent);
  CHECK(half.value == doctest::Approx(std::log(1e6)).epsilon(1e-8));
  CHECK(std::isinf(half.tail_estimate));
  const DiniResult lg = dini_integral(ModulusOfContinuity::log_counterexample(), 1e-6, kInf);
  CHECK(lg.divergent);
  // Slightly better than Dini but still convergent: t^0.55.
  CHECK_FALSE(dini_integral(ModulusOfContinuity::power(0.55, 1.0, 1.0), 1e-6, kInf).divergent);
  CHECK_THROWS_AS(dini_integral(ModulusOfContinuity::power(0.75), 1e-6, kInf), Error);
  CHECK_THROWS_AS(dini_integral(ModulusOfContinuity::power(0.75), 0.0, 1.0), Error);
}

TEST_CASE("scaling law of the oscillatory modulus") {
  const auto base = ModulusOfContinuity::lipschitz_capped(2.0);
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  for (double alpha : {1.6, 2.0, 2.5}) {
    const ScalingLawReport r = scaling_law_check(alpha, base, eps);
    CHECK(std::abs(r.slope - (2 * alpha - 3)) < 0.05);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      CHECK_FALSE(r.divergent[i]);
      // Dini(min(ct, 1)) = 2c, scaled by eps^(2 alpha - 3).
      CHECK(r.values[i] == doctest::Approx(4.0 * std::pow(eps[i], 2 * alpha - 3)).epsilon(1e-6));
    }
  }
  const ScalingLawReport two = scaling_law_check(2.0, base, {0.1, 0.05});
  CHECK(std::abs(two.values[1] / two.values[0] - 0.5) < 0.015);
  const ScalingLawReport flat = scaling_law_check(1.5, base, eps);
  for (double v : flat.values) CHECK(std::abs(v / flat.values[0] - 1.0) < 0.03);
  const ScalingLawReport grow = scaling_law_check(1.2, base, eps);
  for (std::size_t i = 1; i < eps.size(); ++i) CHECK(grow.values[i] > grow.values[i - 1]);
  CHECK_THROWS_AS(scaling_law_check(2.0, base, {0.1}), Error);
}

TEST_CASE("D_{3/2} vanishes for affine profiles and is homogeneous") {
  // Linear samples on a wide grid: the interpolant is affine well inside the region.
  const int n = 21;
  std::vector<double> values;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) values.push_back(0.3 * (-2 + 0.2 * ix) - 0.7 * (-2 + 0.2 * iy) + 1.0);
  const ProfileFunction affine = ProfileFunction::tabulated({{-2, 2}, {-2, 2}}, n, n, values);
  CHECK(d32_seminorm(affine, {0.1, -0.2}, 0.3, {0.2, 0.0}) < 1e-10);
  CHECK(d32_seminorm(ProfileFunction::constant(2.0), {0, 0}, 0.3, {0.3, 0.1}) == 0.0);

  const ProfileFunction g = oscillatory_profile(0.1);
  const Vec2 xbar(0.25, 0.25);
  const double base = d32_seminorm(g, xbar, 0.05, {0.025, 0.0});
  CHECK(base > 0.0);
  for (double c : {-3.7, 0.01, 250.0})
    CHECK(d32_seminorm(g.scaled(c), xbar, 0.05, {0.025, 0.0}) == doctest::Approx(std::abs(c) * base).epsilon(1e-10));
}

TEST_CASE("D_{3/2} is non-decreasing in rho for a fixed set") {
  const ProfileFunction g = oscillatory_profile(0.1);
  const ProfileFunction h = ProfileFunction::hoelder_power(1.0, 1.75, {0.25, 0.25});
  for (const auto& prof : {g, h}) {
    double prev = 0.0;
    for (double rho : {0.05, 0.08, 0.12, 0.2}) {
      const double v = d32_seminorm(prof, {0.25, 0.25}, rho, {0.05, 0.0});
      CHECK(v >= prev * (1.0 - 1e-9));
      prev = v;
    }
  }
}

TEST_CASE("D_{3/2} respects the Hoelder-3/4 bound") {
  // grad |x|^1.75 = 1.75 |x|^-0.25 x is Hoelder-3/4 with constant 1.75 * 2^(1/4).
  const ProfileFunction g = ProfileFunction::hoelder_power(1.0, 1.75);
  const double K = 1.75 * std::pow(2.0, 0.25);
  for (double rho : {0.05, 0.2, 1.0}) {
    for (const ESet& E : {ESet{rho, 0.0}, ESet{0.5 * rho, 0.0}, ESet{rho, 0.5 * rho}}) {
      const double v = d32_seminorm(g, {0, 0}, rho, E);
      const double bound2 = E.measure(3) * K * K * 2.0 * kPi * 2.0 * std::sqrt(rho);
      CHECK(v > 0.0);
      CHECK(v * v <= bound2);
    }
  }
}

TEST_CASE("D_{3/2} of the oscillatory profile is stable under refinement") {
  const ProfileFunction g = oscillatory_profile(0.1);
  const double coarse = d32_seminorm(g, {0.25, 0.25}, 0.05, {0.05, 0.0}, 16);
  const double fine = d32_seminorm(g, {0.25, 0.25}, 0.05, {0.05, 0.0}, 32);
  CHECK(std::isfinite(fine));
  CHECK(std::abs(fine - coarse) < 0.02 * fine);
  // Planar (N = 2) variant along x1.
  const double line = d32_seminorm(g, {0.25, 0.25}, 0.05, {0.05, 0.0}, 16, 2);
  CHECK(std::isfinite(line));
  CHECK(line > 0.0);
}

TEST_CASE("D_{3/2} argument checks") {
  const ProfileFunction g = oscillatory_profile(0.1);
  CHECK_THROWS_AS(d32_seminorm(g, {0, 0}, 0.0, {0.0, 0.0}), Error);
  CHECK_THROWS_AS(d32_seminorm(g, {0, 0}, 0.1, {0.2, 0.0}), Error);
  CHECK_THROWS_AS(d32_seminorm(g, {0, 0}, 0.1, {0.05, 0.06}), Error);
  CHECK_THROWS_AS(d32_seminorm(g, {0, 0}, 0.1, {0.05, 0.0}, 16, 4), Error);
}

TEST_CASE("Maz'ya criterion components") {
  const std::vector<double> rhos{0.2, 0.1, 0.05};
  for (const auto& r : mazya_criterion(ProfileFunction::constant(0.0), {0, 0}, 0.1, rhos)) {
    CHECK(r.d32_term == 0.0);
    CHECK(r.grad_sup == 0.0);
    CHECK_FALSE(r.flagged);
    CHECK(r.total() < r.delta);
  }

  for (int N : {2, 3}) {
    const auto rows = mazya_criterion(oscillatory_profile(0.1), {0.25, 0.25}, 0.1, rhos, N);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK_FALSE(rows[i].flagged);
      CHECK(std::isfinite(rows[i].d32_term));
      CHECK(rows[i].rho == rhos[i]);
      if (i > 0) {
        CHECK(rows[i].d32_term < rows[i - 1].d32_term);
        CHECK(rows[i].grad_sup <= rows[i - 1].grad_sup);
      }
    }
  }

  for (int N : {2, 3}) {
    const auto rows = mazya_criterion(ProfileFunction::log_counterexample(), {0, 0}, 0.1, {0.2, 0.1}, N);
    bool flagged = false;
    for (const auto& r : rows) {
      flagged = flagged || r.flagged;
      CHECK(r.grad_sup <= 2.0);
    }
    CHECK(flagged);
  }
}

TEST_CASE("criterion CSV") {
  std::vector<MazyaCriterionReport> rows(2);
  rows[0] = {0.2, 1.5, 0.25, 0.1, false};
  rows[1] = {0.1, 0.0, 0.125, 0.1, true};
  std::ostringstream a, b;
  write_mazya_csv(a, "oscillatory", rows, DiniResult{4.0, false, 0.0, {}});
  CHECK(a.str() ==
        "# cavity-mazya 1\n"
        "profile,rho,d32_term,grad_sup,delta,dini_value_or_flag\n"
        "oscillatory,0.2,1.5,0.25,0.1,4\n"
        "oscillatory,0.1,nonconvergent,0.125,0.1,4\n");
  write_mazya_csv(b, "log", {rows[0]}, DiniResult{1.0, true, kInf, {}});
  CHECK(b.str().find("log,0.2,1.5,0.25,0.1,divergent\n") != std::string::npos);
}

TEST_CASE("discrete Gaffney constant on the cube") {
  const Rect side{{0, kPi}, {0, kPi}};
  double prev = 0.0;
  for (int n : {2, 4}) {
    const FemSpace space = build_space(mesh_box(side, 0.0, kPi, {n, n, n}), 2);
    const FemForms forms(space);
    EigenOptions o;
    o.count = 8;
    o.tol = 1e-10;
    const Spectrum s = solve_gevp(forms.stiffness(1.0), forms.mass(), o);
    const double c = discrete_gaffney_constant(forms, s);
    const SparseSymOp M = forms.mass(), A = forms.stiffness(1.0);
    for (int i = 0; i < s.eigenvectors.cols(); ++i) {
      const VecX u = s.eigenvectors.col(i);
      CHECK(c >= std::sqrt(M.quad(u) / (M.quad(u) + A.quad(u))));
    }
    CHECK(c >= 1.0 - 1e-8);
    if (prev > 0.0) CHECK(std::abs(c - prev) < 0.1 * prev);
    prev = c;
  }
}
