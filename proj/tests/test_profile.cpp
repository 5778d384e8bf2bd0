#include <cmath>
#include <random>

#include "cavity/error.hpp"
#include "cavity/profile.hpp"
#include "doctest.h"

using namespace cavity;

namespace {

// Central differences of value -> gradient and gradient -> Hessian.
void check_derivatives(const ProfileFunction& g, const Vec2& x, double h, double tol) {
  const ProfileSample s = g.eval(x);
  for (int i = 0; i < 2; ++i) {
    Vec2 e = Vec2::Zero();
    e[i] = h;
    const double fd = (g.value(x + e) - g.value(x - e)) / (2 * h);
    CHECK(s.gradient[i] == doctest::Approx(fd).epsilon(tol).scale(1.0));
    const Vec2 dg = (g.gradient(x + e) - g.gradient(x - e)) / (2 * h);
    for (int k = 0; k < 2; ++k) CHECK(s.hessian(k, i) == doctest::Approx(dg[k]).epsilon(tol).scale(1.0));
  }
}

}  // namespace

TEST_CASE("constant zero profile") {
  const auto g = ProfileFunction::constant(0.0);
  const ProfileSample s = g.eval({0.3, -2.0});
  CHECK(s.value == 0.0);
  CHECK(s.gradient.norm() == 0.0);
  CHECK(s.hessian.norm() == 0.0);
  CHECK(g.kind() == ProfileKind::constant);
}

TEST_CASE("oscillatory profile at the origin") {
  const auto g = ProfileFunction::oscillatory(2.0, 0.1);
  const ProfileSample s = g.eval({0.0, 0.0});
  CHECK(s.value == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(s.gradient.norm() < 1e-15);
}

TEST_CASE("oscillatory profile equals eps^alpha b(x/eps) psi(x)") {
  const Cutoff cut{Cutoff::Kind::bump, Vec2(0.25, 0.25), 0.2};
  const CosineCell cell{1.0, 1.0};
  const double alpha = 1.75, eps = 0.05;
  const auto g = ProfileFunction::oscillatory(alpha, eps, cell, cut);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int t = 0; t < 200; ++t) {
    const Vec2 x(u(rng), u(rng));
    const double b = 1.0 + std::cos(2 * M_PI * x[0] / eps) * std::cos(2 * M_PI * x[1] / eps);
    const double r2 = (x - cut.center).squaredNorm() / (cut.radius * cut.radius);
    const double psi = r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
    CHECK(g.value(x) == doctest::Approx(std::pow(eps, alpha) * b * psi).epsilon(1e-13).scale(1e-18));
  }
}

TEST_CASE("analytic derivatives agree with finite differences") {
  const Cutoff cut{Cutoff::Kind::bump, Vec2(0.25, 0.25), 0.2};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.08, 0.42);
  const std::vector<ProfileFunction> profiles = {
      ProfileFunction::oscillatory(2.0, 0.1, {1.0, 1.0}, cut),
      ProfileFunction::oscillatory(2.0, 0.2, {}, {}).scaled(3.0).shifted(-0.5),
      ProfileFunction::hoelder_power(0.7, 2.5, Vec2(-0.2, 0.1)),
      ProfileFunction::log_counterexample(),
  };
  for (const auto& g : profiles) {
    for (int t = 0; t < 20; ++t) check_derivatives(g, Vec2(u(rng), u(rng)), 1e-5, 1e-5);
  }
}

TEST_CASE("log counterexample") {
  const auto g = ProfileFunction::log_counterexample();
  const double x1 = std::exp(-2.0);
  CHECK(g.value({x1, 0.3}) == doctest::Approx(-std::exp(-2.0) / 2).epsilon(1e-15));
  CHECK(g.value({-x1, 0.0}) == doctest::Approx(-std::exp(-2.0) / 2).epsilon(1e-15));
  CHECK(std::isfinite(g.value({5.0, 1.0})));
  CHECK(g.gradient({0.0, 0.0}).norm() == 0.0);
  CHECK_THROWS_AS(g.hessian({0.0, 0.4}), Error);
  try {
    g.hessian({0.0, 0.4});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::hessian_undefined);
  }
  // C^1 across the cutoff.
  const double c = g.params().index() == 3 ? std::get<ProfileFunction::LogCounterexample>(g.params()).cutoff : 0.0;
  CHECK(g.value({c - 1e-9, 0}) == doctest::Approx(g.value({c + 1e-9, 0})).epsilon(1e-8));
  CHECK(g.gradient({c - 1e-9, 0})[0] == doctest::Approx(g.gradient({c + 1e-9, 0})[0]).epsilon(1e-7));
}

TEST_CASE("hoelder power profile at its centre") {
  const auto g = ProfileFunction::hoelder_power(1.0, 1.75);
  CHECK(g.value({0, 0}) == 0.0);
  CHECK(g.gradient({0, 0}).norm() == 0.0);
  CHECK_THROWS_AS(g.hessian({0, 0}), Error);
  CHECK(ProfileFunction::hoelder_power(1.0, 2.0).hessian({0, 0}).isApprox(2.0 * Mat2::Identity()));
  CHECK_THROWS_AS(ProfileFunction::hoelder_power(1.0, 1.0), Error);
}

TEST_CASE("tabulated profile interpolates nodes and reproduces affine data") {
  const Rect region{{0.0, 1.0}, {-1.0, 1.0}};
  const int nx = 6, ny = 5;
  std::vector<double> affine, bumpy;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double x = i / 5.0, y = -1.0 + j * 0.5;
      affine.push_back(2.0 * x - 3.0 * y + 0.25);
      bumpy.push_back(std::sin(3 * x) * std::cos(2 * y));
    }
  }
  const auto ga = ProfileFunction::tabulated(region, nx, ny, affine);
  const auto gb = ProfileFunction::tabulated(region, nx, ny, bumpy);
  for (double x : {0.05, 0.33, 0.71, 0.99}) {
    for (double y : {-0.95, -0.1, 0.6}) {
      CHECK(ga.value({x, y}) == doctest::Approx(2 * x - 3 * y + 0.25).epsilon(1e-13));
      CHECK(ga.gradient({x, y})[0] == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(ga.gradient({x, y})[1] == doctest::Approx(-3.0).epsilon(1e-12));
    }
  }
  CHECK(gb.value({0.4, 0.0}) == doctest::Approx(std::sin(1.2)).epsilon(1e-13));
  // Constant continuation outside the table.
  CHECK(gb.value({3.0, 0.0}) == doctest::Approx(gb.value({1.0, 0.0})).epsilon(1e-14));
  CHECK(gb.gradient({3.0, 0.0})[0] == 0.0);
  CHECK_THROWS_AS(ProfileFunction::tabulated(region, nx, ny, {1.0, 2.0}), Error);
}

TEST_CASE("scaling and shifting act on value and derivatives") {
  const auto g = ProfileFunction::oscillatory(2.0, 0.1);
  const auto h = g.scaled(-2.0).shifted(0.5);
  const Vec2 x(0.013, 0.021);
  CHECK(h.value(x) == doctest::Approx(-2.0 * g.value(x) + 0.5).epsilon(1e-14));
  CHECK(h.gradient(x).isApprox(-2.0 * g.gradient(x)));
  CHECK(h.hessian(x).isApprox(-2.0 * g.hessian(x)));
}

TEST_CASE("profile kind names round-trip") {
  for (auto k : {ProfileKind::constant, ProfileKind::oscillatory, ProfileKind::hoelder_power,
                 ProfileKind::log_counterexample, ProfileKind::tabulated})
    CHECK(profile_kind_from_string(to_string(k)) == k);
  CHECK_FALSE(profile_kind_from_string("spline").has_value());
}
