#include <cmath>
#include <random>
#include <sstream>

#include "cavity/error.hpp"
#include "cavity/piola.hpp"
#include "doctest.h"

using namespace cavity;

namespace {

const Rect kW{{0, 0.5}, {0, 0.5}};
constexpr double kPi = 3.14159265358979323846;

AtlasDomain base_box() { return box_domain(kW, -1.0, 1.0, 0.0, 0.05); }

AtlasDomain with_top(ProfileFunction g) {
  AtlasDomain d = base_box();
  d.profiles[0] = std::move(g);
  return d;
}

PerturbationFamily bump_family() {
  return PerturbationFamily::oscillatory(base_box(), 2.0, {1.0, 1.0}, {Cutoff::Kind::bump, {0.25, 0.25}, 0.2},
                                         7.0 / 6.0);
}

// Gradient of f = sin(2 pi x) sin(2 pi y) sin(pi z): vanishes on every face of the box.
AnalyticVectorField gradient_field() {
  AnalyticVectorField f;
  f.u = [](const Vec3& p) {
    const double a = 2 * kPi;
    return Vec3(a * std::cos(a * p[0]) * std::sin(a * p[1]) * std::sin(kPi * p[2]),
                a * std::sin(a * p[0]) * std::cos(a * p[1]) * std::sin(kPi * p[2]),
                kPi * std::sin(a * p[0]) * std::sin(a * p[1]) * std::cos(kPi * p[2]));
  };
  f.tangential_trace_zero = true;
  return f;
}

// Curl-carrying field with vanishing tangential trace on the box.
AnalyticVectorField cavity_field() {
  AnalyticVectorField f;
  const double a = 2 * kPi;
  f.u = [a](const Vec3& p) {
    return Vec3(std::cos(a * p[0]) * std::sin(a * p[1]) * std::sin(kPi * p[2]), 0.0,
                std::sin(a * p[0]) * std::sin(a * p[1]) * (1.0 + p[2]));
  };
  f.du = [a](const Vec3& p) {
    const double cx = std::cos(a * p[0]), sx = std::sin(a * p[0]), cy = std::cos(a * p[1]), sy = std::sin(a * p[1]);
    const double sz = std::sin(kPi * p[2]), cz = std::cos(kPi * p[2]);
    Mat3 J = Mat3::Zero();
    J.row(0) << -a * sx * sy * sz, a * cx * cy * sz, kPi * cx * sy * cz;
    J.row(2) << a * cx * sy * (1 + p[2]), a * sx * cy * (1 + p[2]), sx * sy;
    return J;
  };
  f.tangential_trace_zero = true;
  return f;
}

Vec3 random_target_point(const PiolaMap& map, std::mt19937& rng, double lower = -1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec2 x(0.5 * u(rng), 0.5 * u(rng));
  const double top = map.target().profiles[0].value(x);
  const double gh = map.g_hat(0, x);
  // Half the samples inside the transition layer, where the map is nontrivial.
  const double lo = u(rng) < 0.5 ? std::max(gh, lower) : lower;
  return {x[0], x[1], lo + (top - lo) * (0.02 + 0.96 * u(rng))};
}

}  // namespace

TEST_CASE("h is zero at gh, the full gap at the top and an eighth of it at the midpoint") {
  const auto g = ProfileFunction::oscillatory(2.0, 0.2, {1.0, 1.0});
  const PiolaMap map(base_box(), with_top(g), 0.3);
  for (const Vec2 x : {Vec2(0.1, 0.2), Vec2(0.33, 0.41), Vec2(0.0, 0.5)}) {
    const double gt = g.value(x), gh = map.g_hat(0, x);
    CHECK(gh == doctest::Approx(gt - 0.3));
    CHECK(map.h(0, x, gh) == 0.0);
    CHECK(map.h(0, x, gh - 0.1) == 0.0);
    CHECK(map.h(0, x, gt) == doctest::Approx(gt).epsilon(1e-14));
    CHECK(map.h(0, x, 0.5 * (gh + gt)) == doctest::Approx(gt / 8).epsilon(1e-13));
    // First derivative continuity across gh: the x3-derivative vanishes from above.
    CHECK(std::abs(map.h_jet(0, x, gh + 1e-9).gradient[2]) < 1e-12);
  }
  CHECK_THROWS_AS(map.h(0, Vec2(0.1, 0.1), 0.5), Error);
  CHECK_THROWS_AS(map.h(0, Vec2(0.7, 0.1), -0.5), Error);
  CHECK_THROWS_AS(map.h(0, Vec2(0.1, 0.1), -1.0), Error);
}

TEST_CASE("h derivatives match finite differences") {
  const auto g = ProfileFunction::oscillatory(2.0, 0.2, {1.0, 1.0}, {Cutoff::Kind::bump, {0.25, 0.25}, 0.2});
  const PiolaMap map(base_box(), with_top(g), 0.3);
  std::mt19937 rng(7);
  const double step = 1e-5;
  for (int s = 0; s < 50; ++s) {
    const Vec3 p = random_target_point(map, rng, -0.5);
    const auto h_at = [&](const Vec3& q) { return map.h(0, Vec2(q[0], q[1]), q[2]); };
    const HJet jet = map.h_jet(0, Vec2(p[0], p[1]), p[2]);
    for (int k = 0; k < 3; ++k) {
      Vec3 a = p, b = p;
      a[k] += step;
      b[k] -= step;
      if (b[2] > map.target().profiles[0].value(Vec2(b[0], b[1])) ||
          a[2] > map.target().profiles[0].value(Vec2(a[0], a[1])))
        continue;
      CHECK(jet.gradient[k] == doctest::Approx((h_at(a) - h_at(b)) / (2 * step)).epsilon(1e-6).scale(1.0));
      const Vec3 ga = map.h_jet(0, Vec2(a[0], a[1]), a[2]).gradient;
      const Vec3 gb = map.h_jet(0, Vec2(b[0], b[1]), b[2]).gradient;
      const Vec3 col = (ga - gb) / (2 * step);
      for (int i = 0; i < 3; ++i) CHECK(jet.hessian(i, k) == doctest::Approx(col[i]).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("constant gap: det DPsi bottoms out at 1 - 3c/k, which is 1/2 for k = 6c") {
  const double c = 0.04;
  const PiolaMap map(base_box(), with_top(ProfileFunction::constant(c)), 6 * c);
  const Vec2 x(0.2, 0.3);
  const double gh = c - 6 * c;
  for (double t : {0.0, 0.3, 0.7, 1.0}) {
    const double x3 = gh + t * 6 * c;
    const ChartMapValue m = map.phi_psi_map(0, Vec3(x[0], x[1], x3));
    CHECK(m.det == doctest::Approx(1.0 - 3.0 * c * std::pow(x3 - gh, 2) / std::pow(6 * c, 3)));
  }
  CHECK(map.phi_psi_map(0, Vec3(x[0], x[1], c)).det == doctest::Approx(0.5));
  const PiolaBounds b = sample_piola_bounds(map, 8, 32);
  CHECK(b.min_det == doctest::Approx(0.5));
  CHECK(b.max_det == doctest::Approx(1.0));
}

TEST_CASE("below gh the chart map is the identity") {
  const auto g = ProfileFunction::oscillatory(2.0, 0.2, {1.0, 1.0});
  const PiolaMap map(base_box(), with_top(g), 0.3);
  const Vec3 p(0.12, 0.37, -0.6);
  const ChartMapValue m = map.phi_psi_map(0, p);
  CHECK(m.image == p);
  CHECK(m.jacobian == Mat3::Identity());
  CHECK(m.det == 1.0);
  CHECK(map.in_identity_region(p));
  CHECK_FALSE(map.in_identity_region(Vec3(0.12, 0.37, map.g_hat(0, Vec2(0.12, 0.37)) + 1e-3)));
  CHECK_THROWS_AS(map.phi_psi_map(0, Vec3(0.12, 0.37, 0.9)), Error);
}

TEST_CASE("rotated chart: jacobian and second derivatives of Psi match finite differences") {
  AtlasDomain src = base_box();
  const Mat3 R = axis_angle_rotation(Vec3(1, 2, 3), 0.7);
  src.atlas.charts[0].rotation = R;
  AtlasDomain tgt = src;
  tgt.profiles[0] = ProfileFunction::oscillatory(2.0, 0.25, {1.0, 1.0});
  const PiolaMap map(src, tgt, 0.4);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double step = 1e-5;
  int checked = 0;
  for (int s = 0; s < 100; ++s) {
    const Vec2 x(0.05 + 0.4 * u(rng), 0.05 + 0.4 * u(rng));
    const double top = tgt.profiles[0].value(x), gh = map.g_hat(0, x);
    const double x3 = gh + (top - gh) * (0.05 + 0.9 * u(rng));
    const Vec3 p = R.transpose() * Vec3(x[0], x[1], x3);
    const auto image = [&](const Vec3& q) { return map.phi_psi_map(0, q).image; };
    const ChartMapValue m = map.phi_psi_map(0, p);
    const Mat3 fd = finite_difference_jacobian(image, p, step);
    CHECK((fd - m.jacobian).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(m.det == doctest::Approx(m.jacobian.determinant()).epsilon(1e-12));
    const auto H = map.psi_hessian(0, p);
    for (int a = 0; a < 3; ++a) {
      Vec3 pa = p, pb = p;
      pa[a] += step;
      pb[a] -= step;
      const Mat3 dJ = (map.phi_psi_map(0, pa).jacobian - map.phi_psi_map(0, pb).jacobian) / (2 * step);
      for (int mm = 0; mm < 3; ++mm)
        for (int b = 0; b < 3; ++b) CHECK(H[mm](a, b) == doctest::Approx(dJ(mm, b)).epsilon(1e-5).scale(1.0));
    }
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("partition of unity on overlapping and rotated charts") {
  Atlas atlas;
  atlas.s_prime = 1;
  AtlasChart a, b, c;
  a.bounds = {Interval{0, 1}, Interval{0, 1}, Interval{-1, 1}};
  b.bounds = {Interval{0.6, 1.6}, Interval{0, 1}, Interval{-1, 1}};
  c.rotation = axis_angle_rotation(Vec3(0, 0, 1), 0.3);
  c.bounds = {Interval{0.2, 1.3}, Interval{-0.4, 0.8}, Interval{-1, 1}};
  c.touches_boundary = false;
  atlas.charts = {a, b, c};
  const double margin = 0.05;
  const PartitionOfUnity pu(atlas, margin);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int covered = 0;
  for (int s = 0; s < 2000; ++s) {
    const Vec3 p(-0.1 + 1.8 * u(rng), -0.1 + 1.2 * u(rng), -1.0 + 2.0 * u(rng));
    double sum = 0.0, bsum = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double w = pu.value(j, p);
      CHECK(w >= 0.0);
      CHECK(w <= 1.0 + 1e-15);
      sum += w;
      bsum += pu.bump(j, p);
      // Support stays a margin inside the chart.
      const AtlasChart& ch = atlas.charts[j];
      const Vec3 q = ch.rotation * p;
      bool inside = true;
      for (int i = 0; i < 3; ++i) inside = inside && q[i] > ch.bounds[i].lo + margin && q[i] < ch.bounds[i].hi - margin;
      if (!inside) CHECK(w < 1e-14);
      const auto wj = [&](const Vec3& x) { return Vec3(pu.value(j, x), 0, 0); };
      const Vec3 fd = finite_difference_jacobian(wj, p, 1e-6).row(0).transpose();
      CHECK((fd - pu.gradient(j, p)).norm() < 1e-5 * (1.0 + fd.norm()));
    }
    if (bsum > 1e-6) {
      ++covered;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(covered > 1000);
  CHECK_THROWS_AS(PartitionOfUnity(atlas, 0.6), Error);
}

TEST_CASE("identical domains: the pullback is the identity") {
  const auto g = ProfileFunction::oscillatory(2.0, 0.2, {1.0, 1.0});
  const PiolaMap map(with_top(g), with_top(g), 0.3);
  const AnalyticVectorField phi = cavity_field();
  std::mt19937 rng(5);
  for (int s = 0; s < 50; ++s) {
    const Vec3 p = random_target_point(map, rng);
    CHECK((map.pullback(phi, p) - phi.value(p)).norm() < 1e-14);
    CHECK((map.pullback_curl(phi, p) - phi.curl(p)).norm() < 1e-12);
    CHECK(map.pullback_div(phi, p) == doctest::Approx(phi.div(p)).epsilon(1e-12));
  }
}

TEST_CASE("pullback agrees with phi exactly below gh and keeps zero tangential traces") {
  const auto fam = bump_family();
  const PiolaMap map = PiolaMap::from_family(fam, 0.1);
  const AnalyticVectorField grad = gradient_field();
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const Vec2 x(0.5 * u(rng), 0.5 * u(rng));
    const Vec3 below(x[0], x[1], -1.0 + (map.g_hat(0, x) + 1.0) * u(rng));
    CHECK(map.pullback(grad, below) == grad.value(below));
    // Perturbed top: nu x P phi = 0.
    const ProfileSample gt = map.target().profiles[0].eval(x);
    const Vec3 top(x[0], x[1], gt.value);
    const Vec3 nu = Vec3(-gt.gradient[0], -gt.gradient[1], 1.0).normalized();
    CHECK(nu.cross(map.pullback(grad, top)).norm() < 1e-8);
    CHECK(nu.cross(map.pullback(cavity_field(), top)).norm() < 1e-8);
  }
}

TEST_CASE("pulled-back curl and divergence match finite differences; divergence splits into A and B terms") {
  const auto fam = bump_family();
  const PiolaMap map = PiolaMap::from_family(fam, 0.2);
  const AnalyticVectorField phi = cavity_field();
  AnalyticVectorField phi_fd = phi;
  phi_fd.du = nullptr;  // jacobian by central differences
  const auto pulled = [&](const Vec3& p) { return map.pullback(phi, p); };
  std::mt19937 rng(13);
  double worst_curl = 0.0, worst_div = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Vec3 p = random_target_point(map, rng, -0.9);
    const Mat3 J = finite_difference_jacobian(pulled, p, 2e-6);
    worst_curl = std::max(worst_curl, (map.pullback_curl(phi, p) - curl_from_jacobian(J)).norm());
    const DivergenceTerms t = map.pullback_div_terms(phi, p);
    worst_div = std::max(worst_div, std::abs(t.total() - J.trace()));
    CHECK(t.a + t.b == t.total());
    CHECK(map.pullback_div(phi_fd, p) == doctest::Approx(t.total()).epsilon(1e-7).scale(1.0));
  }
  CHECK(worst_curl < 1e-6);
  CHECK(worst_div < 1e-6);
}

TEST_CASE("identity map and constant fields") {
  const PiolaMap map(base_box(), base_box(), 0.2);
  AnalyticVectorField c;
  c.u = [](const Vec3&) { return Vec3(1, -2, 0.5); };
  c.du = [](const Vec3&) { return Mat3::Zero().eval(); };
  c.tangential_trace_zero = true;
  const Vec3 p(0.1, 0.2, -0.05);
  CHECK(map.pullback(c, p) == Vec3(1, -2, 0.5));
  CHECK(map.pullback_curl(c, p).norm() == 0.0);
  CHECK(map.pullback_div(c, p) == 0.0);
}

TEST_CASE("contract violations") {
  const PiolaMap map(base_box(), with_top(ProfileFunction::constant(0.05)), 0.3);
  AnalyticVectorField f = cavity_field();
  f.tangential_trace_zero = false;
  CHECK_THROWS_AS(map.pullback(f, Vec3(0.1, 0.1, -0.5)), Error);
  try {
    map.pullback(cavity_field(), Vec3(0.1, 0.1, 0.5));
    FAIL("expected out_of_domain");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::out_of_domain);
  }
  // k must exceed the gap and keep gh above a3 + rho.
  CHECK_THROWS_AS(PiolaMap(base_box(), with_top(ProfileFunction::constant(0.05)), 0.04), Error);
  CHECK_THROWS_AS(PiolaMap(base_box(), with_top(ProfileFunction::constant(0.05)), 1.0), Error);
  AtlasDomain other = base_box();
  other.atlas.charts[0].bounds[0].hi = 0.6;
  CHECK_THROWS_AS(PiolaMap(base_box(), other, 0.3), Error);
  CHECK_THROWS_AS(verify_piolamain(cavity_field(), map, {0, 4}), Error);
  // Collapsing layer: det DPsi = 1 - 3c/k reaches zero for k = 3c.
  const PiolaMap flat(base_box(), with_top(ProfileFunction::constant(0.1)), 0.3);
  try {
    flat.pullback_curl(cavity_field(), Vec3(0.2, 0.2, 0.1));
    FAIL("expected det_near_zero");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::det_near_zero);
  }
}

TEST_CASE("verify_piolamain: identical domains give equal norms and zero distance") {
  const auto g = ProfileFunction::oscillatory(2.0, 0.2, {1.0, 1.0});
  const PiolaMap map(with_top(g), with_top(g), 0.3);
  const PiolaReport r = verify_piolamain(cavity_field(), map, {6, 8});
  CHECK(r.norm_source > 1.0);
  CHECK(r.norm_target == doctest::Approx(r.norm_source).epsilon(1e-12));
  CHECK(r.overlap_distance < 1e-10);
  CHECK(r.identity_on_compact == 0.0);
}

TEST_CASE("oscillatory family: distances, norm gaps and second derivatives shrink with eps") {
  const auto fam = bump_family();
  const AnalyticVectorField phi = cavity_field();
  std::vector<PiolaReport> rows;
  std::vector<double> psi2;
  for (double eps : {0.2, 0.1, 0.05}) {
    const PiolaMap map = PiolaMap::from_family(fam, eps);
    PiolaReport r = verify_piolamain(phi, map, {6, 16});
    r.eps = eps;
    CHECK(r.identity_on_compact == 0.0);
    CHECK(r.min_det >= 0.5);
    CHECK(r.max_det <= 1.5);
    rows.push_back(r);
    const PiolaBounds b = sample_piola_bounds(map, 96, 12);
    CHECK(b.min_det >= 0.5);
    CHECK(b.max_det <= 1.5);
    CHECK(b.estimate_constant <= 100.0);
    psi2.push_back(b.psi_second * std::sqrt(map.kappa()));
  }
  for (int i = 1; i < 3; ++i) {
    CHECK(rows[i].overlap_distance < rows[i - 1].overlap_distance);
    CHECK(std::abs(rows[i].norm_target - rows[i].norm_source) <
          std::abs(rows[i - 1].norm_target - rows[i - 1].norm_source));
    CHECK(psi2[i] < psi2[i - 1]);
  }
  std::ostringstream os;
  write_piola_csv(os, rows);
  CHECK(os.str().rfind("# cavity-piola 1\neps,norm_source,norm_target,overlap_distance,min_det,max_det\n", 0) == 0);
}

TEST_CASE("box test fields: jacobians match differences, tangential traces vanish on every face") {
  const Rect W{{0.2, 0.7}, {-0.3, 0.5}};
  const double z_lo = -1.0, z_hi = 0.25;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& name : box_test_field_names()) {
    const AnalyticVectorField f = box_test_field(name, W, z_lo, z_hi);
    CHECK(f.tangential_trace_zero);
    for (int s = 0; s < 20; ++s) {
      const Vec3 p(W.x.lo + W.x.length() * u(rng), W.y.lo + W.y.length() * u(rng), z_lo + (z_hi - z_lo) * u(rng));
      const Mat3 fd = finite_difference_jacobian(f.u, p, 1e-6);
      CHECK((f.du(p) - fd).norm() < 1e-6 * (1.0 + fd.norm()));
      // Face points: the components tangential to the face vanish.
      const double a = u(rng), b = u(rng);
      for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side) {
          Vec3 q(W.x.lo + W.x.length() * a, W.y.lo + W.y.length() * b, z_lo + (z_hi - z_lo) * a);
          const double lo = axis == 0 ? W.x.lo : axis == 1 ? W.y.lo : z_lo;
          const double hi = axis == 0 ? W.x.hi : axis == 1 ? W.y.hi : z_hi;
          q[axis] = side ? hi : lo;
          const Vec3 v = f.u(q);
          for (int t = 0; t < 3; ++t)
            if (t != axis) CHECK(std::abs(v[t]) < 1e-12);
        }
    }
  }
  const Vec3 p(0.4, 0.1, -0.2);
  CHECK(std::abs(box_test_field("transverse", W, z_lo, z_hi).div(p)) < 1e-14);
  CHECK(box_test_field("gradient", W, z_lo, z_hi).curl(p).norm() < 1e-12);
  CHECK_THROWS_AS(box_test_field("swirl", W, z_lo, z_hi), Error);
  CHECK_THROWS_AS(box_test_field("mixed", W, 0.0, 0.0), Error);
}
