#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "cavity/error.hpp"
#include "cavity/fem.hpp"
#include "cavity/quadrature.hpp"
#include "doctest.h"

using namespace cavity;

namespace {

const Rect kUnit{{0, 1}, {0, 1}};

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

VecX random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

TetMesh single_tet() {
  TetMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.tets = {{0, 1, 2, 3}};
  return m;
}

TetMesh wavy_mesh(int n) {
  const TetMesh box = mesh_box(kUnit, -1.0, 0.0, {n, n, n});
  return shear_fit(box, ProfileFunction::oscillatory(2.0, 0.5, {0.0, 1.0}), -1.0, 0.0);
}

// Independent quadrature of int |curl u|^2 + tau |div u|^2 from the field's pointwise Jacobian.
double energy_by_quadrature(const FemSpace& s, const VecX& u, double tau) {
  const TetRule rule = tet_rule(5);
  CompensatedSum sum;
  for (int t = 0; t < s.element_count(); ++t) {
    const double vol = s.mesh.signed_volume(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Mat3 J = s.jacobian(u, t, rule.bary[q]);
      sum.add(vol * rule.weights[q] * (curl_from_jacobian(J).squaredNorm() + tau * J.trace() * J.trace()));
    }
  }
  return sum.value();
}

}  // namespace

TEST_CASE("Gauss-Legendre and tet rules integrate polynomials exactly") {
  for (int p = 1; p <= 20; ++p) {
    const LineRule g = gauss_legendre(p);
    double w = 0.0;
    for (double x : g.weights) w += x;
    CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    // x^(2p-1) integrates to 1/(2p).
    double s = 0.0;
    for (int i = 0; i < p; ++i) s += g.weights[i] * std::pow(g.nodes[i], 2 * p - 1);
    CHECK(s == doctest::Approx(1.0 / (2 * p)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gauss_legendre(0), Error);
  for (int p : {2, 3, 4, 5}) {
    const TetRule r = tet_rule(p);
    const int deg = 2 * p - 3;
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b)
        for (int c = 0; a + b + c <= deg; ++c) {
          double s = 0.0;
          for (std::size_t q = 0; q < r.size(); ++q)
            s += r.weights[q] * std::pow(r.bary[q][1], a) * std::pow(r.bary[q][2], b) * std::pow(r.bary[q][3], c);
          // Reference volume is 1/6; weights integrate the mean.
          const double exact = 6.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
          CHECK(s == doctest::Approx(exact).epsilon(1e-12));
        }
  }
}

TEST_CASE("free DOF count on the unit cube matches a normal-rank enumeration") {
  for (int order : {1, 2}) {
    const TetMesh m = mesh_box(kUnit, 0.0, 1.0, {2, 2, 2});
    const FemSpace s = build_space(m, order);
    // Brute force: gather the normals of boundary faces touching each node (by position).
    int free = 0;
    for (int a = 0; a < s.node_count(); ++a) {
      std::vector<Vec3> normals;
      for (const auto& f : m.boundary_faces) {
        const Vec3& p0 = m.vertices[f.v[0]];
        const Vec3 e1 = m.vertices[f.v[1]] - p0, e2 = m.vertices[f.v[2]] - p0;
        // Node on the closed face triangle?
        Mat3 A;
        A << e1, e2, f.normal;
        const Vec3 c = A.colPivHouseholderQr().solve(s.nodes[a] - p0);
        if (std::abs(c[2]) < 1e-12 && c[0] > -1e-12 && c[1] > -1e-12 && c[0] + c[1] < 1 + 1e-12)
          normals.push_back(f.normal);
      }
      if (normals.empty()) {
        free += 3;
        continue;
      }
      MatX N(3, normals.size());
      for (std::size_t k = 0; k < normals.size(); ++k) N.col(k) = normals[k];
      const int rank = Eigen::FullPivLU<MatX>(N).setThreshold(1e-9).rank();
      free += rank == 1 ? 1 : 0;
    }
    CHECK(s.free_dofs() == free);
    if (order == 1) CHECK(s.free_dofs() == 9);
    CHECK(s.free_dofs() + s.constrained_dofs() == 3 * s.node_count());
  }
}

TEST_CASE("frames are orthonormal and flat tops constrain x and y") {
  const FemSpace s = build_space(mesh_box(kUnit, -1.0, 0.0, {3, 3, 2}), 2);
  for (int a = 0; a < s.node_count(); ++a) {
    const Mat3& B = s.frames[a].basis;
    CHECK((B.transpose() * B - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    const Vec3& p = s.nodes[a];
    const bool top_interior = std::abs(p.z()) < 1e-14 && p.x() > 1e-9 && p.x() < 1 - 1e-9 && p.y() > 1e-9 && p.y() < 1 - 1e-9;
    if (top_interior) {
      CHECK(s.frames[a].free == 1);
      CHECK((B.col(0) - Vec3::UnitZ()).norm() < 1e-14);
    }
  }
}

TEST_CASE("electric constraint: nu x u vanishes at every boundary node") {
  const FemSpace s = build_space(wavy_mesh(6), 2);
  const VecX full = s.expand(random_vector(s.free_dofs(), 2));
  std::vector<Vec3> nsum(s.node_count(), Vec3::Zero());
  std::vector<int> touched(s.node_count(), 0);
  for (int a = 0; a < s.node_count(); ++a) {
    if (s.frames[a].free == 3) continue;
    const Vec3 u = full.segment<3>(3 * a);
    if (s.frames[a].free == 0) {
      CHECK(u.norm() == 0.0);
    } else {
      CHECK(s.frames[a].basis.col(0).cross(u).norm() < 1e-12 * std::max(1.0, u.norm()));
    }
  }
  // Side patches are flat: there the nodal normal is the exact face normal.
  for (const auto& f : s.mesh.boundary_faces) {
    if (f.tag != FaceTag::side) continue;
    for (int v : f.v) CHECK(f.normal.cross(full.segment<3>(3 * v)).norm() < 1e-12);
  }
}

TEST_CASE("unconstrained forms: kernel, rotation field and tau linearity") {
  const FemSpace one = build_space(single_tet(), 1, BoundaryCondition::none);
  const FemSpace two = build_space(single_tet(), 2, BoundaryCondition::none);
  for (const FemSpace* s : {&one, &two}) {
    FemForms forms(*s);
    const SparseSymOp A = forms.stiffness(1.0);
    const VecX c = s->interpolate([](const Vec3&) { return Vec3(0.3, -1.2, 2.0); });
    CHECK((A * c).norm() < 1e-13);
    const VecX r = s->interpolate([](const Vec3& p) { return Vec3(p.y(), -p.x(), 0.0); });
    // curl = (0, 0, -2), div = 0 on a tet of volume 1/6.
    CHECK(A.quad(r) == doctest::Approx(4.0 / 6.0).epsilon(1e-13));
    const SparseSymOp diff = forms.stiffness(2.0).combine(1.0, A, -1.0);
    CHECK((diff.to_dense() - forms.div_div().to_dense()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("mass row sums and volume") {
  for (int order : {1, 2}) {
    for (int n : {2, 4}) {
      const FemSpace s = build_space(mesh_box(kUnit, 0.0, 1.0, {n, n, n}), order, BoundaryCondition::none);
      const SparseSymOp m = FemForms(s).scalar_mass();
      const VecX ones = VecX::Ones(s.node_count());
      CHECK(ones.dot(m * ones) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const FemSpace w = build_space(wavy_mesh(4), order, BoundaryCondition::none);
    const VecX ones = VecX::Ones(w.node_count());
    CHECK(ones.dot(FemForms(w).scalar_mass() * ones) == doctest::Approx(w.mesh.volume()).epsilon(1e-12));
  }
}

TEST_CASE("mass is positive definite and the stiffness positive semidefinite") {
  const FemSpace s = build_space(wavy_mesh(3), 2);
  FemForms forms(s);
  const auto M = forms.mass(), A = forms.stiffness(1.0);
  CHECK(M.symmetry_error() < 1e-14);
  CHECK(A.symmetry_error() < 1e-10);
  CHECK(A.structurally_symmetric());
  const VecX em = Eigen::SelfAdjointEigenSolver<MatX>(M.to_dense()).eigenvalues();
  const VecX ea = Eigen::SelfAdjointEigenSolver<MatX>(A.to_dense()).eigenvalues();
  CHECK(em.minCoeff() > 0.0);
  CHECK(ea.minCoeff() >= -1e-8 * A.max_abs());
}

TEST_CASE("divergence norm of linear fields") {
  const FemSpace s = build_space(mesh_box(kUnit, 0.0, 1.0, {3, 3, 3}), 1, BoundaryCondition::none);
  const SparseSymOp D = FemForms(s).div_div();
  const VecX x = s.interpolate([](const Vec3& p) { return p; });
  CHECK(divergence_l2(D, x) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(divergence_l2(s, x) == doctest::Approx(3.0).epsilon(1e-12));
  const VecX r = s.interpolate([](const Vec3& p) { return Vec3(p.y(), -p.x(), 0.0); });
  CHECK(divergence_l2(s, r) < 1e-10);
  CHECK(divergence_l2(s, VecX(-2.5 * x)) == doctest::Approx(7.5).epsilon(1e-12));
  // Elementwise and matrix forms agree on a general field.
  const FemSpace w = build_space(wavy_mesh(3), 2);
  const VecX u = random_vector(w.free_dofs(), 8);
  CHECK(divergence_l2(w, u) == doctest::Approx(divergence_l2(FemForms(w).div_div(), u)).epsilon(1e-11));
}

TEST_CASE("Galerkin consistency against pointwise quadrature") {
  for (int order : {1, 2}) {
    const FemSpace s = build_space(wavy_mesh(3), order);
    FemForms forms(s);
    const VecX u = random_vector(s.free_dofs(), 11 + order);
    const double tau = 2.5;
    const double exact = energy_by_quadrature(s, u, tau);
    CHECK(forms.stiffness(tau).quad(u) == doctest::Approx(exact).epsilon(1e-10));
    // Mass and H1 against pointwise values.
    const TetRule rule = tet_rule(5);
    CompensatedSum l2, grad;
    for (int t = 0; t < s.element_count(); ++t)
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double w = s.mesh.signed_volume(t) * rule.weights[q];
        l2.add(w * s.value(u, t, rule.bary[q]).squaredNorm());
        grad.add(w * s.jacobian(u, t, rule.bary[q]).squaredNorm());
      }
    CHECK(forms.mass().quad(u) == doctest::Approx(l2.value()).epsilon(1e-10));
    CHECK(forms.h1().quad(u) == doctest::Approx(l2.value() + grad.value()).epsilon(1e-10));
  }
}

TEST_CASE("expansion matrix agrees with expand and restrict") {
  const FemSpace s = build_space(wavy_mesh(3), 1);
  const VecX u = random_vector(s.free_dofs(), 4);
  const SparseRowMatrix T = s.expansion_matrix();
  CHECK((T * u - s.expand(u)).norm() < 1e-14);
  CHECK((s.restrict(s.expand(u)) - u).norm() < 1e-13);
  // Reduced forms equal the congruence of the unconstrained ones.
  const FemSpace free_space = build_space(s.mesh, 1, BoundaryCondition::none);
  const SparseSymOp full = FemForms(free_space).stiffness(1.0);
  const SparseSymOp red = FemForms(s).stiffness(1.0);
  CHECK((full.congruence(T).to_dense() - red.to_dense()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("invalid inputs") {
  const TetMesh m = mesh_box(kUnit, 0.0, 1.0, {1, 1, 1});
  CHECK_THROWS_AS(build_space(m, 3), Error);
  const FemSpace s = build_space(m, 1);
  CHECK_THROWS_AS(FemForms(s).stiffness(0.0), Error);
  TetMesh open = m;
  open.boundary_faces.pop_back();
  try {
    build_space(open, 1);
    FAIL("expected non_manifold_boundary");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_manifold_boundary);
  }
}
