#include "cavity/fem.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_map>

#include "cavity/error.hpp"
#include "cavity/quadrature.hpp"

namespace cavity {

namespace {

constexpr std::array<std::array<int, 2>, 6> kEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

Mat3 frame_from_normal(const Vec3& nu) {
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(nu[k]) < std::abs(nu[axis])) axis = k;
  const Vec3 t1 = nu.cross(Vec3::Unit(axis)).normalized();
  const Vec3 t2 = nu.cross(t1);
  Mat3 b;
  b << nu, t1, t2;
  return b;
}

long long edge_key(int a, int b, long long n) {
  return a < b ? a * n + b : b * n + a;
}

}  // namespace

std::array<Vec3, 4> barycentric_gradients(const TetMesh& mesh, int t) {
  const auto& tet = mesh.tets[t];
  const Vec3& x0 = mesh.vertices[tet[0]];
  Mat3 J;
  J << mesh.vertices[tet[1]] - x0, mesh.vertices[tet[2]] - x0, mesh.vertices[tet[3]] - x0;
  const double det = J.determinant();
  if (!(det > 0.0)) fail(Errc::inverted_element, "tet " + std::to_string(t) + " has non-positive volume");
  const Mat3 inv = J.inverse();
  std::array<Vec3, 4> g;
  for (int k = 0; k < 3; ++k) g[k + 1] = inv.row(k).transpose();
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

ShapeEval eval_shape(int order, const std::array<Vec3, 4>& gl, const std::array<double, 4>& l) {
  ShapeEval s;
  if (order == 1) {
    for (int a = 0; a < 4; ++a) {
      s.value[a] = l[a];
      s.gradient[a] = gl[a];
    }
    return s;
  }
  for (int a = 0; a < 4; ++a) {
    s.value[a] = l[a] * (2.0 * l[a] - 1.0);
    s.gradient[a] = (4.0 * l[a] - 1.0) * gl[a];
  }
  for (int e = 0; e < 6; ++e) {
    const int i = kEdges[e][0], j = kEdges[e][1];
    s.value[4 + e] = 4.0 * l[i] * l[j];
    s.gradient[4 + e] = 4.0 * (l[j] * gl[i] + l[i] * gl[j]);
  }
  return s;
}

FemSpace build_space(const TetMesh& mesh, int order, BoundaryCondition bc) {
  if (order != 1 && order != 2) fail(Errc::range_error, "element order must be 1 or 2, got " + std::to_string(order));
  if (bc == BoundaryCondition::electric && !is_watertight(mesh))
    fail(Errc::non_manifold_boundary, "boundary surface is not a closed 2-manifold");
  FemSpace s;
  s.mesh = mesh;
  s.order = order;
  s.bc = bc;
  s.nodes = mesh.vertices;
  const int nv = static_cast<int>(mesh.vertices.size());
  const int npe = s.nodes_per_element();
  s.element_nodes.resize(mesh.tets.size() * npe);

  std::unordered_map<long long, int> edge_id;
  if (order == 2) edge_id.reserve(mesh.tets.size() * 2);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& tet = mesh.tets[t];
    int* en = s.element_nodes.data() + t * npe;
    for (int a = 0; a < 4; ++a) en[a] = tet[a];
    if (order == 1) continue;
    for (int e = 0; e < 6; ++e) {
      const int a = tet[kEdges[e][0]], b = tet[kEdges[e][1]];
      auto [it, inserted] = edge_id.try_emplace(edge_key(a, b, nv), static_cast<int>(s.nodes.size()));
      if (inserted) s.nodes.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
      en[4 + e] = it->second;
    }
  }

  const int nn = s.node_count();
  s.frames.assign(nn, NodeFrame{});
  if (bc == BoundaryCondition::electric) {
    std::vector<Vec3> normal_sum(nn, Vec3::Zero());
    std::vector<unsigned> patches(nn, 0u);
    for (const auto& f : mesh.boundary_faces) {
      const Vec3& p0 = mesh.vertices[f.v[0]];
      const double area = 0.5 * (mesh.vertices[f.v[1]] - p0).cross(mesh.vertices[f.v[2]] - p0).norm();
      std::array<int, 6> on{f.v[0], f.v[1], f.v[2], -1, -1, -1};
      if (order == 2)
        for (int e = 0; e < 3; ++e) on[3 + e] = edge_id.at(edge_key(f.v[e], f.v[(e + 1) % 3], nv));
      for (int a : on) {
        if (a < 0) continue;
        normal_sum[a] += area * f.normal;
        patches[a] |= 1u << static_cast<unsigned>(f.patch);
      }
    }
    for (int a = 0; a < nn; ++a) {
      NodeFrame& fr = s.frames[a];
      fr.patch_count = std::popcount(patches[a]);
      if (fr.patch_count == 1) {
        fr.free = 1;
        fr.basis = frame_from_normal(normal_sum[a].normalized());
      } else if (fr.patch_count > 1) {
        fr.free = 0;
      }
    }
  }
  s.dof_offset.assign(nn + 1, 0);
  for (int a = 0; a < nn; ++a) s.dof_offset[a + 1] = s.dof_offset[a] + s.frames[a].free;
  return s;
}

VecX FemSpace::expand(const VecX& reduced) const {
  if (reduced.size() != free_dofs()) fail(Errc::range_error, "reduced vector has the wrong size");
  VecX full = VecX::Zero(3 * node_count());
  for (int a = 0; a < node_count(); ++a) {
    const int k = frames[a].free;
    if (k > 0) full.segment<3>(3 * a) = frames[a].basis.leftCols(k) * reduced.segment(dof_offset[a], k);
  }
  return full;
}

VecX FemSpace::restrict(const VecX& full) const {
  if (full.size() != 3 * node_count()) fail(Errc::range_error, "nodal vector has the wrong size");
  VecX r(free_dofs());
  for (int a = 0; a < node_count(); ++a) {
    const int k = frames[a].free;
    if (k > 0) r.segment(dof_offset[a], k) = frames[a].basis.leftCols(k).transpose() * full.segment<3>(3 * a);
  }
  return r;
}

SparseRowMatrix FemSpace::expansion_matrix() const {
  std::vector<Triplet> t;
  t.reserve(3 * static_cast<std::size_t>(free_dofs()));
  for (int a = 0; a < node_count(); ++a)
    for (int p = 0; p < frames[a].free; ++p)
      for (int i = 0; i < 3; ++i) {
        const double v = frames[a].basis(i, p);
        if (v != 0.0) t.emplace_back(3 * a + i, dof_offset[a] + p, v);
      }
  SparseRowMatrix T(3 * node_count(), free_dofs());
  T.setFromTriplets(t.begin(), t.end());
  return T;
}

VecX FemSpace::interpolate(const std::function<Vec3(const Vec3&)>& f) const {
  VecX full(3 * node_count());
  for (int a = 0; a < node_count(); ++a) full.segment<3>(3 * a) = f(nodes[a]);
  return restrict(full);
}

Vec3 FemSpace::value(const VecX& reduced, int tet, const std::array<double, 4>& bary) const {
  const ShapeEval se = eval_shape(order, barycentric_gradients(mesh, tet), bary);
  const int* en = element(tet);
  Vec3 u = Vec3::Zero();
  for (int a = 0; a < nodes_per_element(); ++a) {
    const int k = frames[en[a]].free;
    if (k > 0) u += se.value[a] * (frames[en[a]].basis.leftCols(k) * reduced.segment(dof_offset[en[a]], k));
  }
  return u;
}

Mat3 FemSpace::jacobian(const VecX& reduced, int tet, const std::array<double, 4>& bary) const {
  const ShapeEval se = eval_shape(order, barycentric_gradients(mesh, tet), bary);
  const int* en = element(tet);
  Mat3 J = Mat3::Zero();
  for (int a = 0; a < nodes_per_element(); ++a) {
    const int k = frames[en[a]].free;
    if (k > 0) J += (frames[en[a]].basis.leftCols(k) * reduced.segment(dof_offset[en[a]], k)) * se.gradient[a].transpose();
  }
  return J;
}

FemForms::FemForms(const FemSpace& space) : space_(space) {
  const int nn = space.node_count();
  const int npe = space.nodes_per_element();
  const int ne = space.element_count();

  // Node-pair pattern.
  std::vector<std::vector<int>> adj(nn);
  for (int t = 0; t < ne; ++t) {
    const int* en = space.element(t);
    for (int a = 0; a < npe; ++a) adj[en[a]].insert(adj[en[a]].end(), en, en + npe);
  }
  offsets_.assign(nn + 1, 0);
  for (int a = 0; a < nn; ++a) {
    auto& l = adj[a];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    offsets_[a + 1] = offsets_[a] + static_cast<int>(l.size());
  }
  cols_.reserve(offsets_.back());
  for (auto& l : adj) {
    cols_.insert(cols_.end(), l.begin(), l.end());
    std::vector<int>().swap(l);
  }
  grad_.assign(cols_.size(), Mat3::Zero());
  mass_.assign(cols_.size(), 0.0);

  auto slot = [&](int a, int b) {
    const auto first = cols_.begin() + offsets_[a], last = cols_.begin() + offsets_[a + 1];
    return static_cast<std::size_t>(std::lower_bound(first, last, b) - cols_.begin());
  };

  const TetRule rule = tet_rule(space.order == 1 ? 3 : 4);
  std::vector<Mat3> S(npe * npe);
  std::vector<double> m(npe * npe);
  for (int t = 0; t < ne; ++t) {
    const double vol = space.mesh.signed_volume(t);
    const auto gl = barycentric_gradients(space.mesh, t);
    const int* en = space.element(t);
    if (space.order == 1) {
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          S[a * 4 + b] = vol * gl[a] * gl[b].transpose();
          m[a * 4 + b] = vol * (a == b ? 0.1 : 0.05);
        }
    } else {
      std::fill(S.begin(), S.end(), Mat3::Zero());
      std::fill(m.begin(), m.end(), 0.0);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const ShapeEval se = eval_shape(2, gl, rule.bary[q]);
        const double w = vol * rule.weights[q];
        for (int a = 0; a < npe; ++a) {
          const Vec3 ga = w * se.gradient[a];
          const double va = w * se.value[a];
          for (int b = 0; b < npe; ++b) {
            S[a * npe + b].noalias() += ga * se.gradient[b].transpose();
            m[a * npe + b] += va * se.value[b];
          }
        }
      }
    }
    for (int a = 0; a < npe; ++a)
      for (int b = 0; b < npe; ++b) {
        const std::size_t k = slot(en[a], en[b]);
        grad_[k] += S[a * npe + b];
        mass_[k] += m[a * npe + b];
      }
  }
}

SparseSymOp FemForms::reduce(double c_curl, double c_div, double c_mass, double c_grad) const {
  const FemSpace& s = space_;
  const int nn = s.node_count();
  const int n = s.free_dofs();
  Eigen::VectorXi row_nnz = Eigen::VectorXi::Zero(n);
  for (int a = 0; a < nn; ++a) {
    int width = 0;
    for (int k = offsets_[a]; k < offsets_[a + 1]; ++k) width += s.frames[cols_[k]].free;
    for (int p = 0; p < s.frames[a].free; ++p) row_nnz[s.dof_offset[a] + p] = width;
  }
  SparseRowMatrix K(n, n);
  K.reserve(row_nnz);
  for (int a = 0; a < nn; ++a) {
    const int ka = s.frames[a].free;
    if (ka == 0) continue;
    const auto Fa = s.frames[a].basis.leftCols(ka);
    for (int k = offsets_[a]; k < offsets_[a + 1]; ++k) {
      const int b = cols_[k];
      const int kb = s.frames[b].free;
      if (kb == 0) continue;
      const Mat3& S = grad_[k];
      const double tr = S.trace();
      const Mat3 block = c_curl * (tr * Mat3::Identity() - S.transpose()) + c_div * S +
                         (c_mass * mass_[k] + c_grad * tr) * Mat3::Identity();
      const MatX red = Fa.transpose() * block * s.frames[b].basis.leftCols(kb);
      for (int p = 0; p < ka; ++p)
        for (int q = 0; q < kb; ++q) K.insert(s.dof_offset[a] + p, s.dof_offset[b] + q) = red(p, q);
    }
  }
  return SparseSymOp(std::move(K));
}

SparseSymOp FemForms::curl_curl() const { return reduce(1.0, 0.0, 0.0, 0.0); }
SparseSymOp FemForms::div_div() const { return reduce(0.0, 1.0, 0.0, 0.0); }
SparseSymOp FemForms::mass() const { return reduce(0.0, 0.0, 1.0, 0.0); }
SparseSymOp FemForms::h1() const { return reduce(0.0, 0.0, 1.0, 1.0); }

SparseSymOp FemForms::stiffness(double tau) const {
  if (!(tau > 0.0)) fail(Errc::range_error, "tau must be positive");
  return reduce(1.0, tau, 0.0, 0.0);
}

SparseSymOp FemForms::scalar_mass() const {
  const int nn = space_.node_count();
  SparseRowMatrix K(nn, nn);
  Eigen::VectorXi row_nnz(nn);
  for (int a = 0; a < nn; ++a) row_nnz[a] = offsets_[a + 1] - offsets_[a];
  K.reserve(row_nnz);
  for (int a = 0; a < nn; ++a)
    for (int k = offsets_[a]; k < offsets_[a + 1]; ++k) K.insert(a, cols_[k]) = mass_[k];
  return SparseSymOp(std::move(K));
}

SparseSymOp assemble_stiffness(const FemSpace& space, double tau) { return FemForms(space).stiffness(tau); }
SparseSymOp assemble_mass(const FemSpace& space) { return FemForms(space).mass(); }

double divergence_l2(const FemSpace& space, const VecX& u) {
  const TetRule rule = tet_rule(space.order == 1 ? 2 : 3);
  CompensatedSum sum;
  for (int t = 0; t < space.element_count(); ++t) {
    const double vol = space.mesh.signed_volume(t);
    const auto gl = barycentric_gradients(space.mesh, t);
    const int* en = space.element(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const ShapeEval se = eval_shape(space.order, gl, rule.bary[q]);
      double div = 0.0;
      for (int a = 0; a < space.nodes_per_element(); ++a) {
        const NodeFrame& fr = space.frames[en[a]];
        if (fr.free > 0)
          div += se.gradient[a].dot(fr.basis.leftCols(fr.free) * u.segment(space.dof_offset[en[a]], fr.free));
      }
      sum.add(vol * rule.weights[q] * div * div);
    }
  }
  return std::sqrt(sum.value());
}

double divergence_l2(const SparseSymOp& div_div, const VecX& u) {
  return std::sqrt(std::max(0.0, div_div.quad(u)));
}

}  // namespace cavity
