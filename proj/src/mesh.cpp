#include "cavity/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cavity/error.hpp"

namespace cavity {

namespace {

// Axis orders of the six Kuhn tets of a hex; each walks from corner 000 to 111.
constexpr int kKuhn[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};

Patch patch_of(const TetMesh& m, const std::array<int, 3>& face) {
  std::array<std::array<int, 3>, 3> ijk;
  for (int a = 0; a < 3; ++a) ijk[a] = m.vertex_ijk(face[a]);
  auto all = [&](int axis, int value) {
    return ijk[0][axis] == value && ijk[1][axis] == value && ijk[2][axis] == value;
  };
  if (all(2, m.n[2])) return Patch::top;
  if (all(2, 0)) return Patch::bottom;
  if (all(0, 0)) return Patch::x_lo;
  if (all(0, m.n[0])) return Patch::x_hi;
  if (all(1, 0)) return Patch::y_lo;
  if (all(1, m.n[1])) return Patch::y_hi;
  fail(Errc::non_manifold_boundary, "boundary face does not lie on the box boundary");
}

FaceTag tag_of(Patch p) {
  if (p == Patch::top) return FaceTag::top;
  if (p == Patch::bottom) return FaceTag::bottom;
  return FaceTag::side;
}

void extract_boundary(TetMesh& m) {
  struct Entry {
    std::array<int, 3> key;
    int tet;
    int opposite;
  };
  std::vector<Entry> faces;
  faces.reserve(4 * m.tets.size());
  for (int t = 0; t < static_cast<int>(m.tets.size()); ++t) {
    for (int o = 0; o < 4; ++o) {
      std::array<int, 3> f;
      int c = 0;
      for (int a = 0; a < 4; ++a)
        if (a != o) f[c++] = m.tets[t][a];
      std::sort(f.begin(), f.end());
      faces.push_back({f, t, o});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
  m.boundary_faces.clear();
  for (std::size_t a = 0; a < faces.size();) {
    std::size_t b = a + 1;
    while (b < faces.size() && faces[b].key == faces[a].key) ++b;
    if (b - a > 2) fail(Errc::non_manifold_boundary, "face shared by more than two tets");
    if (b - a == 1) {
      const Entry& e = faces[a];
      BoundaryFace bf;
      bf.tet = e.tet;
      bf.v = e.key;
      const Vec3 opp = m.vertices[m.tets[e.tet][e.opposite]];
      const Vec3 n = (m.vertices[bf.v[1]] - m.vertices[bf.v[0]]).cross(m.vertices[bf.v[2]] - m.vertices[bf.v[0]]);
      if (n.dot(m.vertices[bf.v[0]] - opp) < 0.0) std::swap(bf.v[1], bf.v[2]);
      bf.patch = patch_of(m, bf.v);
      bf.tag = tag_of(bf.patch);
      m.boundary_faces.push_back(bf);
    }
    a = b;
  }
  m.update_normals();
}

}  // namespace

std::string_view to_string(FaceTag tag) noexcept {
  switch (tag) {
    case FaceTag::top: return "top";
    case FaceTag::side: return "side";
    case FaceTag::bottom: return "bottom";
  }
  return "unknown";
}

std::array<int, 3> TetMesh::vertex_ijk(int v) const {
  const int nx = n[0] + 1, ny = n[1] + 1;
  return {v % nx, (v / nx) % ny, v / (nx * ny)};
}

double TetMesh::signed_volume(int t) const {
  const auto& T = tets[t];
  const Vec3& a = vertices[T[0]];
  return (vertices[T[1]] - a).cross(vertices[T[2]] - a).dot(vertices[T[3]] - a) / 6.0;
}

double TetMesh::volume() const {
  double v = 0.0;
  for (int t = 0; t < static_cast<int>(tets.size()); ++t) v += signed_volume(t);
  return v;
}

void TetMesh::update_normals() {
  for (auto& f : boundary_faces) {
    const Vec3 n = (vertices[f.v[1]] - vertices[f.v[0]]).cross(vertices[f.v[2]] - vertices[f.v[0]]);
    f.normal = n.normalized();
  }
}

TetMesh mesh_box(const Rect& W, double z_lo, double z_hi, std::array<int, 3> n) {
  if (!(W.x.length() > 0.0 && W.y.length() > 0.0 && z_hi > z_lo))
    fail(Errc::degenerate_box, "box has an empty side");
  if (n[2] < 1) fail(Errc::degenerate_box, "box needs at least one cell per axis");
  std::vector<double> levels(n[2] + 1);
  const double hz = (z_hi - z_lo) / n[2];
  for (int k = 0; k < n[2]; ++k) levels[k] = z_lo + k * hz;
  levels[n[2]] = z_hi;
  return mesh_box(W, levels, {n[0], n[1]});
}

TetMesh mesh_box(const Rect& W, const std::vector<double>& z_levels, std::array<int, 2> n_xy) {
  if (z_levels.size() < 2) fail(Errc::degenerate_box, "box needs at least one cell per axis");
  for (std::size_t k = 1; k < z_levels.size(); ++k)
    if (!(z_levels[k] > z_levels[k - 1])) fail(Errc::degenerate_box, "vertical levels must increase strictly");
  const double z_lo = z_levels.front(), z_hi = z_levels.back();
  if (!(W.x.length() > 0.0 && W.y.length() > 0.0)) fail(Errc::degenerate_box, "box has an empty side");
  const std::array<int, 3> n{n_xy[0], n_xy[1], static_cast<int>(z_levels.size()) - 1};
  if (n[0] < 1 || n[1] < 1) fail(Errc::degenerate_box, "box needs at least one cell per axis");
  TetMesh m;
  m.base = W;
  m.z_lo = z_lo;
  m.z_hi = z_hi;
  m.n = n;
  const double hx = W.x.length() / n[0], hy = W.y.length() / n[1];
  m.vertices.reserve(static_cast<std::size_t>(n[0] + 1) * (n[1] + 1) * (n[2] + 1));
  for (int k = 0; k <= n[2]; ++k)
    for (int j = 0; j <= n[1]; ++j)
      for (int i = 0; i <= n[0]; ++i) {
        // Snap the far faces exactly onto the box bounds.
        Vec3 p(W.x.lo + i * hx, W.y.lo + j * hy, z_levels[k]);
        if (i == n[0]) p[0] = W.x.hi;
        if (j == n[1]) p[1] = W.y.hi;
        m.vertices.push_back(p);
      }
  m.tets.reserve(6 * static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i)
        for (const auto& order : kKuhn) {
          std::array<int, 3> c{i, j, k};
          std::array<int, 4> T;
          T[0] = m.vertex_index(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[order[s]];
            T[s + 1] = m.vertex_index(c[0], c[1], c[2]);
          }
          m.tets.push_back(T);
          if (m.signed_volume(static_cast<int>(m.tets.size()) - 1) < 0.0) std::swap(m.tets.back()[2], m.tets.back()[3]);
        }
  extract_boundary(m);
  return m;
}

std::vector<double> graded_levels(double z_lo, double z_hi, double top_layer, double ratio, double max_layer) {
  if (!(z_hi > z_lo)) fail(Errc::degenerate_box, "box has an empty side");
  if (!(top_layer > 0.0 && ratio >= 1.0 && max_layer >= top_layer))
    fail(Errc::degenerate_box, "grading needs 0 < top_layer <= max_layer and ratio >= 1");
  // Layer thicknesses from the top down, then the whole stack is stretched to fit exactly.
  std::vector<double> widths;
  double sum = 0.0, w = top_layer;
  while (sum + 1e-12 * (z_hi - z_lo) < z_hi - z_lo) {
    widths.push_back(w);
    sum += w;
    w = std::min(w * ratio, max_layer);
  }
  // Drop a sliver at the bottom instead of keeping a thin cell there.
  if (widths.size() > 1 && sum - (z_hi - z_lo) > 0.5 * widths.back()) {
    sum -= widths.back();
    widths.pop_back();
  }
  const double scale = (z_hi - z_lo) / sum;
  std::vector<double> levels(widths.size() + 1);
  levels.back() = z_hi;
  double z = z_hi;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    z -= widths[k] * scale;
    levels[widths.size() - 1 - k] = z;
  }
  levels.front() = z_lo;
  return levels;
}

TetMesh shear_fit(const TetMesh& mesh, const ProfileFunction& g, double z_lo, double z_top_ref) {
  if (!(z_top_ref > z_lo)) fail(Errc::degenerate_box, "shear reference top must lie above z_lo");
  TetMesh out = mesh;
  const double inv = 1.0 / (z_top_ref - z_lo);
  for (auto& p : out.vertices) {
    const double top = g.value(Vec2(p[0], p[1]));
    if (!(top > z_lo)) {
      std::ostringstream msg;
      msg << "profile value " << top << " at (" << p[0] << ", " << p[1] << ") is not above z_lo = " << z_lo;
      fail(Errc::inverted_element, msg.str());
    }
    p[2] = z_lo + (p[2] - z_lo) * (top - z_lo) * inv;
  }
  // Top vertices sit on the graph exactly.
  for (int j = 0; j <= out.n[1]; ++j)
    for (int i = 0; i <= out.n[0]; ++i) {
      Vec3& p = out.vertices[out.vertex_index(i, j, out.n[2])];
      if (mesh.vertices[out.vertex_index(i, j, out.n[2])][2] == z_top_ref) p[2] = g.value(Vec2(p[0], p[1]));
    }
  for (int t = 0; t < static_cast<int>(out.tets.size()); ++t) {
    if (!(out.signed_volume(t) > 0.0)) {
      std::ostringstream msg;
      msg << "tet " << t << " inverted by the shear (volume " << out.signed_volume(t) << "); refine the mesh";
      fail(Errc::inverted_element, msg.str());
    }
  }
  out.update_normals();
  return out;
}

MeshQuality mesh_quality(const TetMesh& mesh) {
  MeshQuality q;
  q.min_signed_volume = std::numeric_limits<double>::infinity();
  constexpr int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  constexpr int kFaces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  for (int t = 0; t < static_cast<int>(mesh.tets.size()); ++t) {
    const auto& T = mesh.tets[t];
    const double vol = mesh.signed_volume(t);
    q.min_signed_volume = std::min(q.min_signed_volume, vol);
    double longest = 0.0;
    for (const auto& e : kEdges) longest = std::max(longest, (mesh.vertices[T[e[0]]] - mesh.vertices[T[e[1]]]).norm());
    q.h_max = std::max(q.h_max, longest);
    double area = 0.0;
    for (const auto& f : kFaces) {
      const Vec3& a = mesh.vertices[T[f[0]]];
      area += 0.5 * (mesh.vertices[T[f[1]]] - a).cross(mesh.vertices[T[f[2]]] - a).norm();
    }
    const double inradius = 3.0 * std::abs(vol) / area;
    const double aspect = inradius > 0.0 ? longest / (2.0 * std::sqrt(6.0) * inradius)
                                         : std::numeric_limits<double>::infinity();
    q.max_aspect_ratio = std::max(q.max_aspect_ratio, aspect);
  }
  if (mesh.tets.empty()) q.min_signed_volume = 0.0;
  return q;
}

bool is_watertight(const TetMesh& mesh) {
  // Directed edge counts: each undirected edge must appear once in each direction.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : mesh.boundary_faces)
    for (int a = 0; a < 3; ++a) ++directed[{f.v[a], f.v[(a + 1) % 3]}];
  for (const auto& [e, count] : directed) {
    if (count != 1) return false;
    auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return !mesh.boundary_faces.empty();
}

Eigen::Vector4d barycentric(const TetMesh& mesh, int t, const Vec3& p) {
  const auto& T = mesh.tets[t];
  const Vec3& a = mesh.vertices[T[0]];
  Mat3 J;
  J.col(0) = mesh.vertices[T[1]] - a;
  J.col(1) = mesh.vertices[T[2]] - a;
  J.col(2) = mesh.vertices[T[3]] - a;
  const Vec3 l = J.partialPivLu().solve(p - a);
  return {1.0 - l.sum(), l[0], l[1], l[2]};
}

PointLocation locate_point(const TetMesh& mesh, const Vec3& p, double tol) {
  const Rect& W = mesh.base;
  const double hx = W.x.length() / mesh.n[0], hy = W.y.length() / mesh.n[1];
  const int ic = std::clamp(static_cast<int>(std::floor((p[0] - W.x.lo) / hx)), 0, mesh.n[0] - 1);
  const int jc = std::clamp(static_cast<int>(std::floor((p[1] - W.y.lo) / hy)), 0, mesh.n[1] - 1);

  PointLocation best;
  double best_min = -std::numeric_limits<double>::infinity();
  auto try_column = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= mesh.n[0] || j >= mesh.n[1]) return false;
    for (int k = 0; k < mesh.n[2]; ++k) {
      double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
      for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
          for (int di = 0; di < 2; ++di) {
            const double z = mesh.vertices[mesh.vertex_index(i + di, j + dj, k + dk)][2];
            zmin = std::min(zmin, z);
            zmax = std::max(zmax, z);
          }
      const double pad = tol * (1.0 + zmax - zmin);
      if (p[2] < zmin - pad || p[2] > zmax + pad) continue;
      const int hex = i + mesh.n[0] * (j + mesh.n[1] * k);
      for (int l = 0; l < 6; ++l) {
        const int t = 6 * hex + l;
        const Eigen::Vector4d b = barycentric(mesh, t, p);
        const double m = b.minCoeff();
        if (m > best_min) {
          best_min = m;
          best.tet = t;
          for (int a = 0; a < 4; ++a) best.bary[a] = b[a];
        }
        if (m >= -tol) return true;
      }
    }
    return false;
  };
  if (try_column(ic, jc)) return best;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di)
      if ((di || dj) && try_column(ic + di, jc + dj)) return best;
  return {};
}

void write_mesh(std::ostream& os, const TetMesh& mesh) {
  os.precision(17);
  os << "cavity-mesh 1\n";
  os << "vertices " << mesh.vertices.size() << "\n";
  for (const auto& p : mesh.vertices) os << p[0] << " " << p[1] << " " << p[2] << "\n";
  os << "tets " << mesh.tets.size() << "\n";
  for (const auto& t : mesh.tets) os << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  os << "boundary_faces " << mesh.boundary_faces.size() << "\n";
  for (const auto& f : mesh.boundary_faces)
    os << f.v[0] << " " << f.v[1] << " " << f.v[2] << " " << to_string(f.tag) << " " << static_cast<int>(f.patch)
       << "\n";
}

void write_mesh(const std::string& path, const TetMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_failure, "cannot write mesh file " + path);
  write_mesh(out, mesh);
  if (!out) fail(Errc::io_failure, "error while writing mesh file " + path);
}

}  // namespace cavity
