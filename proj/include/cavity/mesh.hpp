#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "cavity/linalg.hpp"
#include "cavity/profile.hpp"

namespace cavity {

enum class FaceTag { top, side, bottom };

std::string_view to_string(FaceTag tag) noexcept;

/// Planar patches of the box boundary. Faces on the same patch share a smooth normal field.
enum class Patch { x_lo = 0, x_hi, y_lo, y_hi, bottom, top };

struct BoundaryFace {
  std::array<int, 3> v{};  // counter-clockwise seen from outside
  Vec3 normal = Vec3::Zero();
  FaceTag tag = FaceTag::side;
  Patch patch = Patch::x_lo;
  int tet = -1;
};

/// Tetrahedral mesh of a (possibly sheared) box, split hex by hex into 6 tets along the main
/// diagonal. The structured layout is kept for fast point location:
/// vertex (i, j, k) has index i + (n0 + 1) * (j + (n1 + 1) * k) and hex (i, j, k) owns tets
/// 6 * (i + n0 * (j + n1 * k)) + 0..5.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<BoundaryFace> boundary_faces;

  Rect base;
  double z_lo = 0.0;
  double z_hi = 1.0;
  std::array<int, 3> n{};

  int vertex_index(int i, int j, int k) const { return i + (n[0] + 1) * (j + (n[1] + 1) * k); }
  std::array<int, 3> vertex_ijk(int v) const;
  double signed_volume(int t) const;
  double volume() const;
  /// Recomputes outward normals of the boundary faces from the current vertex positions.
  void update_normals();
};

TetMesh mesh_box(const Rect& W, double z_lo, double z_hi, std::array<int, 3> n);
/// Box with uniform horizontal cells and the given strictly increasing vertical levels.
TetMesh mesh_box(const Rect& W, const std::vector<double>& z_levels, std::array<int, 2> n_xy);

/// Vertical levels on [z_lo, z_hi], finest at the top: the layer widths grow geometrically
/// from top_layer by `ratio` until they reach max_layer (all rescaled to fill the interval).
std::vector<double> graded_levels(double z_lo, double z_hi, double top_layer, double ratio, double max_layer);

/// Vertical shear z -> z_lo + (z - z_lo) (g(x) - z_lo) / (z_top_ref - z_lo).
/// Throws Errc::inverted_element when a tet loses positive volume.
TetMesh shear_fit(const TetMesh& mesh, const ProfileFunction& g, double z_lo, double z_top_ref);

struct MeshQuality {
  double min_signed_volume = 0.0;
  double max_aspect_ratio = 0.0;  // longest edge / (2 sqrt(6) inradius); 1 for a regular tet
  double h_max = 0.0;
};

MeshQuality mesh_quality(const TetMesh& mesh);

/// Every boundary edge is shared by exactly two boundary faces, with opposite orientations.
bool is_watertight(const TetMesh& mesh);

/// Located point: tet index and barycentric coordinates (all >= -tol).
struct PointLocation {
  int tet = -1;
  std::array<double, 4> bary{};
  bool found() const { return tet >= 0; }
};

Eigen::Vector4d barycentric(const TetMesh& mesh, int t, const Vec3& p);
PointLocation locate_point(const TetMesh& mesh, const Vec3& p, double tol = 1e-10);

/// Versioned plain-text export; see docs/formats.md.
void write_mesh(std::ostream& os, const TetMesh& mesh);
void write_mesh(const std::string& path, const TetMesh& mesh);

}  // namespace cavity
