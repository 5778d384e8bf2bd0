#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cavity/mesh.hpp"
#include "cavity/sparse.hpp"

namespace cavity {

enum class BoundaryCondition {
  none,      // all three components free everywhere
  electric,  // tangential trace nu x u = 0
};

/// Admissible directions at one node. The first `free` columns of `basis` span the values the
/// node may take; the remaining columns are the constrained directions.
struct NodeFrame {
  int free = 3;
  Mat3 basis = Mat3::Identity();
  int patch_count = 0;  // number of distinct boundary patches through the node
};

/// Vector Lagrange space of order 1 or 2 on a tet mesh. Nodes are the mesh vertices followed (for
/// order 2) by one node per edge. Element-local node order: 4 vertices, then edges
/// 01, 02, 03, 12, 13, 23.
///
/// Electric boundary condition: a node on one smooth patch keeps only the component along the
/// averaged outward normal; a node where two or more patches meet (box edges and corners) is fully
/// constrained, since a vector parallel to two independent normals is zero.
struct FemSpace {
  TetMesh mesh;
  int order = 1;
  BoundaryCondition bc = BoundaryCondition::electric;
  std::vector<Vec3> nodes;
  std::vector<int> element_nodes;  // nodes_per_element() entries per tet
  std::vector<NodeFrame> frames;
  std::vector<int> dof_offset;     // reduced DOFs of node a are dof_offset[a] .. dof_offset[a + 1]

  int node_count() const { return static_cast<int>(nodes.size()); }
  int nodes_per_element() const { return order == 1 ? 4 : 10; }
  int element_count() const { return static_cast<int>(mesh.tets.size()); }
  int free_dofs() const { return dof_offset.back(); }
  int constrained_dofs() const { return 3 * node_count() - free_dofs(); }
  const int* element(int t) const { return element_nodes.data() + static_cast<std::size_t>(t) * nodes_per_element(); }

  /// Reduced DOF vector -> nodal vectors (3 per node, node-major).
  VecX expand(const VecX& reduced) const;
  /// Nodal vectors -> reduced coordinates (orthogonal projection onto the admissible directions).
  VecX restrict(const VecX& full) const;
  /// Reduced -> full map as a sparse 3N x free matrix.
  SparseRowMatrix expansion_matrix() const;

  /// Nodal interpolant of f, projected onto the admissible directions.
  VecX interpolate(const std::function<Vec3(const Vec3&)>& f) const;

  Vec3 value(const VecX& reduced, int tet, const std::array<double, 4>& bary) const;
  /// Jacobian J(i, k) = d u_i / d x_k of the discrete field at a point of a tet.
  Mat3 jacobian(const VecX& reduced, int tet, const std::array<double, 4>& bary) const;
};

FemSpace build_space(const TetMesh& mesh, int order, BoundaryCondition bc = BoundaryCondition::electric);

/// Shape values and physical gradients of the element basis at a barycentric point.
struct ShapeEval {
  std::array<double, 10> value{};
  std::array<Vec3, 10> gradient{};
};

/// Gradients of the barycentric coordinates of tet t (constant on the tet).
std::array<Vec3, 4> barycentric_gradients(const TetMesh& mesh, int t);
ShapeEval eval_shape(int order, const std::array<Vec3, 4>& grad_bary, const std::array<double, 4>& bary);

/// Element integrals gathered per node pair: S_ab(k, l) = int d_k phi_a d_l phi_b and
/// m_ab = int phi_a phi_b. Every form below is a combination of these, constrained afterwards.
class FemForms {
 public:
  explicit FemForms(const FemSpace& space);

  /// int curl u . curl v
  SparseSymOp curl_curl() const;
  /// int div u div v
  SparseSymOp div_div() const;
  /// int u . v
  SparseSymOp mass() const;
  /// int u . v + grad u : grad v
  SparseSymOp h1() const;
  /// curl-curl + tau div-div
  SparseSymOp stiffness(double tau) const;
  /// Unconstrained scalar mass matrix (one component).
  SparseSymOp scalar_mass() const;

  const FemSpace& space() const { return space_; }

 private:
  SparseSymOp reduce(double c_curl, double c_div, double c_mass, double c_grad) const;

  const FemSpace& space_;
  std::vector<int> offsets_;  // node-pair CSR
  std::vector<int> cols_;
  std::vector<Mat3> grad_;
  std::vector<double> mass_;
};

SparseSymOp assemble_stiffness(const FemSpace& space, double tau);
SparseSymOp assemble_mass(const FemSpace& space);

/// ||div u_h||_{L2}, which equals (u^T D u)^{1/2} for the assembled div-div matrix D. Summed
/// element by element, so fields that are discretely divergence free give roundoff-level values
/// instead of the square root of a cancelled quadratic form.
double divergence_l2(const FemSpace& space, const VecX& u);
/// (u^T D u)^{1/2} from an assembled div-div matrix.
double divergence_l2(const SparseSymOp& div_div, const VecX& u);

}  // namespace cavity
