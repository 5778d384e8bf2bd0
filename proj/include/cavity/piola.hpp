#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cavity/atlas.hpp"
#include "cavity/linalg.hpp"

namespace cavity {

/// Smooth partition of unity subordinate to the charts of an atlas. Each chart carries a tensor
/// product of 1D plateau bumps in its local frame, supported on the cuboid shrunk by `margin`
/// and rising over `transition` times the shrunk length; the bumps are normalized by their sum.
class PartitionOfUnity {
 public:
  PartitionOfUnity() = default;
  explicit PartitionOfUnity(const Atlas& atlas, double margin = 0.0, double transition = 0.25);

  int size() const { return static_cast<int>(charts_.size()); }
  double value(int j, const Vec3& p) const;
  Vec3 gradient(int j, const Vec3& p) const;
  /// Unnormalized bump of chart j (zero outside its shrunk cuboid).
  double bump(int j, const Vec3& p, Vec3* grad = nullptr) const;

 private:
  std::vector<AtlasChart> charts_;
  double margin_ = 0.0;
  double transition_ = 0.25;
};

/// Vector field given in closed form. A missing jacobian is replaced by central differences.
struct AnalyticVectorField {
  std::function<Vec3(const Vec3&)> u;
  std::function<Mat3(const Vec3&)> du;  // du(i, k) = d u_i / d x_k
  bool tangential_trace_zero = false;
  double fd_step = 1e-5;

  Vec3 value(const Vec3& p) const { return u(p); }
  Mat3 jacobian(const Vec3& p) const;
  Vec3 curl(const Vec3& p) const { return curl_from_jacobian(jacobian(p)); }
  double div(const Vec3& p) const { return jacobian(p).trace(); }
};

/// Central-difference Jacobian of any vector map.
Mat3 finite_difference_jacobian(const std::function<Vec3(const Vec3&)>& f, const Vec3& p, double step);

/// h_j with its first and second derivatives in local coordinates (x1, x2, x3).
struct HJet {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();
};

struct ChartMapValue {
  Vec3 image = Vec3::Zero();
  Mat3 jacobian = Mat3::Identity();
  double det = 1.0;
};

struct DivergenceTerms {
  double a = 0.0;  // field-derivative part: tr(DF J J^T)
  double b = 0.0;  // map second-derivative part: sum_m Lap(Psi_m) F_m
  double total() const { return a + b; }
};

/// Covariant transform between X_N spaces of a source domain and a target domain sharing one
/// atlas. On boundary chart j the target is flattened onto the source by
/// Phi_j(x, x3) = (x, x3 - h_j(x, x3)), h_j = (gt - g)(x) ((x3 - gh)/k)^3 above gh = gt - k.
class PiolaMap {
 public:
  PiolaMap(AtlasDomain source, AtlasDomain target, double k, double kappa = 0.0, double margin = 0.0,
           int check_grid = 64);
  /// Map between the base and the member at eps, with k = 6 kappa(eps).
  static PiolaMap from_family(const PerturbationFamily& fam, double eps, double margin = 0.0, int check_grid = 64);

  const AtlasDomain& source() const { return source_; }
  const AtlasDomain& target() const { return target_; }
  const PartitionOfUnity& partition() const { return partition_; }
  double k() const { return k_; }
  double kappa() const { return kappa_; }
  int chart_count() const { return source_.atlas.s(); }
  bool boundary_chart(int j) const { return j < source_.atlas.s_prime; }

  /// Lower edge gh_j = gt_j - k of the transition layer.
  double g_hat(int j, const Vec2& xbar) const;
  /// Throws Errc::out_of_subgraph unless x3 lies in (a3, gt_j(xbar)] over the chart base.
  HJet h_jet(int j, const Vec2& xbar, double x3) const;
  double h(int j, const Vec2& xbar, double x3) const { return h_jet(j, xbar, x3).value; }

  /// Psi_j = r_j^-1 o Phi_j o r_j at a global point of the closed target chart region.
  ChartMapValue phi_psi_map(int j, const Vec3& p) const;
  /// d^2 Psi_j^m / dp_a dp_b for m = 0..2.
  std::array<Mat3, 3> psi_hessian(int j, const Vec3& p) const;

  /// Sum over charts of (psi_j phi o Psi_j) DPsi_j. Throws Errc::flag_missing for fields without
  /// the tangential-trace flag and Errc::out_of_domain outside the target.
  Vec3 pullback(const AnalyticVectorField& phi, const Vec3& p) const;
  Vec3 pullback_curl(const AnalyticVectorField& phi, const Vec3& p) const;
  DivergenceTerms pullback_div_terms(const AnalyticVectorField& phi, const Vec3& p) const;
  double pullback_div(const AnalyticVectorField& phi, const Vec3& p) const {
    return pullback_div_terms(phi, p).total();
  }
  /// True when p lies below gh_j in every boundary chart containing it (the map is the identity).
  bool in_identity_region(const Vec3& p) const;

 private:
  bool chart_holds(int j, const Vec3& p) const;
  void require_target(const Vec3& p) const;

  AtlasDomain source_;
  AtlasDomain target_;
  double k_ = 0.0;
  double kappa_ = 0.0;
  PartitionOfUnity partition_;
};

struct PiolaQuadrature {
  int points = 8;  // Gauss-Legendre points per axis per cell
  int cells = 16;  // horizontal cells per axis of each chart base
};

struct PiolaReport {
  double eps = 0.0;
  double identity_on_compact = 0.0;  // max |P phi - phi| over nodes of the identity region
  double norm_source = 0.0;          // ||phi||_X(source)
  double norm_target = 0.0;          // ||P phi||_X(target)
  double overlap_distance = 0.0;     // ||P phi - phi||_X(source cap target)
  double min_det = 1.0;
  double max_det = 1.0;
  long long nodes = 0;
};

/// X-norms by chart-wise tensor quadrature weighted by the partition of unity.
PiolaReport verify_piolamain(const AnalyticVectorField& phi, const PiolaMap& map, PiolaQuadrature quad = {});

/// Sampled quantities of the transition layer for the derivative estimates.
struct PiolaBounds {
  double min_det = 1.0;
  double max_det = 1.0;
  std::array<double, 3> h_derivative{};  // max |D^a h| over |a| = 0, 1, 2
  std::array<double, 3> gap_derivative{};  // max |D^a (gt - g)| over |a| = 0, 1, 2
  /// max over |a| of |D^a h| / sum_{c <= a} |D^c (gt - g)| / kappa^(|a| - |c|)
  double estimate_constant = 0.0;
  double psi_second = 0.0;  // max |d^2 Psi^m / dx_i^2|
};

PiolaBounds sample_piola_bounds(const PiolaMap& map, int grid_n = 64, int layers = 16);

void write_piola_csv(std::ostream& os, const std::vector<PiolaReport>& rows);

/// Closed-form fields with zero tangential trace on the box W x (z_lo, z_hi), written in box
/// coordinates s in [0, 1]^3: "gradient" is grad(sin pi s1 sin pi s2 sin pi s3), "mixed" has
/// nonzero curl and divergence, "transverse" is vertical and divergence free.
const std::vector<std::string>& box_test_field_names();
/// Throws Errc::range_error for an unknown name or an empty box.
AnalyticVectorField box_test_field(std::string_view name, const Rect& W, double z_lo, double z_hi);

}  // namespace cavity
