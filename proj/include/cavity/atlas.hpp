#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "cavity/linalg.hpp"
#include "cavity/profile.hpp"

namespace cavity {

/// Local chart coordinates: horizontal part and height.
struct LocalPoint {
  Vec2 xbar = Vec2::Zero();
  double x3 = 0.0;

  Vec3 as_vec() const { return {xbar[0], xbar[1], x3}; }
};

/// Rotated cuboid. `rotation` maps global to local coordinates (local = R p), and the cuboid is
/// the product of `bounds` in local coordinates.
struct AtlasChart {
  Mat3 rotation = Mat3::Identity();
  std::array<Interval, 3> bounds{};
  bool touches_boundary = true;

  Rect base_rect() const { return {bounds[0], bounds[1]}; }
  LocalPoint to_local(const Vec3& p) const;
  Vec3 to_global(const LocalPoint& q) const;
  bool contains_local(const LocalPoint& q) const;
  /// Throws Errc::range_error when the rotation is not proper orthogonal or an interval is empty.
  void validate() const;
};

struct Atlas {
  double rho = 0.05;
  int s_prime = 1;
  std::vector<AtlasChart> charts;

  int s() const { return static_cast<int>(charts.size()); }
  void validate() const;
};

struct RegularityClass {
  int k = 1;
  double gamma = 1.0;
  double M = 0.0;
  friend bool operator==(const RegularityClass&, const RegularityClass&) = default;
};

/// Domain described by an atlas and one profile per boundary chart.
struct AtlasDomain {
  Atlas atlas;
  std::vector<ProfileFunction> profiles;
  RegularityClass regularity;

  /// Checks chart data, profile count, the profile margin a_3 + rho <= g <= b_3 - rho on a
  /// grid_n x grid_n sample of each base rectangle, and that the declared M dominates the sampled
  /// class norm (skipped when M == 0).
  void validate(int grid_n = 64) const;
};

/// Throws Errc::point_outside_chart when p is not in the (closed) chart cuboid.
LocalPoint chart_local_coords(const AtlasChart& chart, const Vec3& p);

bool domain_contains(const AtlasDomain& dom, const Vec3& p);

/// Sampled estimate (a lower bound) of sup_{|a|<=k} |D^a g| + sup_{|a|=k} [D^a g]_gamma, maximised
/// over boundary charts. k is 0, 1 or 2. Hoelder quotients use neighbouring grid points plus all
/// pairs of a coarse subgrid.
double check_atlas_class(const AtlasDomain& dom, int k, double gamma, int grid_n = 256);
double profile_class_norm(const ProfileFunction& g, const Rect& W, int k, double gamma, int grid_n = 256);

/// Maximum over a grid of |D^a(f - g)| for all partial derivatives of order `order` (0, 1, 2).
double sampled_derivative_gap(const ProfileFunction& f, const ProfileFunction& g, const Rect& W, int order,
                              int grid_n);

/// Family of domains sharing the base atlas, indexed by eps > 0.
struct PerturbationFamily {
  AtlasDomain base;
  std::function<AtlasDomain(double)> perturbed;
  std::function<double(double)> kappa;

  AtlasDomain at(double eps) const { return perturbed(eps); }

  /// Base profiles are constants c_j (touching chart tops flatly); the member at eps replaces the
  /// profile of chart `chart` by c + eps^alpha b(x/eps) psi(x), and kappa(eps) = eps^kappa_exponent.
  static PerturbationFamily oscillatory(AtlasDomain base, double alpha, CosineCell cell, Cutoff cutoff,
                                        double kappa_exponent, int chart = 0);
  /// Omega_eps = Omega with kappa(eps) = eps.
  static PerturbationFamily identical(AtlasDomain base);
};

struct ConvergenceRow {
  double eps = 0.0;
  double kappa = 0.0;
  double sup_gap = 0.0;                // max_j |g_eps,j - g_j|_inf
  std::array<double, 3> ratios{};      // |D^b(g_eps - g)|_inf / kappa^(3/2 - |b|), |b| = 0, 1, 2
  bool kappa_dominates = false;        // kappa > sup_gap
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::array<bool, 3> decreasing{};    // per |b|, strictly decreasing along the eps list (or all zero)
  bool kappa_decreasing = false;

  bool all_decreasing() const { return decreasing[0] && decreasing[1] && decreasing[2]; }
};

ConvergenceReport check_convergence_conditions(const PerturbationFamily& fam, const std::vector<double>& eps_list,
                                               int grid_n = 256);

/// Box W x (z_lo, z_hi) described as a single boundary chart with the constant profile `top`.
AtlasDomain box_domain(const Rect& W, double z_lo, double z_hi, double top, double rho);

// Domain file (YAML). Parse errors name the file and line.
AtlasDomain parse_domain(const std::string& text, const std::string& source_name = "<string>");
AtlasDomain load_domain(const std::string& path);
std::string emit_domain(const AtlasDomain& dom);

}  // namespace cavity
