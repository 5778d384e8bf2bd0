#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cavity/atlas.hpp"
#include "cavity/eigensolver.hpp"
#include "cavity/fem.hpp"

namespace cavity {

// ---------------------------------------------------------------------------------------------
// Cube oracle

struct CubeEigenvalue {
  double lambda = 0.0;
  int multiplicity = 0;
  ModeTag tag = ModeTag::maxwell;
};

/// Penalized spectrum of the cube (0, side)^3: Maxwell values (pi/side)^2 q over triples with at
/// least two positive indices (multiplicity 2 when all three are positive) and gradient values
/// tau (pi/side)^2 q over positive triples. Entries are sorted by value (maxwell first on ties) and
/// cover at least the first m eigenvalues counted with multiplicity, ending on a complete value.
std::vector<CubeEigenvalue> analytic_cube_spectrum(double tau, double side, int m);

/// Analytic entries merged by value.
struct CubeCluster {
  double value = 0.0;
  int maxwell = 0;
  int gradient = 0;
  int count() const { return maxwell + gradient; }
};

std::vector<CubeCluster> cluster_cube_spectrum(const std::vector<CubeEigenvalue>& spectrum, double rel_tol = 1e-9);

struct CubeClusterRow {
  CubeCluster exact;
  double computed = 0.0;      // mean of the paired computed eigenvalues
  double rel_error = 0.0;     // max over the paired eigenvalues
  int in_window = 0;          // computed eigenvalues within the tolerance window of the exact value
  int computed_maxwell = 0;
  int computed_gradient = 0;
  bool multiplicity_ok = false;
  bool tags_ok = false;
};

struct CubeBenchmark {
  double tau = 1.0;
  int n_mesh = 0;
  int order = 2;
  int dofs = 0;
  Spectrum spectrum;                // classified
  std::vector<CubeClusterRow> rows;  // analytic clusters fully covered by the computed spectrum
  double seconds = 0.0;

  /// The first `clusters` rows are within rel_tol, multiplicity-exact and correctly tagged.
  bool pass(int clusters, double rel_tol) const;
};

/// Solves on (0, pi)^3 with n_mesh cells per axis and pairs clusters by ascending order with
/// multiplicity. `window` is the relative tolerance used for in_window and the row checks.
CubeBenchmark cube_benchmark(double tau, int n_mesh, int order, int m, double window = 0.02,
                             const EigenOptions& solver = {});

/// Gradient- and maxwell-tagged eigenvalues of one tau, gathered from a smallest-first solve and
/// optional windows around given shifts (so gradient modes above many Maxwell modes can be reached).
struct TaggedValues {
  std::vector<double> maxwell;
  std::vector<double> gradient;
};

TaggedValues cube_tagged_values(double tau, int n_mesh, int order, int m, const std::vector<double>& window_shifts,
                                int window_count, const EigenOptions& solver = {});

struct TauScalingReport {
  double tau = 1.0;
  std::vector<double> gradient_ratios;   // lambda_tau / lambda_1, paired in ascending order
  std::vector<double> maxwell_changes;   // |lambda_tau / lambda_1 - 1|
  double max_gradient_deviation = 0.0;   // max |ratio / tau - 1|
  double max_maxwell_change = 0.0;
};

/// Tagged eigenvalues of the first `clusters` paired rows of a benchmark (tags read per mode).
TaggedValues benchmark_tagged_values(const CubeBenchmark& bench, int clusters);

/// Pairs the first base.gradient.size() gradient and base.maxwell.size() maxwell values.
/// Throws Errc::range_error when `scaled` holds fewer values than `base`.
TauScalingReport compare_tau_branches(const TaggedValues& base, const TaggedValues& scaled, double tau);

/// Spectrum restricted to the modes of the first `clusters` paired rows.
Spectrum benchmark_spectrum(const CubeBenchmark& bench, int clusters);
/// cube.csv: one row per paired analytic cluster (at most `clusters`); see docs/formats.md.
void write_cube_csv(std::ostream& os, const CubeBenchmark& bench, int clusters);
struct TauComparison {
  TaggedValues scaled;
  TauScalingReport report;
};
/// tau.csv: one row per paired tagged eigenvalue of each comparison against `base`.
void write_tau_csv(std::ostream& os, const TaggedValues& base, const std::vector<TauComparison>& comparisons);

// ---------------------------------------------------------------------------------------------
// E-distances

struct EDistance {
  double distance = 0.0;       // RMS per-vector distance after optimal rotation within the cluster
  double outside_norm = 0.0;   // sqrt(sum_i ||u_eps,i||^2 over Omega_eps \ Omega) / sqrt(k)
  long long points = 0;
  long long outside = 0;       // quadrature points outside Omega (u_0 extended by zero)
  long long failures = 0;      // points inside Omega that could not be located
};

/// ||U_eps - E U_0 Q|| for the best orthogonal Q, with U_eps (columns) on eps_space and U_0 on
/// ref_space, integrated with the Duffy rule of quad_n points per axis on the eps mesh. A point
/// that cannot be located in the reference mesh counts as outside Omega unless inside_reference
/// says otherwise, in which case it is a failure; more than 0.1% failures throw
/// Errc::point_location_failure. Both sets must be M-orthonormal on their own meshes and have
/// the same column count.
EDistance e_distance(const FemSpace& eps_space, const MatX& u_eps, const FemSpace& ref_space, const MatX& u_0,
                     int quad_n = 3, const std::function<bool(const Vec3&)>& inside_reference = {});

// ---------------------------------------------------------------------------------------------
// Epsilon sweep

/// Mesh policy: horizontal size h <= eps / h_factor on the box chart (at least min_cells per
/// axis), vertical levels graded from a top layer of h by grading_ratio up to max_layer. The
/// eps = 0 reference uses the finest mesh of the sweep.
struct SweepMeshPolicy {
  double h_factor = 8.0;
  int min_cells = 4;
  int order = 1;
  double grading_ratio = 1.8;
  double max_layer = 0.125;
};

struct SweepOptions {
  SweepMeshPolicy mesh;
  EigenOptions solver;        // count defaults to 10 in make_sweep_options
  double tau = 1.0;
  int track = 6;              // gaps are tracked for n <= track
  double gap_tol = 0.05;      // final relative gap
  double cluster_tol = 0.01;  // relative tolerance for reference clusters
  int e_clusters = 2;         // clusters with E-distances
  int e_quad = 3;
  bool gaffney = true;
  std::function<void(const std::string&)> log;  // progress messages
};

SweepOptions make_sweep_options();

struct SweepLevel {
  double eps = 0.0;
  int n_xy = 0;
  int layers = 0;
  int dofs = 0;
  VecX eigenvalues;
  std::vector<ModeTag> tags;
  VecX abs_gaps;                 // |lambda_n(eps) - lambda_n(0)|
  VecX rel_gaps;                 // abs_gaps / lambda_n(0)
  std::vector<EDistance> e_distances;  // per tracked reference cluster
  double gaffney = 0.0;
  double volume_change = 0.0;    // |Omega_eps| - |Omega| from quadrature of the profile difference
  double seconds = 0.0;
};

struct SweepReport {
  double alpha = 0.0;
  bool exploratory = false;      // alpha <= 3/2: reported without a pass/fail claim
  ConvergenceReport conditions;
  SweepLevel reference;
  std::vector<Cluster> reference_clusters;
  std::vector<SweepLevel> levels;  // in eps_list order
  std::vector<double> max_rel_gap; // per level, over n <= track
  bool gaps_decreasing = false;
  bool final_gap_ok = false;
  std::vector<bool> e_decreasing;  // per tracked cluster
  double gaffney_variation = 0.0;  // (max - min) / min over the levels
  double seconds = 0.0;

  bool pass() const;
};

/// Runs the reference and one solve per eps on box-chart families (a single boundary chart with
/// identity rotation; the domain is its base rectangle under the profile, down to the chart
/// floor). Throws Errc::range_error when alpha > 3/2 and the family violates the kappa conditions.
SweepReport sweep_epsilon(const PerturbationFamily& fam, double alpha, const std::vector<double>& eps_list,
                          const SweepOptions& opts = make_sweep_options());

/// Mesh of a box-chart domain under the given policy size; shared by the sweep and the CLI.
TetMesh box_chart_mesh(const AtlasDomain& dom, int n_xy, const SweepMeshPolicy& policy);
/// Horizontal cells per axis for one eps under the policy (eps = 0 is not allowed).
int policy_cells(const AtlasDomain& dom, double eps, const SweepMeshPolicy& policy);

/// report.csv: one row per (eps, n); see docs/formats.md.
void write_sweep_csv(std::ostream& os, const SweepReport& report);
void write_sweep_summary(std::ostream& os, const SweepReport& report);

}  // namespace cavity
