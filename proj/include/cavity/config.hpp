#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavity/harness.hpp"
#include "cavity/profile.hpp"

namespace cavity {

enum class Command { mesh, solve, cube_bench, sweep, piola_verify, mazya, check_atlas };

std::string_view to_string(Command c) noexcept;
std::optional<Command> command_from_string(std::string_view name) noexcept;
/// Command names in declaration order, for usage text.
const std::vector<std::string>& command_names();

struct SolverConfig {
  int m = 10;              // eigenpairs; 40 for cube-bench
  double tol = 1e-8;
  double shift = -0.5;
  double tau = 1.0;
  int order = 2;           // 1 for sweep
  int block_size = 12;     // 6 for sweep
  int max_iter = 400;
  bool verify_count = false;
  unsigned seed = 20240611u;
  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct MeshConfig {
  int n = 8;               // cells per axis (cube) or per horizontal axis (box chart)
  double eps = 0.0;        // mesh/solve: family member at eps; 0 is the base domain
  SweepMeshPolicy policy;
  friend bool operator==(const MeshConfig& a, const MeshConfig& b) {
    return a.n == b.n && a.eps == b.eps && a.policy.h_factor == b.policy.h_factor &&
           a.policy.min_cells == b.policy.min_cells && a.policy.order == b.policy.order &&
           a.policy.grading_ratio == b.policy.grading_ratio && a.policy.max_layer == b.policy.max_layer;
  }
};

/// Oscillatory family on the base domain and the eps list shared by sweep, piola-verify and
/// check-atlas.
struct SweepConfig {
  double alpha = 2.0;
  std::vector<double> eps_list{0.2, 0.1, 0.05};
  double kappa_exponent = 7.0 / 6.0;
  int chart = 0;
  CosineCell cell{1.0, 1.0};
  Cutoff cutoff{Cutoff::Kind::bump, Vec2(0.25, 0.25), 0.2};
  int track = 6;
  double gap_tol = 0.05;
  double cluster_tol = 0.01;
  int e_clusters = 2;
  int e_quad = 3;
  bool gaffney = true;
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct CubeConfig {
  int clusters = 6;
  double window = 0.02;
  std::vector<double> tau_factors;           // each reruns with tau * factor and compares branches
  std::vector<double> window_shifts{24.0, 36.0};
  int window_count = 12;
  int tau_m = 44;                            // smallest-first count of each tau_factors solve
  friend bool operator==(const CubeConfig&, const CubeConfig&) = default;
};

struct PiolaConfig {
  std::vector<std::string> fields{"gradient", "mixed", "transverse"};
  int points = 6;
  int cells = 16;
  double margin = 0.0;
  friend bool operator==(const PiolaConfig&, const PiolaConfig&) = default;
};

/// Modulus of continuity of the profile gradient for the Dini column. kind "auto" derives one
/// from the profile (see docs/formats.md).
struct ModulusConfig {
  std::string kind = "auto";  // auto | power | lipschitz_capped | log_counterexample
  double exponent = 1.0;
  double coefficient = 1.0;
  double cap = std::numeric_limits<double>::infinity();
  double slope = 1.0;
  friend bool operator==(const ModulusConfig&, const ModulusConfig&) = default;
};

struct MazyaConfig {
  ProfileFunction profile = ProfileFunction::oscillatory(2.0, 0.1, CosineCell{1.0, 1.0});
  Vec2 xbar = Vec2(0.25, 0.25);
  double delta = 0.1;
  std::vector<double> rho_list{0.1, 0.05, 0.025};
  int dimension = 3;
  int quad_n = 16;
  ModulusConfig modulus;
  friend bool operator==(const MazyaConfig& a, const MazyaConfig& b);
};

struct AtlasCheckConfig {
  int k = 1;
  double gamma = 1.0;
  int grid_n = 256;
  friend bool operator==(const AtlasCheckConfig&, const AtlasCheckConfig&) = default;
};

/// One file fully specifies a run. Defaults that depend on the command are resolved at parse
/// time, so the emitted form is explicit.
struct RunConfig {
  Command command = Command::cube_bench;
  std::string domain;            // domain file; empty selects the default box
  std::string output = ".";
  SolverConfig solver;
  MeshConfig mesh;
  SweepConfig sweep;
  CubeConfig cube;
  PiolaConfig piola;
  MazyaConfig mazya;
  AtlasCheckConfig atlas;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and validates a YAML run config. Errors carry the source name and line:
/// Errc::parse_error for syntax, unknown keys and wrong types, Errc::range_error for values
/// outside the documented ranges (tau > 0, 0 < tol <= 1e-2, 1 <= m <= 200, ...).
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");
/// Errc::io_failure when the file cannot be read.
RunConfig load_config(const std::string& path);
/// Canonical YAML with every field explicit; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

/// Default domain: the box [0, 1/2]^2 x (-1, 0) as one boundary chart reaching up to z = 1.
AtlasDomain default_box_domain();

struct RunOptions {
  std::string out_dir;          // overrides config.output when set
  bool verbose = false;
  int threads = 1;              // recorded in run.log; the kernels are sequential
  std::ostream* console = nullptr;  // progress and summaries; nullptr is silent
};

struct RunResult {
  std::vector<std::string> artifacts;  // files written, in order
  bool checks_passed = true;           // command-level checks (cube-bench pairing, sweep trend, ...)
};

/// Executes the command and writes its CSV files plus run.log (timestamps and timings) into the
/// output directory. CSV bodies depend only on the config. Errors propagate as cavity::Error.
RunResult run(const RunConfig& config, const RunOptions& options = {});

}  // namespace cavity
