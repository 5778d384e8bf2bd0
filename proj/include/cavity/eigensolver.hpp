#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cavity/fem.hpp"
#include "cavity/ldlt.hpp"
#include "cavity/sparse.hpp"

namespace cavity {

enum class ModeTag { maxwell, gradient, unclassified };

std::string_view to_string(ModeTag tag) noexcept;

enum class SpectrumTarget {
  smallest,  // eigenvalues above the shift, ascending (the shift sits below the wanted part)
  nearest,   // eigenvalues closest to the shift, returned ascending
};

struct EigenOptions {
  int count = 6;
  double shift = -0.5;
  SpectrumTarget target = SpectrumTarget::smallest;
  /// Each pair must satisfy ||A x - lambda M x||_{M^-1} <= tol (|lambda| + 1).
  double tol = 1e-8;
  /// Block Lanczos steps.
  int max_iter = 400;
  /// Block width; must be at least the largest multiplicity that has to be resolved.
  int block_size = 12;
  /// Basis size that triggers a thick restart; 0 picks one from count and block_size.
  int max_basis = 0;
  /// Confirm with an inertia count that no eigenvalue below the last returned cluster was missed.
  bool verify_count = false;
  unsigned seed = 20240611u;
  LdltOptions factor;
};

/// Eigenpairs of A x = lambda M x with M-orthonormal eigenvectors, ascending.
struct Spectrum {
  VecX eigenvalues;
  MatX eigenvectors;
  VecX residuals;   // ||A x - lambda M x||_{M^-1}
  VecX div_ratio;   // (u^T D u / u^T M u) / (lambda / tau); filled by classify_modes
  std::vector<ModeTag> tags;
  double shift = 0.0;            // shift actually used
  int iterations = 0;            // block steps
  int factorizations = 0;
  double verified_below = 0.0;   // with verify_count: every eigenvalue below this is present
  int verified_count = -1;

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

Spectrum solve_gevp(const SparseSymOp& A, const SparseSymOp& M, const EigenOptions& opts = {});

/// ||A x - lambda M x||_{M^-1} for each column.
VecX residual_norms(const SparseSymOp& A, const SparseSymOp& M, const VecX& lambda, const MatX& X);

struct ClassifyOptions {
  double threshold = 0.5;
  double band = 0.1;          // relative half-width of the ambiguity band around the threshold
  double cluster_tol = 1e-6;  // exactly degenerate eigenvalues (relative gap)
  double group_tol = 1e-2;    // near-degenerate eigenvalues whose modes may mix (relative gap)
};

/// Tags each pair as a gradient mode when its relative div energy exceeds the threshold.
///
/// When the two branches nearly coincide (tau times a Laplace eigenvalue close to a Maxwell
/// eigenvalue) the discrete eigenvectors of the group are mixtures of both. The div energy is then
/// diagonalized on the span of the group; the rotated directions carry the tags and are matched to
/// the group's eigenvalues by ascending Rayleigh quotient. Eigenvectors are replaced by the rotated
/// ones only inside exactly degenerate clusters, where they remain eigenvectors.
void classify_modes(Spectrum& s, const SparseSymOp& M, const SparseSymOp& div_div, double tau,
                    const ClassifyOptions& opts = {});
void classify_modes(Spectrum& s, const FemSpace& space, double tau, const ClassifyOptions& opts = {});

struct Cluster {
  double value = 0.0;  // mean
  int first = 0;
  int count = 0;
};

/// Groups ascending values whose consecutive relative gap is at most rel_tol.
std::vector<Cluster> cluster_values(const VecX& values, double rel_tol);

/// CSV: index, lambda, residual, div_energy_ratio, tag (see docs/formats.md).
void write_spectrum_csv(std::ostream& os, const Spectrum& s);
void write_spectrum_csv(const std::string& path, const Spectrum& s);

}  // namespace cavity
