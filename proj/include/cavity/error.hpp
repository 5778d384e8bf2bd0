#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cavity {

/// Failure categories. Each maps to exactly one process exit code (see exit_code()).
enum class ErrorKind {
  config,    // malformed or out-of-range input files / parameters
  mesh,      // mesh generation, element inversion, boundary topology
  solver,    // factorization breakdown, eigensolver non-convergence
  io,        // filesystem
  analysis,  // geometric and quadrature preconditions of the analysis routines
};

/// Concrete failure conditions raised by the library.
enum class Errc {
  parse_error,
  range_error,
  point_outside_chart,
  hessian_undefined,
  derivative_unavailable,
  out_of_subgraph,
  out_of_domain,
  flag_missing,
  det_near_zero,
  quadrature_degenerate,
  quadrature_nonconvergent,
  degenerate_box,
  inverted_element,
  non_manifold_boundary,
  point_location_failure,
  factorization_singular,
  no_convergence,
  io_failure,
};

constexpr ErrorKind kind_of(Errc code) noexcept {
  switch (code) {
    case Errc::parse_error:
    case Errc::range_error:
      return ErrorKind::config;
    case Errc::degenerate_box:
    case Errc::inverted_element:
    case Errc::non_manifold_boundary:
      return ErrorKind::mesh;
    case Errc::factorization_singular:
    case Errc::no_convergence:
      return ErrorKind::solver;
    case Errc::io_failure:
      return ErrorKind::io;
    default:
      return ErrorKind::analysis;
  }
}

constexpr int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::mesh: return 3;
    case ErrorKind::solver: return 4;
    case ErrorKind::io: return 5;
    case ErrorKind::analysis: return 6;
  }
  return 1;
}

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace cavity
