#include "cavity/error.hpp"

namespace cavity {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parse_error: return "parse-error";
    case Errc::range_error: return "range-error";
    case Errc::point_outside_chart: return "point-outside-chart";
    case Errc::hessian_undefined: return "hessian-undefined";
    case Errc::derivative_unavailable: return "derivative-unavailable";
    case Errc::out_of_subgraph: return "out-of-subgraph";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::flag_missing: return "flag-missing";
    case Errc::det_near_zero: return "det-near-zero";
    case Errc::quadrature_degenerate: return "quadrature-degenerate";
    case Errc::quadrature_nonconvergent: return "quadrature-nonconvergent";
    case Errc::degenerate_box: return "degenerate-box";
    case Errc::inverted_element: return "inverted-element";
    case Errc::non_manifold_boundary: return "non-manifold-boundary";
    case Errc::point_location_failure: return "point-location-failure";
    case Errc::factorization_singular: return "factorization-singular";
    case Errc::no_convergence: return "no-convergence";
    case Errc::io_failure: return "io-failure";
  }
  return "unknown";
}

}  // namespace cavity
