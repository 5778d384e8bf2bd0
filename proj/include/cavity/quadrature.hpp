#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "cavity/linalg.hpp"

namespace cavity {

/// Gauss-Legendre rule mapped to [0, 1]; weights sum to 1. Supports 1..20 points.
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

LineRule gauss_legendre(int points);

/// Collapsed (Duffy) tensor Gauss rule on the reference tetrahedron, as barycentric coordinates.
/// Weights sum to 1, so integrals are `volume * sum w f`. With p points per axis the rule is exact
/// for polynomials of total degree 2p - 3.
struct TetRule {
  std::vector<std::array<double, 4>> bary;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

TetRule tet_rule(int points_per_axis);

/// Neumaier-compensated running sum, so long reductions do not depend on accumulated roundoff.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace cavity
