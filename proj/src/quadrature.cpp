#include "cavity/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <string>

#include "cavity/error.hpp"

namespace cavity {

namespace {

template <int N>
LineRule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  LineRule r;
  // Boost stores the non-negative half of the symmetric rule.
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      r.nodes.push_back(0.5);
      r.weights.push_back(0.5 * w[i]);
    } else {
      r.nodes.push_back(0.5 * (1.0 - x[i]));
      r.weights.push_back(0.5 * w[i]);
      r.nodes.push_back(0.5 * (1.0 + x[i]));
      r.weights.push_back(0.5 * w[i]);
    }
  }
  return r;
}

template <int... N>
LineRule dispatch(int points, std::integer_sequence<int, N...>) {
  LineRule r;
  ((points == N + 1 ? (r = make_rule<N + 1>(), true) : false) || ...);
  return r;
}

}  // namespace

LineRule gauss_legendre(int points) {
  if (points < 1 || points > 20) fail(Errc::range_error, "Gauss-Legendre rule needs 1..20 points, got " + std::to_string(points));
  return dispatch(points, std::make_integer_sequence<int, 20>{});
}

TetRule tet_rule(int points_per_axis) {
  const LineRule g = gauss_legendre(points_per_axis);
  TetRule r;
  const int p = points_per_axis;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c) {
        const double u = g.nodes[a], v = g.nodes[b], w = g.nodes[c];
        const double z = w;
        const double y = v * (1.0 - w);
        const double x = u * (1.0 - v) * (1.0 - w);
        // Reference volume 1/6, Jacobian (1 - v)(1 - w)^2.
        r.weights.push_back(6.0 * g.weights[a] * g.weights[b] * g.weights[c] * (1.0 - v) * (1.0 - w) * (1.0 - w));
        r.bary.push_back({1.0 - x - y - z, x, y, z});
      }
  return r;
}

}  // namespace cavity
