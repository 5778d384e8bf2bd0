#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "cavity/linalg.hpp"

namespace cavity {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double t) const { return t > lo && t < hi; }
  bool contains_closed(double t) const { return t >= lo && t <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis-aligned rectangle in the plane of the local horizontal coordinates.
struct Rect {
  Interval x;
  Interval y;

  double area() const { return x.length() * y.length(); }
  bool contains_closed(const Vec2& p) const { return x.contains_closed(p[0]) && y.contains_closed(p[1]); }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Periodic cell b(y) = offset + amplitude * cos(2 pi y1) cos(2 pi y2).
struct CosineCell {
  double offset = 0.0;
  double amplitude = 1.0;
  friend bool operator==(const CosineCell&, const CosineCell&) = default;
};

/// Cut-off psi. `one` is psi == 1; `bump` is exp(1 - 1/(1 - r^2/R^2)) on the disk of radius R
/// (value 1 at the centre, C-infinity, compactly supported).
struct Cutoff {
  enum class Kind { one, bump };
  Kind kind = Kind::one;
  Vec2 center = Vec2::Zero();
  double radius = 1.0;

  friend bool operator==(const Cutoff& a, const Cutoff& b) {
    return a.kind == b.kind && a.center == b.center && a.radius == b.radius;
  }
};

enum class ProfileKind { constant, oscillatory, hoelder_power, log_counterexample, tabulated };

std::string_view to_string(ProfileKind kind) noexcept;
std::optional<ProfileKind> profile_kind_from_string(std::string_view name) noexcept;

/// Value, gradient and (when it exists) Hessian of a profile at one point.
struct ProfileSample {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();
  bool hessian_defined = true;
};

/// Catalog of boundary profile functions g : R^2 -> R.
///
/// Every kind is defined on the whole plane (tabulated data is continued by constants outside
/// its rectangle). A profile carries an affine post-transform `scale * g + offset`.
class ProfileFunction {
 public:
  struct Constant {
    double c = 0.0;
  };
  /// eps^alpha b(x / eps) psi(x).
  struct Oscillatory {
    double alpha = 2.0;
    double eps = 0.1;
    CosineCell cell;
    Cutoff cutoff;
  };
  /// coefficient * |x - center|^power.
  struct HoelderPower {
    double coefficient = 1.0;
    double power = 1.75;
    Vec2 center = Vec2::Zero();
  };
  /// |x1| / log|x1| for |x1| <= cutoff, continued linearly (C^1) beyond.
  struct LogCounterexample {
    double cutoff = 0.36787944117144233;  // 1/e
  };
  /// Tensor Catmull-Rom interpolation of samples on a uniform grid over `region`.
  struct Tabulated {
    Rect region;
    int nx = 2;
    int ny = 2;
    std::vector<double> values;  // row-major, index = iy * nx + ix
  };

  using Params = std::variant<Constant, Oscillatory, HoelderPower, LogCounterexample, Tabulated>;

  ProfileFunction() : params_(Constant{}) {}

  static ProfileFunction constant(double c);
  static ProfileFunction oscillatory(double alpha, double eps, CosineCell cell = {}, Cutoff cutoff = {});
  static ProfileFunction hoelder_power(double coefficient, double power, Vec2 center = Vec2::Zero());
  static ProfileFunction log_counterexample(double cutoff = 0.36787944117144233);
  static ProfileFunction tabulated(Rect region, int nx, int ny, std::vector<double> values);

  ProfileFunction scaled(double factor) const;
  ProfileFunction shifted(double delta) const;

  ProfileKind kind() const noexcept;
  const Params& params() const noexcept { return params_; }
  double scale() const noexcept { return scale_; }
  double offset() const noexcept { return offset_; }

  ProfileSample eval(const Vec2& x) const;
  double value(const Vec2& x) const { return eval(x).value; }
  Vec2 gradient(const Vec2& x) const { return eval(x).gradient; }
  /// Throws Errc::hessian_undefined where the second derivative does not exist.
  Mat2 hessian(const Vec2& x) const;

 private:
  explicit ProfileFunction(Params p) : params_(std::move(p)) {}

  Params params_;
  double scale_ = 1.0;
  double offset_ = 0.0;
};

/// Evaluates b(y) with gradient and Hessian in y.
ProfileSample eval_cell(const CosineCell& cell, const Vec2& y);
/// Evaluates psi with gradient and Hessian.
ProfileSample eval_cutoff(const Cutoff& cutoff, const Vec2& x);

}  // namespace cavity
