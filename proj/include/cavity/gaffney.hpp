#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "cavity/eigensolver.hpp"
#include "cavity/fem.hpp"
#include "cavity/profile.hpp"

namespace cavity {

/// Non-decreasing modulus of continuity omega(t), t > 0.
class ModulusOfContinuity {
 public:
  enum class Kind { power, lipschitz_capped, log_counterexample, scaled };

  /// min(coefficient t^exponent, cap).
  static ModulusOfContinuity power(double exponent, double coefficient = 1.0,
                                   double cap = std::numeric_limits<double>::infinity());
  /// min(slope t, 1).
  static ModulusOfContinuity lipschitz_capped(double slope);
  /// 1 / |log t| for t <= 1/e and 1 beyond (the modulus of |x| / log|x| near 0).
  static ModulusOfContinuity log_counterexample();
  /// eps^(alpha - 1) omega_b(t / eps).
  static ModulusOfContinuity scaled(const ModulusOfContinuity& base, double alpha, double eps);

  Kind kind() const { return kind_; }
  double operator()(double t) const;
  /// Points where omega has a kink (quadrature splits there).
  std::vector<double> breakpoints() const;
  /// Beyond this t the modulus is constant; infinity when it never saturates.
  double saturation() const;

 private:
  Kind kind_ = Kind::power;
  double exponent_ = 1.0;
  double coefficient_ = 1.0;
  double cap_ = std::numeric_limits<double>::infinity();
  double alpha_ = 2.0;
  double eps_ = 1.0;
  std::shared_ptr<const ModulusOfContinuity> base_;
};

struct DiniResult {
  double value = 0.0;          // integral of (omega/t)^2 over [t_min, t_max]
  bool divergent = false;
  double tail_estimate = 0.0;  // extrapolated integral over (0, t_min); infinity when divergent
  std::array<double, 3> blocks{};  // integrals over [t_min 2^-10(k+1), t_min 2^-10k]
};

/// Adaptive Gauss-Kronrod quadrature in log t. Divergence at 0 is flagged when each of two
/// consecutive blocks below t_min (each spanning 10 halvings) keeps more than 1/1.5 of the
/// previous block. t_max may be infinite when omega saturates.
DiniResult dini_integral(const ModulusOfContinuity& omega, double t_min, double t_max, int quad_n = 15);

struct ScalingLawReport {
  std::vector<double> eps;
  std::vector<double> values;
  std::vector<bool> divergent;
  double slope = 0.0;  // least-squares slope of log value against log eps
};

ScalingLawReport scaling_law_check(double alpha, const ModulusOfContinuity& omega_b, const std::vector<double>& eps_list);

/// Integration set E inside B_rho: the disk of radius `radius` around the ball centre, or the
/// annulus inner < r < radius.
struct ESet {
  double radius = 0.0;
  double inner = 0.0;
  double measure(int N) const;
};

/// ||D_{3/2}(g, B_rho)||_{L^2(E)} in R^(N-1), N in {2, 3}; for N = 2 the profile is read along
/// the x1 axis through xbar. The inner radial variable is r = rho u^2, which makes the integrand
/// bounded for Hoelder-3/4 gradients. Evaluated with quad_n / 2, quad_n and 2 quad_n radial
/// points; throws Errc::quadrature_nonconvergent when the last two differ by more than 5%, or by
/// more than 0.1% without halving the previous change.
double d32_seminorm(const ProfileFunction& g, const Vec2& xbar, double rho, const ESet& E, int quad_n = 16,
                    int N = 3);

struct MazyaCriterionReport {
  double rho = 0.0;
  double d32_term = 0.0;  // sup over the sampled E of the scaled D_{3/2} norm
  double grad_sup = 0.0;  // sup |grad g| over B_rho
  double delta = 0.0;
  bool flagged = false;   // d32 quadrature did not stabilize
  double total() const { return d32_term + grad_sup; }
};

/// One report per rho; E ranges over the disks of radii rho/4, rho/2, rho.
std::vector<MazyaCriterionReport> mazya_criterion(const ProfileFunction& g, const Vec2& xbar, double delta,
                                                  const std::vector<double>& rho_list, int N = 3, int quad_n = 16);

void write_mazya_csv(std::ostream& os, const std::string& profile, const std::vector<MazyaCriterionReport>& rows,
                     const DiniResult& dini);

/// max over the eigenvectors of sqrt(u^T H1 u / u^T (M + A) u), A the tau = 1 stiffness.
double discrete_gaffney_constant(const Spectrum& spectrum, const SparseSymOp& h1, const SparseSymOp& mass,
                                 const SparseSymOp& stiffness_tau1);
double discrete_gaffney_constant(const FemForms& forms, const Spectrum& spectrum);

}  // namespace cavity
