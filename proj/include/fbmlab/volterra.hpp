#pragma once

#include <span>
#include <vector>

#include "fbmlab/fbm.hpp"

namespace fbmlab {

/// Piecewise-constant function: values[i] on [breakpoints[i], breakpoints[i+1]).
struct StepFunction {
  std::vector<double> breakpoints;
  std::vector<double> values;

  std::size_t pieces() const noexcept { return values.size(); }
  /// Throws DomainError unless breakpoints are strictly increasing, there are
  /// at least two of them, and there is one value per piece.
  void validate() const;
  /// Indicator of [a, b).
  static StepFunction indicator(double a, double b, double value = 1.0);
};

struct KernelConstants {
  double c_h;
  double big_c_h;  // c_h * (2H - 1)^(2H - 1)
  HurstParameter h;
};

/// c_H = (H(2H-1) / B(2-2H, H-1/2))^(1/2), Beta function through log-Gamma.
double c_h(HurstParameter h);
/// C_H = c_H (2H-1)^(2H-1).
double big_c_h(HurstParameter h);
KernelConstants kernel_constants(HurstParameter h);

/// K_H(t, s) = c_H s^(1/2-H) \int_s^t (u-s)^(H-3/2) u^(H-1/2) du for 0 < s <= t.
///
/// The substitution w = (u-s)^(H-1/2) removes the endpoint singularity; the
/// remaining smooth integrand goes to adaptive Gauss-Kronrod.
double kernel_K(HurstParameter h, double t, double s);

/// dK_H/dt (t, s) = c_H (t/s)^(H-1/2) (t-s)^(H-3/2) for 0 < s < t.
double kernel_dKdt(HurstParameter h, double t, double s);

/// (K_H^* phi)(s) = \int_s^T phi(t) dK_H/dt(t, s) dt at each of the points.
/// Pieces of phi beyond `horizon` are ignored.
std::vector<double> apply_KH_star(const StepFunction& phi, HurstParameter h, double horizon,
                                  std::span<const double> points);
/// Grid variant: evaluates at the interior nodes t_1 .. t_{n-1} of out_grid.
std::vector<double> apply_KH_star(const StepFunction& phi, HurstParameter h, double horizon,
                                  const TimeGrid& out_grid);

/// \int phi d beta^H as the finite sum of weighted path increments. Each
/// breakpoint snaps to the nearest grid node; a breakpoint outside the grid
/// by more than dt/2 throws GridMismatch.
double wiener_integral_step(const StepFunction& phi, const FgnPath& path);

/// H(2H-1) \iint phi(r) phi(u) |r-u|^(2H-2) dr du, exact for step functions.
double isometry_second_moment(const StepFunction& phi, HurstParameter h);

/// \|phi\|_{L^{1/H}}, exact for step functions.
double l_inv_h_norm(const StepFunction& phi, HurstParameter h);

struct Lemma24Result {
  double lhs;    // H(2H-1) \iint |phi||phi| |r-u|^(2H-2)
  double rhs;    // c_H \|phi\|^2_{L^{1/H}}
  double ratio;  // lhs / rhs, 0 when both vanish
  bool holds;    // lhs <= rhs (1 + 1e-9)
};

/// Evaluates both sides of the L^{1/H} bound with constant c_H.
Lemma24Result lemma24_check(const StepFunction& phi, HurstParameter h);

}  // namespace fbmlab
