#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fbmlab/fbm.hpp"
#include "fbmlab/galerkin.hpp"

namespace fbmlab {

/// Constants of a semilinear problem: stability pair (N, alpha), Lipschitz
/// constant L, growth constants M0, C1, C2, and the noise data.
struct ProblemConstants {
  double n_stab = 1.0;
  double alpha = 1.0;
  double lip = 0.0;
  double m0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  HurstParameter h{0.75};
  CovarianceOperatorSpec qspec{{1.0}};

  /// Throws DomainError unless every constant is >= 0, alpha > 0, N >= 1.
  void validate() const;
};

/// Closed form of a constant together with a quadrature of its defining
/// integral.
struct ConstantWithCheck {
  double closed_form;
  double quadrature;
  double relative_gap() const;
};

/// C^ = c_H sum_n (\int_0^inf |e^{-a u} sigma_n^{1/2}|^{1/H} du)^{2H}
///    = c_H (H/alpha)^{2H} sum_n sigma_n.
ConstantWithCheck compute_c_hat(const ProblemConstants& consts);

/// C~ = c_H sum_n (\int_0^inf |e^{-a u/2} sigma_n^{1/2}|^{2/(2H-1)} du)^{2H-1}
///    = c_H ((2H-1)/alpha)^{2H-1} sum_n sigma_n.
ConstantWithCheck compute_c_tilde(const ProblemConstants& consts);

/// Exact stationary second moment of \int_{-inf}^t e^{-alpha(t-s)} dB^H_Q(s):
/// H Gamma(2H) alpha^{-2H} sum_n sigma_n.
double stationary_convolution_variance(const ProblemConstants& consts);

/// theta_1 = 2 N^2 L^2 (1/alpha^2 + C^).
double compute_theta1(const ProblemConstants& consts);

struct LipschitzThresholds {
  double existence;      // alpha / (sqrt2 N (1 + C^ alpha^2)^{1/2})
  double compatibility;  // alpha / (2 sqrt2 N (1 + C^ alpha^2)^{1/2})
  double convergence;    // min(compatibility, alpha / (N (3(1 + C~ alpha))^{1/2}))
};
LipschitzThresholds lipschitz_thresholds(const ProblemConstants& consts);

/// Radius of the invariant ball; ThresholdViolated when L >= existence threshold.
double radius_R(const ProblemConstants& consts);

/// Bound on sup_t E|phi(t)| of the bounded solution of the linear problem:
/// (sqrt2 N / alpha) (sup E|f|^2 + C_H alpha^{2-2H} sup |g|^2_{L_Q})^{1/2}.
double moment_bound_linear(const ProblemConstants& consts, double sup_f_sq, double sup_g_sq);

/// Windowed bound on max_{|t|<=T} E|phi(t)|^2 for t_tilde > T > 0, with the
/// window and global sups of E|f|^2 and |g|^2_{L_Q}.
double moment_bound_windowed(const ProblemConstants& consts, double horizon, double t_tilde,
                             double window_f_sq, double window_g_sq, double sup_f_sq,
                             double sup_g_sq);

/// Uniform second-moment bound with exponential transient.
struct DissipativityCurve {
  std::vector<double> values;
  double c3 = 0.0;         // 6 N^2 C2 (1/alpha + C~)
  double c4 = 0.0;         // 6 N^2 C1 (1/alpha + C~)
  double asymptote = 0.0;  // C4 / (alpha - C3)
  double rate = 0.0;       // alpha - C3
  double condition_lhs = 0.0;  // C2
  double condition_rhs = 0.0;  // alpha / (N sqrt(6 (1 + alpha C~)))
  bool certified = false;      // C2 <= rhs and alpha > C3
};
DissipativityCurve dissipativity_curve(const ProblemConstants& consts, double x_s_sq, double s,
                                       std::span<const double> times);

/// Envelope 3 N^2 E|x1 - x2|^2 e^{-(alpha - 3N^2L^2(1/alpha + C~))(t - s)}.
struct ConvergenceCurve {
  std::vector<double> values;
  double rate = 0.0;
  bool certified = false;  // L < convergence threshold
};
ConvergenceCurve convergence_curve(const ProblemConstants& consts, double delta0_sq, double s,
                                   std::span<const double> times);

enum class Statistic { MeanSquareNorm, MeanSquareDifference, MeanNorm };
std::string to_string(Statistic s);

struct BootstrapOptions {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0x5EEDB007;
};

/// Monte-Carlo mean of a per-replica series with a percentile bootstrap band.
/// Whole replicas are resampled so the band respects time correlation.
struct EnsembleEstimate {
  std::vector<double> mean;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
};
EnsembleEstimate bootstrap_mean(const std::vector<std::vector<double>>& per_replica,
                                const BootstrapOptions& options = {});

struct BoundReport {
  Statistic statistic = Statistic::MeanSquareNorm;
  std::vector<double> times;
  std::vector<double> empirical;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<double> theoretical;
  std::size_t violations = 0;  // grid points whose whole CI sits above the curve
  double margin = 0.0;         // min_t (theoretical - empirical)
};

/// Compares the per-replica statistic against a bound curve on the same grid.
BoundReport verify_bound(const std::vector<std::vector<double>>& per_replica,
                         std::span<const double> times, std::span<const double> curve,
                         Statistic statistic, const BootstrapOptions& options = {});
/// Mean-square norm of one ensemble against a curve.
BoundReport verify_bound(const TrajectoryEnsemble& ensemble, std::span<const double> curve,
                         const BootstrapOptions& options = {});
/// Mean-square difference of two coupled ensembles against a curve.
BoundReport verify_bound(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b,
                         std::span<const double> curve, const BootstrapOptions& options = {});

/// Least-squares fit of log y = c - rate t with a Student-t half-width on
/// the rate. Points with y <= floor are skipped.
struct DecayFit {
  double rate = 0.0;
  double half_width = 0.0;
  std::size_t points = 0;
};
DecayFit fit_log_decay(std::span<const double> times, std::span<const double> values,
                       double level = 0.95, double floor = 1e-280);

/// Node times of a grid.
std::vector<double> grid_times(const TimeGrid& grid);

/// JSON: {statistic, times, empirical, ci, theoretical, violations, margin}.
std::string bound_report_json(const BoundReport& report);
/// CSV `t,mean_sq_norm,ci_low,ci_high`.
void write_ensemble_summary_csv(std::ostream& out, std::span<const double> times,
                                const EnsembleEstimate& estimate);

}  // namespace fbmlab
