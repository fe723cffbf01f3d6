#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "fbmlab/bounds.hpp"
#include "fbmlab/fbm.hpp"
#include "fbmlab/galerkin.hpp"

namespace fbmlab {

/// Stochastic heat equation on (0, 1) with
///   F(t, u) = (sin t + cos(sqrt3 t)) sin(u) / 3,
///   G(t, u) = u / (3u^2 + 2) (cos t + sin(sqrt2 t)),
/// Dirichlet Laplacian and a single scalar fBm.
struct ExampleConfig {
  HurstParameter h{0.75};
  std::size_t n_modes = 32;
  std::size_t physical_grid_points = 128;
  double dt = 1e-3;
  double t_end = 20.0 * std::numbers::pi;
  std::size_t replicas = 200;
  std::uint64_t seed = 20240601;
  /// Covariance of the single noise mode; 0 gives the deterministic equation.
  double sigma = 1.0;
  /// Time spacing of the surface file.
  double output_dt = 0.05;
  /// u(t,0) = sin t, u(t,1) = cos t through affine lifting (unvalidated).
  bool inhomogeneous_boundary = false;
  /// Initial profile u(0, x) = amplitude sqrt2 sin(pi x) for the forward runs.
  double initial_amplitude = 1.0;
  /// Coarser step and stride for the ensemble diagnostics.
  double diagnostics_dt = 1e-2;
  std::size_t diagnostics_stride = 5;
  /// Replicas and window for the shift-compatibility diagnostic.
  std::size_t compat_replicas = 100;
  double compat_window = 2.0 * std::numbers::pi;
  double epsilon = 0.1;
  std::size_t threads = 0;

  /// Throws DomainError on nonpositive counts or times.
  void validate() const;
};

EvolutionProblem build_example_problem(const ExampleConfig& cfg);

/// Pointwise maps of the example (without boundary lifting).
double example_drift(double t, double u);
double example_diffusion(double t, double u);

/// Linear problem with f(t) = sin t e_1 and g = e_1 on a single unit noise
/// mode; everything else zero.
EvolutionProblem linear_test_problem(std::size_t n_modes, std::size_t physical_grid_points,
                                     HurstParameter h);

/// The example operator with 2 pi-periodic forcing and a nonzero source:
/// F(t, u) = (1 + sin t)/2 sqrt2 sin(pi x) + sin(t) sin(u)/3,
/// G(t, u) = cos(t) u / (3u^2 + 2).
EvolutionProblem periodic_test_problem(const ExampleConfig& cfg);

struct ConditionCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct ExampleConditions {
  ProblemConstants constants;      // measured Lipschitz constant in `lip`
  double lip_drift = 0.0;          // grid sup of |d/du F|
  double lip_diffusion = 0.0;      // grid sup of |d/du G|
  double c_hat = 0.0;
  double c_tilde = 0.0;
  double theta1 = 0.0;
  LipschitzThresholds thresholds{};
  std::vector<ConditionCheck> checks;

  bool all_pass() const;
};

/// Growth, Lipschitz and smallness conditions, checked numerically on a
/// dense (t, u) grid and through the closed-form constants.
ExampleConditions verify_example_conditions(const ExampleConfig& cfg);

std::string example_conditions_json(const ExampleConditions& c);

/// Surface (t, x, u) of one replica on x_j = j/(P-1), j = 0..P-1, with
/// ceil(t_end / output_dt) + 1 time rows.
struct Surface {
  std::vector<double> times;
  std::vector<double> xs;
  std::vector<double> values;  // row-major in t then x
};
Surface example_surface(const ExampleConfig& cfg);
/// CSV `t,x,u`.
void write_surface_csv(std::ostream& out, const Surface& surface);

struct ExampleOutputs {
  std::vector<std::filesystem::path> data_files;
  std::vector<std::filesystem::path> reports;
  bool bounds_violated = false;  // a certified bound failed
};

/// Full pipeline: conditions, surface, dissipativity and convergence
/// ensembles with bound reports, almost periods of the mean-norm profile and
/// the shift-compatibility check at tau = 2 pi.
ExampleOutputs run_example(const ExampleConfig& cfg, const std::filesystem::path& out_dir);

struct SweepRow {
  double h;
  double c_hat;
  double c_tilde;
};
/// C^ and C~ for the example (alpha = pi^2, sigma = [1]) over H.
std::vector<SweepRow> constants_sweep(const std::vector<double>& hs);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace fbmlab
