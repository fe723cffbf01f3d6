#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fbmlab/fbm.hpp"

namespace fbmlab {

/// Coordinates of the solution on the eigenbasis of A.
struct SpectralState {
  std::vector<double> coeffs;

  SpectralState() = default;
  explicit SpectralState(std::size_t n, double value = 0.0) : coeffs(n, value) {}
  explicit SpectralState(std::vector<double> c) : coeffs(std::move(c)) {}

  std::size_t size() const noexcept { return coeffs.size(); }
  /// Squared norm in the state space (the basis is orthonormal).
  double norm_sq() const noexcept;
  /// Coefficient vector e_mode scaled by `amplitude`.
  static SpectralState unit(std::size_t n, std::size_t mode, double amplitude = 1.0);
};

/// Dirichlet-Laplacian eigenbasis sqrt(2) sin(k pi x) on (0, 1), sampled at
/// the interior collocation points x_j = j / (P + 1), j = 1..P. Synthesis and
/// analysis form a discrete sine transform pair, exact for k <= P.
class SineBasis {
 public:
  SineBasis(std::size_t n_modes, std::size_t points);

  std::size_t modes() const noexcept { return modes_; }
  std::size_t points() const noexcept { return points_; }
  double point(std::size_t j) const noexcept;

  /// u(x_j) = sum_k c_k e_k(x_j)
  void synthesize(std::span<const double> coeffs, std::span<double> values) const;
  /// c_k = <u, e_k> by the trapezoid rule on the collocation grid.
  void analyze(std::span<const double> values, std::span<double> coeffs) const;
  /// Eigenvalues -k^2 pi^2, k = 1..n.
  static std::vector<double> laplacian_eigenvalues(std::size_t n);

 private:
  std::size_t modes_;
  std::size_t points_;
  std::vector<double> table_;  // points x modes, e_k(x_j)
};

/// Nemytskii operator (t, X) -> m(t, x, X(x)) evaluated in physical space.
struct FieldMap {
  std::function<double(double t, double x, double u)> pointwise;
  bool state_dependent = true;
};

/// Map written directly on coefficients: out = m(t, X).
struct SpectralMap {
  std::function<void(double t, std::span<const double> state, std::span<double> out)> map;
  bool state_dependent = true;
};

/// F(t, X); monostate means F = 0.
using DriftSpec = std::variant<std::monostate, FieldMap, SpectralMap>;

/// Noise mode k drives state mode k with multiplier G_k(t, X).
struct DiagonalNoise {
  SpectralMap multipliers;
};

/// G(t, X) is a function in H multiplied by the scalar fBm of the first noise
/// mode (rank-one Q); its projections onto e_k are the per-mode multipliers.
struct FieldNoise {
  FieldMap map;
};

/// G(t, X); monostate means G = 0.
using DiffusionSpec = std::variant<std::monostate, DiagonalNoise, FieldNoise>;

/// dX = (AX + F(t, X)) dt + G(t, X) dB^H_Q on the eigenbasis of a diagonal A.
struct EvolutionProblem {
  EvolutionProblem(std::vector<double> eigenvalues, HurstParameter h, CovarianceOperatorSpec qspec,
                   std::size_t physical_grid_points);

  std::vector<double> eigenvalues;  // all < 0
  DriftSpec drift;
  DiffusionSpec diffusion;
  CovarianceOperatorSpec qspec;
  HurstParameter h;
  std::size_t physical_grid_points;
  std::shared_ptr<const SineBasis> basis;

  std::size_t n_modes() const noexcept { return eigenvalues.size(); }
  /// Decay rate alpha = -max lambda_k; N = 1 for a self-adjoint diagonal A.
  double alpha() const;
  bool state_independent() const;
  /// Forcing translated in time: F^tau(t, x) = F(t + tau, x), same for G.
  EvolutionProblem shifted(double tau) const;
  /// Throws DomainError on a nonnegative eigenvalue or inconsistent sizes.
  void validate() const;
};

/// One recorded state per node of `grid`.
struct Trajectory {
  TimeGrid grid;
  std::vector<SpectralState> states;
};

struct TrajectoryEnsemble {
  std::vector<Trajectory> replicas;
  std::uint64_t master_seed = 0;

  std::size_t size() const noexcept { return replicas.size(); }
  const TimeGrid& grid() const { return replicas.front().grid; }
  /// Throws GridMismatch when replicas disagree on their grid.
  void validate() const;
};

SpectralState semigroup_apply(const EvolutionProblem& problem, double t, const SpectralState& state);

/// Nemytskii operator projected onto the eigenbasis.
SpectralState nemytskii_eval(const FieldMap& map, const SineBasis& basis, double t,
                             const SpectralState& state);

SpectralState evaluate_drift(const EvolutionProblem& problem, double t, const SpectralState& state);
/// Per-mode multipliers G_k(t, X).
std::vector<double> evaluate_diffusion(const EvolutionProblem& problem, double t,
                                       const SpectralState& state);

/// X_k <- e^{l dt} X_k + (e^{l dt} - 1)/l F_k + e^{l dt} G_k dB_k.
SpectralState step_exponential_euler(const EvolutionProblem& problem, const SpectralState& state,
                                     double t, double dt, std::span<const double> noise_column);

struct SolveOptions {
  /// Keep every `record_stride`-th state; the trajectory grid is coarsened
  /// accordingly. grid.n_steps must be divisible by the stride.
  std::size_t record_stride = 1;
};

/// Forward mild solution from x(s) = x_s on `grid` (grid.t0 = s). The field
/// must share dt and cover at least grid.n_steps steps.
Trajectory solve_forward(const EvolutionProblem& problem, const SpectralState& x_s, double s,
                         const TimeGrid& grid, const CylindricalFbmField& field,
                         const SolveOptions& options = {});

/// Burn-in length ln(1/eps_tail)/alpha rounded up to whole steps.
std::size_t burn_in_steps(const EvolutionProblem& problem, double dt, double eps_tail = 1e-8);
/// Grid on which the noise for a bounded solution on `grid` must be generated.
TimeGrid bounded_field_grid(const EvolutionProblem& problem, const TimeGrid& grid,
                            double eps_tail = 1e-8);

/// Convolutions from -infinity for forcing independent of the state, with the
/// lower limit truncated at grid.t0 - T_burn. `field` lives on
/// bounded_field_grid(problem, grid, eps_tail).
Trajectory linear_bounded_solution(const EvolutionProblem& problem, const TimeGrid& grid,
                                   const CylindricalFbmField& field, double eps_tail = 1e-8,
                                   const SolveOptions& options = {});

struct PicardOptions {
  double tol = 1e-6;
  std::size_t max_iter = 50;
  double eps_tail = 1e-8;
  /// Contraction constant theta_1 of the problem, when known.
  std::optional<double> theta1;
  /// Constant-in-time starting iterate; zero when empty.
  std::optional<SpectralState> initial_guess;
  std::size_t record_stride = 1;
};

struct PicardResult {
  TrajectoryEnsemble solution;     // restricted to the requested grid
  std::size_t iterations = 0;
  double final_delta = 0.0;
  std::vector<double> deltas;      // sup_t mean_r |x^{k+1} - x^k|^2 per iteration
  bool converged = false;
  bool contraction_warning = false;  // theta_1 >= 1
};

/// Picard iteration x -> T x of the bounded-solution map, one fixed noise
/// field per replica. Throws NoContraction when it fails to converge and
/// theta_1 >= 1.
PicardResult bounded_solution_picard(const EvolutionProblem& problem, const TimeGrid& grid,
                                     std::span<const CylindricalFbmField> fields,
                                     const PicardOptions& options = {});

/// Fields for `replicas` replicas on `grid`, seeded by labeled_seed(master,
/// "replica:<i>").
std::vector<CylindricalFbmField> generate_replica_fields(const EvolutionProblem& problem,
                                                         const TimeGrid& grid, std::size_t replicas,
                                                         std::uint64_t master_seed);

/// Forward solves of all replicas from the same x_s.
TrajectoryEnsemble simulate_ensemble(const EvolutionProblem& problem, const SpectralState& x_s,
                                     const TimeGrid& grid, std::size_t replicas,
                                     std::uint64_t master_seed, const SolveOptions& options = {});

/// Same, reusing pre-generated fields (one per replica).
TrajectoryEnsemble simulate_ensemble(const EvolutionProblem& problem, const SpectralState& x_s,
                                     const TimeGrid& grid,
                                     std::span<const CylindricalFbmField> fields,
                                     std::uint64_t master_seed, const SolveOptions& options = {});

/// Per-replica squared norms |x_r(t)|^2, indexed [replica][time].
std::vector<std::vector<double>> squared_norms(const TrajectoryEnsemble& ensemble);
/// Per-replica |x_r(t) - y_r(t)|^2 for two ensembles driven by the same noise.
std::vector<std::vector<double>> squared_differences(const TrajectoryEnsemble& a,
                                                     const TrajectoryEnsemble& b);

/// CSV `t,coeff_1,...,coeff_K`.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace fbmlab
