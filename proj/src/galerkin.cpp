#include "fbmlab/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "fbmlab/errors.hpp"
#include "fbmlab/io.hpp"
#include "fbmlab/parallel.hpp"
#include "fbmlab/seeding.hpp"

namespace fbmlab {

double SpectralState::norm_sq() const noexcept {
  double s = 0.0;
  for (double c : coeffs) s += c * c;
  return s;
}

SpectralState SpectralState::unit(std::size_t n, std::size_t mode, double amplitude) {
  SpectralState x(n);
  x.coeffs.at(mode) = amplitude;
  return x;
}

SineBasis::SineBasis(std::size_t n_modes, std::size_t points) : modes_(n_modes), points_(points) {
  if (n_modes == 0) throw DomainError("basis needs at least one mode");
  if (points < n_modes) throw DomainError("collocation grid must have at least n_modes points");
  table_.resize(points_ * modes_);
  for (std::size_t j = 0; j < points_; ++j) {
    for (std::size_t k = 0; k < modes_; ++k) {
      // Integer argument reduction keeps sin(k pi j / (P+1)) accurate.
      const std::size_t r = ((k + 1) * (j + 1)) % (2 * (points_ + 1));
      table_[j * modes_ + k] = std::numbers::sqrt2 *
                               std::sin(std::numbers::pi * static_cast<double>(r) /
                                        static_cast<double>(points_ + 1));
    }
  }
}

double SineBasis::point(std::size_t j) const noexcept {
  return static_cast<double>(j + 1) / static_cast<double>(points_ + 1);
}

void SineBasis::synthesize(std::span<const double> coeffs, std::span<double> values) const {
  for (std::size_t j = 0; j < points_; ++j) {
    const double* row = table_.data() + j * modes_;
    double u = 0.0;
    for (std::size_t k = 0; k < modes_; ++k) u += row[k] * coeffs[k];
    values[j] = u;
  }
}

void SineBasis::analyze(std::span<const double> values, std::span<double> coeffs) const {
  std::fill(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(modes_), 0.0);
  const double w = 1.0 / static_cast<double>(points_ + 1);
  for (std::size_t j = 0; j < points_; ++j) {
    const double* row = table_.data() + j * modes_;
    const double u = values[j] * w;
    for (std::size_t k = 0; k < modes_; ++k) coeffs[k] += row[k] * u;
  }
}

std::vector<double> SineBasis::laplacian_eigenvalues(std::size_t n) {
  std::vector<double> ev(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double m = static_cast<double>(k + 1) * std::numbers::pi;
    ev[k] = -m * m;
  }
  return ev;
}

EvolutionProblem::EvolutionProblem(std::vector<double> eigenvalues_, HurstParameter h_,
                                   CovarianceOperatorSpec qspec_, std::size_t physical_grid_points_)
    : eigenvalues(std::move(eigenvalues_)),
      qspec(std::move(qspec_)),
      h(h_),
      physical_grid_points(physical_grid_points_),
      basis(std::make_shared<SineBasis>(eigenvalues.size(), physical_grid_points_)) {
  validate();
}

double EvolutionProblem::alpha() const {
  return -*std::max_element(eigenvalues.begin(), eigenvalues.end());
}

bool EvolutionProblem::state_independent() const {
  const bool drift_free = std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, std::monostate>) return true;
        else return !d.state_dependent;
      },
      drift);
  const bool diffusion_free = std::visit(
      [](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, std::monostate>) return true;
        else if constexpr (std::is_same_v<T, DiagonalNoise>) return !g.multipliers.state_dependent;
        else return !g.map.state_dependent;
      },
      diffusion);
  return drift_free && diffusion_free;
}

namespace {

FieldMap shift_map(const FieldMap& m, double tau) {
  return {[f = m.pointwise, tau](double t, double x, double u) { return f(t + tau, x, u); },
          m.state_dependent};
}

SpectralMap shift_map(const SpectralMap& m, double tau) {
  return {[f = m.map, tau](double t, std::span<const double> s, std::span<double> out) {
            f(t + tau, s, out);
          },
          m.state_dependent};
}

}  // namespace

EvolutionProblem EvolutionProblem::shifted(double tau) const {
  EvolutionProblem p = *this;
  p.drift = std::visit(
      [tau](const auto& d) -> DriftSpec {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, std::monostate>) return d;
        else return shift_map(d, tau);
      },
      drift);
  p.diffusion = std::visit(
      [tau](const auto& g) -> DiffusionSpec {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, std::monostate>) return g;
        else if constexpr (std::is_same_v<T, DiagonalNoise>) return DiagonalNoise{shift_map(g.multipliers, tau)};
        else return FieldNoise{shift_map(g.map, tau)};
      },
      diffusion);
  return p;
}

void EvolutionProblem::validate() const {
  if (eigenvalues.empty()) throw DomainError("problem needs at least one mode");
  for (double l : eigenvalues) {
    if (!(l < 0.0) || !std::isfinite(l))
      throw DomainError("all eigenvalues of A must be strictly negative");
  }
  qspec.validate();
  if (physical_grid_points < eigenvalues.size())
    throw DomainError("physical grid must have at least n_modes points");
  if (!basis || basis->modes() != eigenvalues.size() || basis->points() != physical_grid_points)
    throw DomainError("basis does not match problem dimensions");
}

void TrajectoryEnsemble::validate() const {
  if (replicas.empty()) throw DomainError("ensemble is empty");
  const TimeGrid& g = replicas.front().grid;
  for (const Trajectory& r : replicas) {
    if (r.grid.n_steps != g.n_steps || r.grid.dt != g.dt || r.grid.t0 != g.t0)
      throw GridMismatch("ensemble replicas do not share one grid");
  }
}

SpectralState semigroup_apply(const EvolutionProblem& problem, double t, const SpectralState& state) {
  if (t < 0.0) throw DomainError("semigroup time must be nonnegative");
  if (state.size() != problem.n_modes()) throw DomainError("state size differs from problem modes");
  SpectralState out = state;
  for (std::size_t k = 0; k < out.size(); ++k) out.coeffs[k] *= std::exp(problem.eigenvalues[k] * t);
  return out;
}

SpectralState nemytskii_eval(const FieldMap& map, const SineBasis& basis, double t,
                             const SpectralState& state) {
  std::vector<double> values(basis.points());
  basis.synthesize(state.coeffs, values);
  for (std::size_t j = 0; j < values.size(); ++j) values[j] = map.pointwise(t, basis.point(j), values[j]);
  SpectralState out(basis.modes());
  basis.analyze(values, out.coeffs);
  return out;
}

namespace {

// Per-thread integrator for one problem at one dt.
class Stepper {
 public:
  Stepper(const EvolutionProblem& problem, double dt)
      : problem_(problem),
        k_(problem.n_modes()),
        decay_(k_),
        phi_(k_),
        phys_(problem.basis->points()),
        phys_out_(problem.basis->points()) {
    for (std::size_t k = 0; k < k_; ++k) {
      const double l = problem.eigenvalues[k];
      decay_[k] = std::exp(l * dt);
      phi_[k] = std::expm1(l * dt) / l;
    }
  }

  std::size_t modes() const { return k_; }

  // out = F(t, X); returns false when F = 0.
  bool drift(double t, std::span<const double> x, std::span<double> out) {
    return std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            return false;
          } else if constexpr (std::is_same_v<T, FieldMap>) {
            field_eval(d, t, x, out);
            return true;
          } else {
            d.map(t, x, out);
            return true;
          }
        },
        problem_.drift);
  }

  // out = G_k(t, X); returns false when G = 0.
  bool diffusion(double t, std::span<const double> x, std::span<double> out) {
    return std::visit(
        [&](const auto& g) {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            return false;
          } else if constexpr (std::is_same_v<T, DiagonalNoise>) {
            g.multipliers.map(t, x, out);
            return true;
          } else {
            field_eval(g.map, t, x, out);
            return true;
          }
        },
        problem_.diffusion);
  }

  // x <- E (x + G dB) + phi F
  void advance(std::span<double> x, const double* f, const double* g,
               const CylindricalFbmField* field, std::size_t step) const {
    const bool scalar_noise = std::holds_alternative<FieldNoise>(problem_.diffusion);
    const std::size_t noise_modes = field != nullptr ? field->modes() : 0;
    for (std::size_t k = 0; k < k_; ++k) {
      double v = x[k];
      if (g != nullptr && field != nullptr) {
        const std::size_t row = scalar_noise ? 0 : k;
        if (row < noise_modes) v += g[k] * field->increment(row, step);
      }
      v *= decay_[k];
      if (f != nullptr) v += phi_[k] * f[k];
      x[k] = v;
    }
  }

  // x <- E (x + G dB) + phi F with an explicit noise column.
  void advance(std::span<double> x, const double* f, const double* g,
               std::span<const double> noise) const {
    const bool scalar_noise = std::holds_alternative<FieldNoise>(problem_.diffusion);
    for (std::size_t k = 0; k < k_; ++k) {
      double v = x[k];
      if (g != nullptr) {
        const std::size_t row = scalar_noise ? 0 : k;
        if (row < noise.size()) v += g[k] * noise[row];
      }
      v *= decay_[k];
      if (f != nullptr) v += phi_[k] * f[k];
      x[k] = v;
    }
  }

 private:
  void field_eval(const FieldMap& m, double t, std::span<const double> x, std::span<double> out) {
    const SineBasis& basis = *problem_.basis;
    basis.synthesize(x, phys_);
    for (std::size_t j = 0; j < phys_.size(); ++j) phys_out_[j] = m.pointwise(t, basis.point(j), phys_[j]);
    basis.analyze(phys_out_, out);
  }

  const EvolutionProblem& problem_;
  std::size_t k_;
  std::vector<double> decay_;
  std::vector<double> phi_;
  std::vector<double> phys_;
  std::vector<double> phys_out_;
};

bool same_real(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

void check_field(const CylindricalFbmField& field, const TimeGrid& grid, std::size_t needed_steps) {
  if (!same_real(field.grid.dt, grid.dt)) throw GridMismatch("noise field dt differs from solver dt");
  if (!same_real(field.grid.t0, grid.t0)) throw GridMismatch("noise field starts at a different time");
  if (field.grid.n_steps < needed_steps) throw GridMismatch("noise field is shorter than the grid");
}

void check_stride(const TimeGrid& grid, std::size_t stride) {
  if (stride == 0 || grid.n_steps % stride != 0)
    throw DomainError("record stride must divide the number of steps");
}

TimeGrid coarsen(const TimeGrid& grid, std::size_t stride) {
  return {grid.t0, grid.dt * static_cast<double>(stride), grid.n_steps / stride};
}

}  // namespace

SpectralState evaluate_drift(const EvolutionProblem& problem, double t, const SpectralState& state) {
  Stepper stepper(problem, 1.0);
  SpectralState out(problem.n_modes());
  stepper.drift(t, state.coeffs, out.coeffs);
  return out;
}

std::vector<double> evaluate_diffusion(const EvolutionProblem& problem, double t,
                                       const SpectralState& state) {
  Stepper stepper(problem, 1.0);
  std::vector<double> out(problem.n_modes(), 0.0);
  stepper.diffusion(t, state.coeffs, out);
  return out;
}

SpectralState step_exponential_euler(const EvolutionProblem& problem, const SpectralState& state,
                                     double t, double dt, std::span<const double> noise_column) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (state.size() != problem.n_modes()) throw DomainError("state size differs from problem modes");
  Stepper stepper(problem, dt);
  const std::size_t n = problem.n_modes();
  std::vector<double> f(n), g(n);
  const bool has_f = stepper.drift(t, state.coeffs, f);
  const bool has_g = stepper.diffusion(t, state.coeffs, g);
  SpectralState out = state;
  stepper.advance(out.coeffs, has_f ? f.data() : nullptr, has_g ? g.data() : nullptr, noise_column);
  return out;
}

Trajectory solve_forward(const EvolutionProblem& problem, const SpectralState& x_s, double s,
                         const TimeGrid& grid, const CylindricalFbmField& field,
                         const SolveOptions& options) {
  grid.validate();
  if (!same_real(grid.t0, s)) throw GridMismatch("grid must start at the initial time s");
  if (x_s.size() != problem.n_modes()) throw DomainError("initial state size differs from problem modes");
  check_field(field, grid, grid.n_steps);
  check_stride(grid, options.record_stride);

  Stepper stepper(problem, grid.dt);
  const std::size_t n = problem.n_modes();
  std::vector<double> x = x_s.coeffs, f(n), g(n);

  Trajectory out{coarsen(grid, options.record_stride), {}};
  out.states.reserve(out.grid.n_steps + 1);
  out.states.emplace_back(x);
  for (std::size_t j = 0; j < grid.n_steps; ++j) {
    const double t = grid.at(j);
    const bool has_f = stepper.drift(t, x, f);
    const bool has_g = stepper.diffusion(t, x, g);
    stepper.advance(x, has_f ? f.data() : nullptr, has_g ? g.data() : nullptr, &field, j);
    if ((j + 1) % options.record_stride == 0) out.states.emplace_back(x);
  }
  return out;
}

std::size_t burn_in_steps(const EvolutionProblem& problem, double dt, double eps_tail) {
  if (!(eps_tail > 0.0 && eps_tail < 1.0)) throw DomainError("eps_tail must lie in (0, 1)");
  const double t_burn = std::log(1.0 / eps_tail) / problem.alpha();
  return static_cast<std::size_t>(std::ceil(t_burn / dt - 1e-9));
}

TimeGrid bounded_field_grid(const EvolutionProblem& problem, const TimeGrid& grid, double eps_tail) {
  grid.validate();
  const std::size_t nb = burn_in_steps(problem, grid.dt, eps_tail);
  return {grid.t0 - static_cast<double>(nb) * grid.dt, grid.dt, grid.n_steps + nb};
}

Trajectory linear_bounded_solution(const EvolutionProblem& problem, const TimeGrid& grid,
                                   const CylindricalFbmField& field, double eps_tail,
                                   const SolveOptions& options) {
  if (!problem.state_independent())
    throw DomainError("linear_bounded_solution needs forcing independent of the state");
  check_stride(grid, options.record_stride);
  const TimeGrid ext = bounded_field_grid(problem, grid, eps_tail);
  check_field(field, ext, ext.n_steps);
  const std::size_t nb = ext.n_steps - grid.n_steps;

  Stepper stepper(problem, grid.dt);
  const std::size_t n = problem.n_modes();
  std::vector<double> x(n, 0.0), f(n), g(n);
  Trajectory out{coarsen(grid, options.record_stride), {}};
  out.states.reserve(out.grid.n_steps + 1);
  for (std::size_t j = 0; j < ext.n_steps; ++j) {
    if (j == nb) out.states.emplace_back(x);
    const double t = ext.at(j);
    const bool has_f = stepper.drift(t, x, f);
    const bool has_g = stepper.diffusion(t, x, g);
    stepper.advance(x, has_f ? f.data() : nullptr, has_g ? g.data() : nullptr, &field, j);
    if (j >= nb && (j + 1 - nb) % options.record_stride == 0) out.states.emplace_back(x);
  }
  return out;
}

PicardResult bounded_solution_picard(const EvolutionProblem& problem, const TimeGrid& grid,
                                     std::span<const CylindricalFbmField> fields,
                                     const PicardOptions& options) {
  if (fields.empty()) throw DomainError("Picard iteration needs at least one replica");
  check_stride(grid, options.record_stride);
  const TimeGrid ext = bounded_field_grid(problem, grid, options.eps_tail);
  for (const auto& field : fields) check_field(field, ext, ext.n_steps);
  const std::size_t nb = ext.n_steps - grid.n_steps;
  const std::size_t n = problem.n_modes();
  const std::size_t nodes = ext.n_steps + 1;
  const std::size_t replicas = fields.size();

  PicardResult result;
  result.contraction_warning = options.theta1.has_value() && *options.theta1 >= 1.0;

  auto restrict = [&](const std::vector<std::vector<double>>& paths) {
    TrajectoryEnsemble ens;
    ens.replicas.resize(replicas);
    const TimeGrid out_grid = coarsen(grid, options.record_stride);
    for (std::size_t r = 0; r < replicas; ++r) {
      Trajectory& tr = ens.replicas[r];
      tr.grid = out_grid;
      tr.states.reserve(out_grid.n_steps + 1);
      for (std::size_t j = nb; j < nodes; j += options.record_stride) {
        tr.states.emplace_back(std::vector<double>(paths[r].begin() + static_cast<std::ptrdiff_t>(j * n),
                                                   paths[r].begin() + static_cast<std::ptrdiff_t>((j + 1) * n)));
      }
    }
    return ens;
  };

  if (problem.state_independent()) {
    // T is constant in x: one application lands on the fixed point.
    TrajectoryEnsemble ens;
    ens.replicas.resize(replicas);
    parallel_for(replicas, [&](std::size_t r) {
      ens.replicas[r] = linear_bounded_solution(problem, grid, fields[r], options.eps_tail,
                                                {options.record_stride});
    });
    result.solution = std::move(ens);
    result.iterations = 1;
    result.final_delta = 0.0;
    result.deltas = {0.0};
    result.converged = true;
    return result;
  }

  std::vector<std::vector<double>> current(replicas, std::vector<double>(nodes * n, 0.0));
  if (options.initial_guess) {
    if (options.initial_guess->size() != n) throw DomainError("initial guess size differs from problem modes");
    for (auto& path : current)
      for (std::size_t j = 0; j < nodes; ++j)
        std::copy(options.initial_guess->coeffs.begin(), options.initial_guess->coeffs.end(),
                  path.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  std::vector<std::vector<double>> next(replicas, std::vector<double>(nodes * n, 0.0));

  for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
    parallel_for(replicas, [&](std::size_t r) {
      Stepper stepper(problem, grid.dt);
      std::vector<double> x(n, 0.0), f(n), g(n);
      const std::vector<double>& prev = current[r];
      std::vector<double>& out = next[r];
      std::copy(x.begin(), x.end(), out.begin());
      for (std::size_t j = 0; j < ext.n_steps; ++j) {
        const double t = ext.at(j);
        std::span<const double> xj(prev.data() + j * n, n);
        const bool has_f = stepper.drift(t, xj, f);
        const bool has_g = stepper.diffusion(t, xj, g);
        stepper.advance(x, has_f ? f.data() : nullptr, has_g ? g.data() : nullptr, &fields[r], j);
        std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
      }
    });

    double delta = 0.0;
    for (std::size_t j = nb; j < nodes; ++j) {
      double mean = 0.0;
      for (std::size_t r = 0; r < replicas; ++r) {
        for (std::size_t k = 0; k < n; ++k) {
          const double d = next[r][j * n + k] - current[r][j * n + k];
          mean += d * d;
        }
      }
      delta = std::max(delta, mean / static_cast<double>(replicas));
    }
    std::swap(current, next);
    result.deltas.push_back(delta);
    result.iterations = iter;
    result.final_delta = delta;
    if (delta < options.tol) {
      result.converged = true;
      break;
    }
  }

  if (!result.converged && result.contraction_warning) {
    throw NoContraction("Picard iteration did not converge (theta_1 = " + format_real(*options.theta1) +
                            ", final delta = " + format_real(result.final_delta) + ")",
                        *options.theta1, result.final_delta);
  }
  result.solution = restrict(current);
  return result;
}

std::vector<CylindricalFbmField> generate_replica_fields(const EvolutionProblem& problem,
                                                         const TimeGrid& grid, std::size_t replicas,
                                                         std::uint64_t master_seed) {
  grid.validate();
  const CirculantFgnSampler sampler(problem.h, grid.n_steps, grid.dt);
  std::vector<CylindricalFbmField> fields;
  fields.reserve(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    fields.push_back(CylindricalFbmField{{}, problem.qspec, problem.h, grid, 0});
  }
  parallel_for(replicas, [&](std::size_t r) {
    fields[r] = generate_cylindrical_fbm(problem.qspec, problem.h, grid,
                                         labeled_seed(master_seed, "replica:" + std::to_string(r)), sampler);
  });
  return fields;
}

TrajectoryEnsemble simulate_ensemble(const EvolutionProblem& problem, const SpectralState& x_s,
                                     const TimeGrid& grid,
                                     std::span<const CylindricalFbmField> fields,
                                     std::uint64_t master_seed, const SolveOptions& options) {
  TrajectoryEnsemble ens;
  ens.master_seed = master_seed;
  ens.replicas.resize(fields.size());
  parallel_for(fields.size(), [&](std::size_t r) {
    ens.replicas[r] = solve_forward(problem, x_s, grid.t0, grid, fields[r], options);
  });
  return ens;
}

TrajectoryEnsemble simulate_ensemble(const EvolutionProblem& problem, const SpectralState& x_s,
                                     const TimeGrid& grid, std::size_t replicas,
                                     std::uint64_t master_seed, const SolveOptions& options) {
  // Generate per replica inside the loop so memory stays bounded by one field
  // per worker.
  grid.validate();
  const CirculantFgnSampler sampler(problem.h, grid.n_steps, grid.dt);
  TrajectoryEnsemble ens;
  ens.master_seed = master_seed;
  ens.replicas.resize(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    const CylindricalFbmField field = generate_cylindrical_fbm(
        problem.qspec, problem.h, grid, labeled_seed(master_seed, "replica:" + std::to_string(r)), sampler);
    ens.replicas[r] = solve_forward(problem, x_s, grid.t0, grid, field, options);
  });
  return ens;
}

std::vector<std::vector<double>> squared_norms(const TrajectoryEnsemble& ensemble) {
  ensemble.validate();
  std::vector<std::vector<double>> out(ensemble.size());
  for (std::size_t r = 0; r < ensemble.size(); ++r) {
    const auto& states = ensemble.replicas[r].states;
    out[r].resize(states.size());
    for (std::size_t j = 0; j < states.size(); ++j) out[r][j] = states[j].norm_sq();
  }
  return out;
}

std::vector<std::vector<double>> squared_differences(const TrajectoryEnsemble& a,
                                                     const TrajectoryEnsemble& b) {
  a.validate();
  b.validate();
  if (a.size() != b.size()) throw GridMismatch("ensembles differ in replica count");
  if (a.grid().n_steps != b.grid().n_steps || !same_real(a.grid().dt, b.grid().dt) ||
      !same_real(a.grid().t0, b.grid().t0))
    throw GridMismatch("ensembles do not share a grid");
  std::vector<std::vector<double>> out(a.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    const auto& sa = a.replicas[r].states;
    const auto& sb = b.replicas[r].states;
    out[r].resize(sa.size());
    for (std::size_t j = 0; j < sa.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < sa[j].size(); ++k) {
        const double d = sa[j].coeffs[k] - sb[j].coeffs[k];
        d2 += d * d;
      }
      out[r][j] = d2;
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const std::size_t n = trajectory.states.empty() ? 0 : trajectory.states.front().size();
  out << 't';
  for (std::size_t k = 1; k <= n; ++k) out << ",coeff_" << k;
  out << "\r\n";
  for (std::size_t j = 0; j < trajectory.states.size(); ++j) {
    out << format_real(trajectory.grid.at(j));
    for (double c : trajectory.states[j].coeffs) out << ',' << format_real(c);
    out << "\r\n";
  }
}

}  // namespace fbmlab
