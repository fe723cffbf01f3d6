#include "fbmlab/heat_example.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "fbmlab/errors.hpp"
#include "fbmlab/io.hpp"
#include "fbmlab/parallel.hpp"
#include "fbmlab/recurrence.hpp"
#include "fbmlab/seeding.hpp"

namespace fbmlab {

namespace {

constexpr double kPi = std::numbers::pi;

double drift_amplitude(double t) { return std::sin(t) + std::cos(std::sqrt(3.0) * t); }
double diffusion_amplitude(double t) { return std::cos(t) + std::sin(std::sqrt(2.0) * t); }

// Affine lift with l(t,0) = sin t, l(t,1) = cos t, and its time derivative.
double lift(double t, double x) { return (1.0 - x) * std::sin(t) + x * std::cos(t); }
double lift_dt(double t, double x) { return (1.0 - x) * std::cos(t) - x * std::sin(t); }

std::size_t whole_steps(double length, double dt) {
  return static_cast<std::size_t>(std::ceil(length / dt - 1e-9));
}

}  // namespace

void ExampleConfig::validate() const {
  if (n_modes == 0 || physical_grid_points < 2 || replicas < 2 || compat_replicas < 2 || diagnostics_stride == 0)
    throw DomainError("example counts must be positive (replicas >= 2, grid points >= 2)");
  if (physical_grid_points < n_modes) throw DomainError("physical_grid_points must be >= n_modes");
  if (!(t_end > 0.0) || !(dt > 0.0) || !(output_dt > 0.0) || !(diagnostics_dt > 0.0) ||
      !(compat_window > 0.0) || !(epsilon > 0.0))
    throw DomainError("example times, steps and epsilon must be positive");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
  const double ratio = output_dt / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio || ratio < 0.5)
    throw DomainError("output_dt must be a whole multiple of dt");
}

double example_drift(double t, double u) { return drift_amplitude(t) * std::sin(u) / 3.0; }

double example_diffusion(double t, double u) { return u / (3.0 * u * u + 2.0) * diffusion_amplitude(t); }

EvolutionProblem build_example_problem(const ExampleConfig& cfg) {
  cfg.validate();
  EvolutionProblem p(SineBasis::laplacian_eigenvalues(cfg.n_modes), cfg.h,
                     CovarianceOperatorSpec{{cfg.sigma}}, cfg.physical_grid_points);
  if (cfg.inhomogeneous_boundary) {
    // u = v + l with v in the Dirichlet space; the lift is harmonic in x.
    p.drift = FieldMap{[](double t, double x, double v) {
                         return example_drift(t, v + lift(t, x)) - lift_dt(t, x);
                       },
                       true};
    p.diffusion = FieldNoise{FieldMap{[](double t, double x, double v) {
                                        return example_diffusion(t, v + lift(t, x));
                                      },
                                      true}};
  } else {
    p.drift = FieldMap{[](double t, double, double u) { return example_drift(t, u); }, true};
    p.diffusion = FieldNoise{FieldMap{[](double t, double, double u) { return example_diffusion(t, u); }, true}};
  }
  return p;
}

EvolutionProblem linear_test_problem(std::size_t n_modes, std::size_t physical_grid_points,
                                     HurstParameter h) {
  EvolutionProblem p(SineBasis::laplacian_eigenvalues(n_modes), h, CovarianceOperatorSpec{{1.0}},
                     physical_grid_points);
  p.drift = SpectralMap{[](double t, std::span<const double>, std::span<double> out) {
                          std::fill(out.begin(), out.end(), 0.0);
                          out[0] = std::sin(t);
                        },
                        false};
  p.diffusion = DiagonalNoise{SpectralMap{[](double, std::span<const double>, std::span<double> out) {
                                            std::fill(out.begin(), out.end(), 0.0);
                                            out[0] = 1.0;
                                          },
                                          false}};
  return p;
}

EvolutionProblem periodic_test_problem(const ExampleConfig& cfg) {
  cfg.validate();
  EvolutionProblem p(SineBasis::laplacian_eigenvalues(cfg.n_modes), cfg.h,
                     CovarianceOperatorSpec{{cfg.sigma}}, cfg.physical_grid_points);
  p.drift = FieldMap{[](double t, double x, double u) {
                       return 0.5 * (1.0 + std::sin(t)) * std::numbers::sqrt2 * std::sin(kPi * x) +
                              std::sin(t) * std::sin(u) / 3.0;
                     },
                     true};
  p.diffusion = FieldNoise{FieldMap{[](double t, double, double u) {
                                      return std::cos(t) * u / (3.0 * u * u + 2.0);
                                    },
                                    true}};
  return p;
}

bool ExampleConditions::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.pass; });
}

ExampleConditions verify_example_conditions(const ExampleConfig& cfg) {
  cfg.validate();
  // Both maps factor as a(t) m(u): scan a over a long t grid and m, m' over u.
  double amp_f = 0.0, amp_g = 0.0;
  for (std::size_t i = 0; i <= 200000; ++i) {
    const double t = 1e-3 * static_cast<double>(i);
    amp_f = std::max(amp_f, std::abs(drift_amplitude(t)));
    amp_g = std::max(amp_g, std::abs(diffusion_amplitude(t)));
  }
  double dm_f = 0.0, dm_g = 0.0, growth_f = 0.0, growth_g = 0.0, at_zero = 0.0;
  for (std::size_t i = 0; i <= 200000; ++i) {
    const double u = -20.0 + 2e-4 * static_cast<double>(i);
    const double q = 3.0 * u * u + 2.0;
    dm_f = std::max(dm_f, std::abs(std::cos(u)) / 3.0);
    dm_g = std::max(dm_g, std::abs((2.0 - 3.0 * u * u) / (q * q)));
    growth_f = std::max(growth_f, amp_f * std::abs(std::sin(u)) / 3.0 / (1.0 + std::abs(u)));
    growth_g = std::max(growth_g, amp_g * std::abs(u) / q / (1.0 + std::abs(u)));
  }
  at_zero = std::max(std::abs(example_drift(0.0, 0.0)), std::abs(example_diffusion(0.0, 0.0)));

  ExampleConditions c;
  c.lip_drift = amp_f * dm_f;
  c.lip_diffusion = amp_g * dm_g;
  ProblemConstants& k = c.constants;
  k.n_stab = 1.0;
  k.alpha = kPi * kPi;
  k.lip = std::max(c.lip_drift, c.lip_diffusion);
  k.m0 = 1.0;
  k.c1 = 1.0;
  k.c2 = 1.0;
  k.h = cfg.h;
  k.qspec = CovarianceOperatorSpec{{cfg.sigma}};
  c.c_hat = compute_c_hat(k).closed_form;
  c.c_tilde = compute_c_tilde(k).closed_form;
  c.theta1 = compute_theta1(k);
  c.thresholds = lipschitz_thresholds(k);
  const DissipativityCurve d = dissipativity_curve(k, 0.0, 0.0, {});

  auto add = [&](std::string name, double lhs, double rhs, bool pass) {
    c.checks.push_back({std::move(name), lhs, rhs, pass});
  };
  add("growth |F| <= C1 (1 + |u|)", growth_f, k.c1, growth_f <= k.c1);
  add("growth |G| <= C2 (1 + |u|)", growth_g, k.c2, growth_g <= k.c2);
  add("|F(t,0)|, |G(t,0)| <= M0", at_zero, k.m0, at_zero <= k.m0);
  add("Lip F <= 2/3", c.lip_drift, 2.0 / 3.0, c.lip_drift <= 2.0 / 3.0 + 1e-9);
  add("Lip G <= 2/3", c.lip_diffusion, 2.0 / 3.0, c.lip_diffusion <= 2.0 / 3.0 + 1e-9);
  add("theta1 < 1", c.theta1, 1.0, c.theta1 < 1.0);
  add("L < existence threshold", k.lip, c.thresholds.existence, k.lip < c.thresholds.existence);
  add("L < compatibility threshold", k.lip, c.thresholds.compatibility, k.lip < c.thresholds.compatibility);
  add("L < convergence threshold", k.lip, c.thresholds.convergence, k.lip < c.thresholds.convergence);
  add("C2 <= alpha / (N sqrt(6 (1 + alpha C~)))", d.condition_lhs, d.condition_rhs,
      d.condition_lhs <= d.condition_rhs);
  add("C3 < alpha", d.c3, k.alpha, d.c3 < k.alpha);
  return c;
}

std::string example_conditions_json(const ExampleConditions& c) {
  nlohmann::ordered_json j;
  j["alpha"] = c.constants.alpha;
  j["n_stab"] = c.constants.n_stab;
  j["hurst"] = c.constants.h.value();
  j["lip_drift"] = c.lip_drift;
  j["lip_diffusion"] = c.lip_diffusion;
  j["lip"] = c.constants.lip;
  j["c_hat"] = c.c_hat;
  j["c_tilde"] = c.c_tilde;
  j["theta1"] = c.theta1;
  j["thresholds"] = {{"existence", c.thresholds.existence},
                     {"compatibility", c.thresholds.compatibility},
                     {"convergence", c.thresholds.convergence}};
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& chk : c.checks)
    checks.push_back({{"name", chk.name}, {"lhs", chk.lhs}, {"rhs", chk.rhs}, {"pass", chk.pass}});
  j["checks"] = checks;
  j["all_pass"] = c.all_pass();
  return j.dump(2) + "\n";
}

Surface example_surface(const ExampleConfig& cfg) {
  const EvolutionProblem problem = build_example_problem(cfg);
  const auto stride = static_cast<std::size_t>(std::llround(cfg.output_dt / cfg.dt));
  const std::size_t rows = whole_steps(cfg.t_end, cfg.output_dt);
  const TimeGrid grid{0.0, cfg.dt, rows * stride};
  const CylindricalFbmField field =
      generate_cylindrical_fbm(problem.qspec, problem.h, grid, labeled_seed(cfg.seed, "surface"));
  const SpectralState x0 = SpectralState::unit(cfg.n_modes, 0, cfg.initial_amplitude);
  const Trajectory tr = solve_forward(problem, x0, 0.0, grid, field, {stride});

  const std::size_t p = cfg.physical_grid_points;
  Surface s;
  s.xs.resize(p);
  for (std::size_t j = 0; j < p; ++j) s.xs[j] = static_cast<double>(j) / static_cast<double>(p - 1);
  std::vector<double> table(p * cfg.n_modes, 0.0);
  for (std::size_t j = 1; j + 1 < p; ++j)
    for (std::size_t k = 0; k < cfg.n_modes; ++k)
      table[j * cfg.n_modes + k] = std::numbers::sqrt2 * std::sin(static_cast<double>(k + 1) * kPi * s.xs[j]);

  s.times.reserve(tr.states.size());
  s.values.reserve(tr.states.size() * p);
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const double t = tr.grid.at(i);
    s.times.push_back(t);
    const auto& c = tr.states[i].coeffs;
    for (std::size_t j = 0; j < p; ++j) {
      double u = 0.0;
      for (std::size_t k = 0; k < cfg.n_modes; ++k) u += table[j * cfg.n_modes + k] * c[k];
      if (cfg.inhomogeneous_boundary) u += lift(t, s.xs[j]);
      s.values.push_back(u);
    }
  }
  return s;
}

void write_surface_csv(std::ostream& out, const Surface& s) {
  out << "t,x,u\r\n";
  for (std::size_t i = 0; i < s.times.size(); ++i)
    for (std::size_t j = 0; j < s.xs.size(); ++j)
      out << format_real(s.times[i]) << ',' << format_real(s.xs[j]) << ','
          << format_real(s.values[i * s.xs.size() + j]) << "\r\n";
}

ExampleOutputs run_example(const ExampleConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.threads > 0) set_thread_count(static_cast<int>(cfg.threads));
  ExampleOutputs out;
  auto emit = [&](const std::string& name, const std::string& text, bool data) {
    const auto path = out_dir / name;
    write_text_file(path, text);
    (data ? out.data_files : out.reports).push_back(path);
  };

  const ExampleConditions cond = verify_example_conditions(cfg);
  emit("conditions.json", example_conditions_json(cond), false);

  {
    std::ostringstream os;
    write_surface_csv(os, example_surface(cfg));
    emit("surface.csv", os.str(), true);
  }

  // Ensembles from x_s and -x_s driven by the same noise.
  const EvolutionProblem problem = build_example_problem(cfg);
  const std::size_t stride = cfg.diagnostics_stride;
  const std::size_t n = whole_steps(whole_steps(cfg.t_end, cfg.diagnostics_dt), static_cast<double>(stride)) * stride;
  const TimeGrid grid{0.0, cfg.diagnostics_dt, n};
  const std::uint64_t ens_seed = labeled_seed(cfg.seed, "ensemble");
  const auto fields = generate_replica_fields(problem, grid, cfg.replicas, ens_seed);
  const SpectralState xs = SpectralState::unit(cfg.n_modes, 0, cfg.initial_amplitude);
  SpectralState neg = xs;
  for (double& v : neg.coeffs) v = -v;
  const TrajectoryEnsemble plus = simulate_ensemble(problem, xs, grid, fields, ens_seed, {stride});
  const TrajectoryEnsemble minus = simulate_ensemble(problem, neg, grid, fields, ens_seed, {stride});
  const std::vector<double> times = grid_times(plus.grid());
  const BootstrapOptions boot{1000, 0.95, labeled_seed(cfg.seed, "bootstrap")};

  const auto norms = squared_norms(plus);
  {
    std::ostringstream os;
    write_ensemble_summary_csv(os, times, bootstrap_mean(norms, boot));
    emit("ensemble_summary.csv", os.str(), true);
  }

  const DissipativityCurve dis = dissipativity_curve(cond.constants, xs.norm_sq(), 0.0, times);
  const BoundReport dis_rep = verify_bound(norms, times, dis.values, Statistic::MeanSquareNorm, boot);
  {
    auto j = nlohmann::ordered_json::parse(bound_report_json(dis_rep));
    j["certified"] = dis.certified;
    j["asymptote"] = dis.asymptote;
    j["rate"] = dis.rate;
    emit("dissipativity.json", j.dump(2) + "\n", false);
  }

  const SpectralState gap = [&] {
    SpectralState d = xs;
    for (std::size_t k = 0; k < d.size(); ++k) d.coeffs[k] -= neg.coeffs[k];
    return d;
  }();
  const ConvergenceCurve conv = convergence_curve(cond.constants, gap.norm_sq(), 0.0, times);
  const auto diffs = squared_differences(plus, minus);
  const BoundReport conv_rep = verify_bound(diffs, times, conv.values, Statistic::MeanSquareDifference, boot);
  {
    auto j = nlohmann::ordered_json::parse(bound_report_json(conv_rep));
    j["certified"] = conv.certified;
    j["certified_rate"] = conv.rate;
    // Fit over the first two time units, before round-off dominates.
    std::vector<double> ft, fv;
    for (std::size_t i = 0; i < times.size() && times[i] <= 2.0; ++i) {
      ft.push_back(times[i]);
      fv.push_back(conv_rep.empirical[i]);
    }
    try {
      const DecayFit fit = fit_log_decay(ft, fv);
      j["fitted_rate"] = fit.rate;
      j["fit_half_width"] = fit.half_width;
    } catch (const DomainError&) {
      j["fitted_rate"] = nullptr;
      j["fit_half_width"] = nullptr;
    }
    emit("convergence.json", j.dump(2) + "\n", false);
  }
  out.bounds_violated = (dis.certified && dis_rep.violations > 0) || (conv.certified && conv_rep.violations > 0);

  // Almost periods of the mean-norm profile after the transient.
  {
    const SampledPath prof = mean_profile(plus, Summary::Norm);
    const std::size_t skip = std::min(prof.values.size() - 1,
                                      burn_in_steps(problem, prof.grid.dt));
    SampledPath tail{{prof.grid.at(skip), prof.grid.dt, prof.grid.n_steps - skip},
                     {prof.values.begin() + static_cast<std::ptrdiff_t>(skip), prof.values.end()}};
    std::vector<double> taus;
    for (std::size_t k = 0; k <= tail.grid.n_steps / 2; ++k) taus.push_back(static_cast<double>(k) * tail.grid.dt);
    emit("recurrence.json", recurrence_report_json(epsilon_almost_periods(tail, cfg.epsilon, taus)), false);
  }

  // Shift compatibility at 2 pi, on a step that divides the shift.
  {
    const double tau = 2.0 * kPi;
    const double cdt = tau / std::round(tau / cfg.diagnostics_dt);
    const TimeGrid cgrid{0.0, cdt, whole_steps(cfg.compat_window, cdt)};
    const CompatibilityReport rep =
        compatibility_check(problem, tau, cfg.compat_replicas, cgrid, labeled_seed(cfg.seed, "compat"));
    emit("compatibility.json", compatibility_report_json(rep), false);
  }
  return out;
}

std::vector<SweepRow> constants_sweep(const std::vector<double>& hs) {
  std::vector<SweepRow> rows;
  for (double h : hs) {
    ProblemConstants k;
    k.alpha = kPi * kPi;
    k.h = HurstParameter(h);
    k.qspec = CovarianceOperatorSpec{{1.0}};
    rows.push_back({h, compute_c_hat(k).closed_form, compute_c_tilde(k).closed_form});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "h,c_hat,c_tilde\r\n";
  for (const auto& r : rows)
    out << format_real(r.h) << ',' << format_real(r.c_hat) << ',' << format_real(r.c_tilde) << "\r\n";
}

}  // namespace fbmlab
