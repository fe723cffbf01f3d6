// Acceptance checks. `acceptance N` runs criterion N and prints one line.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fbmlab/bounds.hpp"
#include "fbmlab/cli.hpp"
#include "fbmlab/fbm.hpp"
#include "fbmlab/galerkin.hpp"
#include "fbmlab/heat_example.hpp"
#include "fbmlab/parallel.hpp"
#include "fbmlab/recurrence.hpp"
#include "fbmlab/seeding.hpp"
#include "fbmlab/volterra.hpp"
#include "support.hpp"

using namespace fbmlab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// -- 1 ----------------------------------------------------------------------
Outcome fgn_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  double worst = 0.0;
  for (double hv : {0.6, 0.75, 0.9}) {
    const auto checks = fgn_autocovariance_selftest(HurstParameter(hv), 512, 1.0, 10000, 20240601, 10, 4.0);
    for (const auto& c : checks) {
      ok = ok && c.pass;
      worst = std::max(worst, std::abs(c.mean - c.expected) / c.standard_error);
    }
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60.0, "worst |z| " + fmt(worst) + " (limit 4), runtime " + fmt(secs) + " s (limit 60)"};
}

// -- 2 ----------------------------------------------------------------------
Outcome sampler_ks() {
  const HurstParameter h(0.75);
  const std::size_t n = 256, reps = 10000;
  const CirculantFgnSampler a(h, n, 1.0 / n);
  const CholeskyFbmSampler b(h, n, 1.0 / n);
  std::vector<double> xa(reps), xb(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    xa[r] = a.sample(labeled_seed(2, "circulant:" + std::to_string(r)))[r % n];
    xb[r] = b.sample(labeled_seed(2, "cholesky:" + std::to_string(r)))[r % n];
  }
  const double d = testing::ks_statistic(xa, xb);
  const double crit = testing::ks_critical_1pct(reps, reps);
  return {d < crit, "KS " + fmt(d) + " vs 1% critical " + fmt(crit)};
}

// -- 3 ----------------------------------------------------------------------
Outcome kernel_identity() {
  double worst = 0.0;
  const double horizon = 5.0;
  std::vector<double> ss;
  for (int j = 1; j <= 20; ++j) ss.push_back(horizon * (j - 0.5) / 20.0);
  for (double hv : {0.6, 0.75, 0.9}) {
    const HurstParameter h(hv);
    for (int i = 1; i <= 20; ++i) {
      const double t = horizon * i / 20.0;
      const auto v = apply_KH_star(StepFunction::indicator(0.0, t), h, horizon, ss);
      for (std::size_t j = 0; j < ss.size(); ++j) {
        const double want = ss[j] < t ? kernel_K(h, t, ss[j]) : 0.0;
        const double err = want == 0.0 ? std::abs(v[j]) : testing::rel_err(v[j], want);
        worst = std::max(worst, err);
      }
    }
  }
  return {worst <= 1e-6, "max relative error " + fmt(worst) + " (limit 1e-6)"};
}

// -- 4 ----------------------------------------------------------------------
Outcome lemma_inequality() {
  std::mt19937_64 rng(labeled_seed(4, "lemma"));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> pieces(1, 8);
  std::size_t violations = 0, total = 0;
  double worst = 0.0;
  for (double hv : {0.6, 0.75, 0.9}) {
    const HurstParameter h(hv);
    for (int i = 0; i < 1000; ++i) {
      const int m = pieces(rng);
      std::vector<double> bp{u01(rng)};
      for (int k = 0; k < m; ++k) bp.push_back(bp.back() + 0.05 + 2.0 * u01(rng));
      std::vector<double> vals;
      for (int k = 0; k < m; ++k) vals.push_back(n01(rng));
      const auto r = lemma24_check(StepFunction{bp, vals}, h);
      ++total;
      if (!r.holds) ++violations;
      worst = std::max(worst, r.ratio);
    }
  }
  return {violations == 0, std::to_string(violations) + "/" + std::to_string(total) +
                               " violations, max lhs/rhs " + fmt(worst)};
}

// -- 5 ----------------------------------------------------------------------
Outcome constants_closed_form() {
  double worst_gap = 0.0;
  const double hs[] = {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.75};
  const double as[] = {0.5, 1.0, 2.0, 5.0, kPi * kPi, 20.0, 50.0, 3.0, 0.2, 100.0};
  for (int i = 0; i < 10; ++i) {
    ProblemConstants c;
    c.h = HurstParameter(hs[i]);
    c.alpha = as[i];
    c.qspec = CovarianceOperatorSpec{{1.0}};
    worst_gap = std::max({worst_gap, compute_c_hat(c).relative_gap(), compute_c_tilde(c).relative_gap()});
  }
  double worst_golden = 0.0;
  for (const auto& r : testing::load_golden("volterra_golden.csv")) {
    if (r.h != 0.75 || std::abs(r.a - kPi * kPi) > 1e-12 || r.b != 1.0) continue;
    ProblemConstants c;
    c.h = HurstParameter(0.75);
    c.alpha = kPi * kPi;
    if (r.op == "c_hat_integral") worst_golden = std::max(worst_golden, testing::rel_err(compute_c_hat(c).closed_form, r.value));
    if (r.op == "c_tilde_integral") worst_golden = std::max(worst_golden, testing::rel_err(compute_c_tilde(c).closed_form, r.value));
  }
  return {worst_gap <= 1e-8 && worst_golden <= 1e-10,
          "grid gap " + fmt(worst_gap) + " (limit 1e-8), golden error " + fmt(worst_golden) + " (limit 1e-10)"};
}

// Shared setup for criteria 6-8.
struct HeatSetup {
  ExampleConfig cfg;
  EvolutionProblem problem;
  ExampleConditions cond;
};

HeatSetup heat_setup() {
  ExampleConfig cfg;
  cfg.n_modes = 16;
  cfg.physical_grid_points = 64;
  cfg.dt = 0.01;
  return {cfg, build_example_problem(cfg), verify_example_conditions(cfg)};
}

// -- 6 ----------------------------------------------------------------------
Outcome contraction() {
  const auto t0 = std::chrono::steady_clock::now();
  const HeatSetup s = heat_setup();
  const TimeGrid grid{0.0, 0.01, 2000};
  const double eps_tail = 1e-8;
  const auto fields = generate_replica_fields(s.problem, bounded_field_grid(s.problem, grid, eps_tail), 200,
                                              labeled_seed(6, "ensemble"));
  PicardOptions po;
  po.tol = 1e-10;
  po.max_iter = 50;
  po.eps_tail = eps_tail;
  po.theta1 = s.cond.theta1;
  po.initial_guess = SpectralState::unit(s.cfg.n_modes, 0, 1.0);
  po.record_stride = 10;
  const PicardResult res = bounded_solution_picard(s.problem, grid, fields, po);

  // successive ratios from the second iterate on; the first step only
  // removes the arbitrary starting guess
  double max_ratio = 0.0, log_sum = 0.0;
  std::size_t n_ratio = 0;
  for (std::size_t k = 2; k < res.deltas.size(); ++k) {
    if (res.deltas[k - 1] < 1e-24) break;
    const double r = res.deltas[k] / res.deltas[k - 1];
    max_ratio = std::max(max_ratio, r);
    log_sum += std::log(r);
    ++n_ratio;
  }
  const double geo = n_ratio ? std::exp(log_sum / static_cast<double>(n_ratio)) : 0.0;

  const double r2 = std::pow(radius_R(s.cond.constants), 2);
  const auto times = grid_times(res.solution.grid());
  const std::vector<double> curve(times.size(), r2);
  const BoundReport rep = verify_bound(res.solution, curve);
  double sup_ms = 0.0;
  for (double v : rep.empirical) sup_ms = std::max(sup_ms, v);
  const double secs = seconds_since(t0);
  const bool ok = res.converged && n_ratio > 0 && max_ratio <= s.cond.theta1 + 0.05 && rep.violations == 0 &&
                  secs < 600.0;
  return {ok, "max delta ratio " + fmt(max_ratio) + " (limit theta1+0.05 = " + fmt(s.cond.theta1 + 0.05) +
                  ", geometric mean " + fmt(geo) + ", " + std::to_string(res.iterations) + " iterations), sup E|x|^2 " +
                  fmt(sup_ms) + " vs R^2 " + fmt(r2) + ", " + std::to_string(rep.violations) + " violations, " +
                  fmt(secs) + " s"};
}

// -- 7 ----------------------------------------------------------------------
Outcome dissipativity() {
  const HeatSetup s = heat_setup();
  const TimeGrid grid{0.0, 0.01, 2000};
  const SpectralState x0 = SpectralState::unit(s.cfg.n_modes, 0, 1.0);
  const auto ens = simulate_ensemble(s.problem, x0, grid, 500, labeled_seed(7, "ensemble"), {5});
  const auto times = grid_times(ens.grid());
  const auto curve = dissipativity_curve(s.cond.constants, x0.norm_sq(), 0.0, times);
  const BoundReport rep = verify_bound(ens, curve.values);
  return {curve.certified && rep.violations == 0,
          std::string(curve.certified ? "certified" : "not certified") + ", " + std::to_string(rep.violations) +
              " violations over " + std::to_string(times.size()) + " nodes, margin " + fmt(rep.margin)};
}

// -- 8 ----------------------------------------------------------------------
Outcome exponential_convergence() {
  const HeatSetup s = heat_setup();
  const TimeGrid grid{0.0, 0.01, 200};
  const auto fields = generate_replica_fields(s.problem, grid, 200, labeled_seed(8, "ensemble"));
  const SpectralState xp = SpectralState::unit(s.cfg.n_modes, 0, 1.0);
  const SpectralState xm = SpectralState::unit(s.cfg.n_modes, 0, -1.0);
  const auto a = simulate_ensemble(s.problem, xp, grid, fields, 8);
  const auto b = simulate_ensemble(s.problem, xm, grid, fields, 8);
  const auto diffs = squared_differences(a, b);
  std::vector<double> mean(diffs.front().size(), 0.0);
  for (const auto& d : diffs)
    for (std::size_t j = 0; j < d.size(); ++j) mean[j] += d[j] / static_cast<double>(diffs.size());
  const auto times = grid_times(a.grid());
  const DecayFit fit = fit_log_decay(times, mean);
  const auto curve = convergence_curve(s.cond.constants, 4.0, 0.0, times);
  return {fit.rate >= curve.rate - fit.half_width,
          "fitted rate " + fmt(fit.rate) + " +- " + fmt(fit.half_width) + " vs bound rate " + fmt(curve.rate)};
}

// -- 9 ----------------------------------------------------------------------
Outcome linear_bound() {
  const HurstParameter h(0.75);
  const EvolutionProblem p = linear_test_problem(16, 64, h);
  const TimeGrid grid{0.0, 0.01, 2000};
  const double eps_tail = 1e-8;
  const auto fields = generate_replica_fields(p, bounded_field_grid(p, grid, eps_tail), 200, labeled_seed(9, "ensemble"));
  std::vector<std::vector<double>> norms(fields.size());
  parallel_for(fields.size(), [&](std::size_t r) {
    const Trajectory tr = linear_bounded_solution(p, grid, fields[r], eps_tail, {10});
    for (const auto& st : tr.states) norms[r].push_back(std::sqrt(st.norm_sq()));
  });
  std::vector<double> times;
  for (std::size_t k = 0; k < norms.front().size(); ++k) times.push_back(0.1 * static_cast<double>(k));
  ProblemConstants c;
  c.alpha = p.alpha();
  c.h = h;
  c.qspec = p.qspec;
  const double bound = moment_bound_linear(c, 1.0, 1.0);
  const std::vector<double> curve(times.size(), bound);
  const BoundReport rep = verify_bound(norms, times, curve, Statistic::MeanNorm);
  double sup = 0.0;
  for (double v : rep.empirical) sup = std::max(sup, v);
  return {rep.violations == 0, "sup E|phi| " + fmt(sup) + " vs bound " + fmt(bound) + ", " +
                                   std::to_string(rep.violations) + " violations"};
}

// -- 10 ---------------------------------------------------------------------
Outcome recurrence() {
  const double dt = 0.01;
  const std::size_t n = 100000;
  SampledPath q{{0.0, dt, n}, {}};
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = dt * static_cast<double>(k);
    q.values.push_back(std::sin(t) + std::sin(std::numbers::sqrt2 * t));
  }
  std::vector<double> taus;
  for (std::size_t k = 0; k <= 50000; ++k) taus.push_back(dt * static_cast<double>(k));
  const AlmostPeriodSet set = epsilon_almost_periods(q, 0.2, taus);
  const bool quasi_ok = !set.taus.empty() && set.max_gap < 100.0;

  ExampleConfig cfg;
  cfg.n_modes = 8;
  cfg.physical_grid_points = 32;
  const EvolutionProblem per = periodic_test_problem(cfg);
  const TimeGrid grid{0.0, 2.0 * kPi / 64.0, 64};
  CompatibilityOptions opt;
  opt.noise_floor_pairs = 8;
  opt.record_stride = 4;
  const auto full = compatibility_check(per, 2.0 * kPi, 200, grid, labeled_seed(10, "compat"), opt);
  const auto half = compatibility_check(per, kPi, 200, grid, labeled_seed(10, "compat"), opt);
  const bool at_floor = full.max_distance <= full.noise_floor + opt.floor_sigmas * full.noise_floor_sd;
  const bool above = half.max_distance - half.noise_floor >= opt.floor_sigmas * half.noise_floor_sd;
  return {quasi_ok && at_floor && above,
          "quasi-periodic: " + std::to_string(set.taus.size()) + " periods, max gap " + fmt(set.max_gap) +
              " (limit 100); tau=2pi distance " + fmt(full.max_distance) + " vs floor " + fmt(full.noise_floor) +
              " sd " + fmt(full.noise_floor_sd) + "; tau=pi distance " + fmt(half.max_distance) + " vs floor " +
              fmt(half.noise_floor) + " sd " + fmt(half.noise_floor_sd)};
}

// -- 11 ---------------------------------------------------------------------
std::vector<std::vector<std::string>> pipeline_runs() {
  return {
      {"fbm", "--steps", "2048"},
      {"fbm", "--steps", "256", "--method", "cholesky"},
      {"simulate", "--modes", "8", "--points", "32", "--steps", "200", "--replicas", "8"},
      {"simulate", "--bounded", "--modes", "8", "--points", "32", "--steps", "200", "--replicas", "8"},
      {"verify", "--bound", "dissipativity", "--modes", "8", "--points", "32", "--steps", "200", "--replicas", "20",
       "--resamples", "200"},
      {"recurrence", "--signal", "quasi", "--tau-max", "50"},
      {"example", "--modes", "8", "--points", "17", "--dt", "0.01", "--t-end", "3", "--replicas", "16",
       "--compat-replicas", "12", "--diagnostics-dt", "0.02"},
      {"sweep"},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "fbmlab_acceptance_11";
  fs::remove_all(root);
  std::size_t files = 0, differing = 0;
  int bad_exit = 0;
  const auto runs = pipeline_runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const fs::path a = root / ("a" + std::to_string(i)), b = root / ("b" + std::to_string(i));
    for (const auto& [dir, threads] : {std::pair{a, "1"}, std::pair{b, "0"}}) {
      auto args = runs[i];
      args.insert(args.end(), {"--seed", "11", "--threads", threads, "--out", dir.string()});
      std::ostringstream out, err;
      const int code = run_cli(args, out, err);
      if (code != 0 && code != 1) ++bad_exit;
    }
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      if (!fs::exists(b / e.path().filename()) || slurp(e.path()) != slurp(b / e.path().filename())) ++differing;
    }
  }
  fs::remove_all(root);
  return {differing == 0 && bad_exit == 0 && files > 0,
          std::to_string(files) + " files compared across thread counts, " + std::to_string(differing) +
              " differ, " + std::to_string(bad_exit) + " failed runs"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1-11>\n";
    return 2;
  }
  const int n = std::atoi(argv[1]);
  Outcome (*const table[])() = {fgn_exactness,  sampler_ks,    kernel_identity,         lemma_inequality,
                                constants_closed_form, contraction, dissipativity, exponential_convergence,
                                linear_bound,   recurrence,    determinism};
  if (n < 1 || n > 11) {
    std::cerr << "criterion must be in 1..11\n";
    return 2;
  }
  Outcome o{false, ""};
  try {
    o = table[n - 1]();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail << std::endl;
  return o.pass ? 0 : 1;
}
