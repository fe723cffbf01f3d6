#include "fbmlab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "fbmlab/bounds.hpp"
#include "fbmlab/errors.hpp"
#include "fbmlab/fbm.hpp"
#include "fbmlab/galerkin.hpp"
#include "fbmlab/heat_example.hpp"
#include "fbmlab/io.hpp"
#include "fbmlab/parallel.hpp"
#include "fbmlab/recurrence.hpp"
#include "fbmlab/seeding.hpp"

namespace fbmlab {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Options registered on the command line that also accept a config key.
class Registry {
 public:
  template <class T>
  CLI::Option* option(CLI::App* app, const std::string& key, T& var, const std::string& help) {
    CLI::Option* opt = app->add_option("--" + dashed(key), var, help)->capture_default_str();
    entries_[app].push_back({key, opt, [&var, key](const json& j) { var = j.get<T>(); }});
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& key, bool& var, const std::string& help) {
    CLI::Option* opt = app->add_flag("--" + dashed(key), var, help);
    entries_[app].push_back({key, opt, [&var](const json& j) { var = j.get<bool>(); }});
    return opt;
  }

  // Fill options not given as flags from the config object. Keys must belong
  // to one of `apps`.
  void apply(const json& cfg, const std::vector<CLI::App*>& apps) const {
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      const Entry* found = nullptr;
      for (CLI::App* app : apps) {
        const auto it = entries_.find(app);
        if (it == entries_.end()) continue;
        for (const Entry& e : it->second)
          if (e.key == key) found = &e;
      }
      if (found == nullptr) throw ConfigError("unknown config key '" + key + "'");
      if (found->opt->count() > 0) continue;
      try {
        found->assign(value);
      } catch (const json::exception& ex) {
        throw ConfigError("config key '" + key + "': " + ex.what());
      }
    }
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> assign;
  };

  static std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
  }

  std::map<CLI::App*, std::vector<Entry>> entries_;
};

json load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& ex) {
    const std::size_t upto = std::min<std::size_t>(ex.byte == 0 ? 0 : ex.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": malformed JSON (" + ex.what() + ")");
  }
}

void write_file(const fs::path& path, const std::string& text, std::ostream& out) {
  write_text_file(path, text);
  out << "wrote " << path.string() << "\n";
}

struct Common {
  std::uint64_t seed = 20240601;
  std::string out_dir = "out";
  int threads = 0;
  std::string config;
};

// ---- fbm ------------------------------------------------------------------

struct FbmOpts {
  double hurst = 0.75;
  std::size_t steps = 1024;
  double dt = 1e-3;
  std::string method = "circulant";
  bool selftest = false;
  std::size_t replicas = 10000;
  std::size_t max_lag = 10;
};

int cmd_fbm(const Common& c, const FbmOpts& o, std::ostream& out) {
  const HurstParameter h(o.hurst);
  const TimeGrid grid{0.0, o.dt, o.steps};
  grid.validate();
  const std::uint64_t seed = labeled_seed(c.seed, "fbm");
  if (o.method != "circulant" && o.method != "cholesky")
    throw DomainError("method must be 'circulant' or 'cholesky'");
  const FgnPath path =
      o.method == "circulant" ? generate_fgn_circulant(h, grid, seed) : generate_fbm_cholesky(h, grid, seed);
  std::ostringstream os;
  write_fgn_csv(os, path);
  write_file(fs::path(c.out_dir) / "fgn.csv", os.str(), out);
  if (!o.selftest) return kExitOk;

  const auto checks = fgn_autocovariance_selftest(h, o.steps, o.dt, o.replicas, seed, o.max_lag);
  bool ok = true;
  for (const auto& k : checks) {
    out << (k.pass ? "PASS" : "FAIL") << " lag " << k.lag << ": mean " << format_real(k.mean)
        << " expected " << format_real(k.expected) << " se " << format_real(k.standard_error) << "\n";
    ok = ok && k.pass;
  }
  out << "selftest " << (ok ? "pass" : "fail") << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

// ---- shared problem options -------------------------------------------------

struct ProblemOpts {
  std::string problem = "heat";
  double hurst = 0.75;
  std::size_t modes = 16;
  std::size_t points = 64;
  double sigma = 1.0;
  double dt = 0.01;
  std::size_t steps = 1000;
  std::size_t replicas = 20;
  std::size_t stride = 1;
  double x0_amplitude = 1.0;
  double eps_tail = 1e-8;
};

void add_problem_options(Registry& reg, CLI::App* app, ProblemOpts& o) {
  reg.option(app, "problem", o.problem, "heat | linear | periodic");
  reg.option(app, "hurst", o.hurst, "Hurst index in (0.5, 1)");
  reg.option(app, "modes", o.modes, "Galerkin modes");
  reg.option(app, "points", o.points, "physical collocation points");
  reg.option(app, "sigma", o.sigma, "covariance of the noise mode");
  reg.option(app, "dt", o.dt, "time step");
  reg.option(app, "steps", o.steps, "number of steps");
  reg.option(app, "replicas", o.replicas, "ensemble size");
  reg.option(app, "stride", o.stride, "record every stride-th step");
  reg.option(app, "x0_amplitude", o.x0_amplitude, "initial state amplitude on mode 1");
  reg.option(app, "eps_tail", o.eps_tail, "truncation tolerance of integrals from -infinity");
}

ExampleConfig example_config(const ProblemOpts& o) {
  ExampleConfig cfg;
  cfg.h = HurstParameter(o.hurst);
  cfg.n_modes = o.modes;
  cfg.physical_grid_points = o.points;
  cfg.sigma = o.sigma;
  cfg.dt = o.dt;
  cfg.output_dt = o.dt;
  return cfg;
}

struct BuiltProblem {
  EvolutionProblem problem;
  ProblemConstants constants;
};

BuiltProblem build_problem(const ProblemOpts& o) {
  if (o.replicas < 2) throw DomainError("replicas must be at least 2");
  const ExampleConfig cfg = example_config(o);
  ProblemConstants k = verify_example_conditions(cfg).constants;
  if (o.problem == "heat") return {build_example_problem(cfg), k};
  if (o.problem == "linear") {
    EvolutionProblem p = linear_test_problem(o.modes, o.points, cfg.h);
    p.qspec = CovarianceOperatorSpec{{o.sigma}};
    k.lip = 0.0;
    return {p, k};
  }
  if (o.problem == "periodic") {
    k.lip = 0.5;
    return {periodic_test_problem(cfg), k};
  }
  throw DomainError("problem must be 'heat', 'linear' or 'periodic'");
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOpts {
  ProblemOpts p;
  double t0 = 0.0;
  bool bounded = false;
  double tol = 1e-10;
  std::size_t max_iter = 50;
};

int cmd_simulate(const Common& c, const SimulateOpts& o, std::ostream& out) {
  const BuiltProblem bp = build_problem(o.p);
  const TimeGrid grid{o.t0, o.p.dt, o.p.steps};
  grid.validate();
  const std::uint64_t seed = labeled_seed(c.seed, "simulate");
  const SpectralState x0 = SpectralState::unit(o.p.modes, 0, o.p.x0_amplitude);
  const fs::path dir(c.out_dir);

  TrajectoryEnsemble ens;
  if (o.bounded) {
    const TimeGrid ext = bounded_field_grid(bp.problem, grid, o.p.eps_tail);
    const auto fields = generate_replica_fields(bp.problem, ext, o.p.replicas, seed);
    PicardOptions po;
    po.tol = o.tol;
    po.max_iter = o.max_iter;
    po.eps_tail = o.p.eps_tail;
    po.theta1 = compute_theta1(bp.constants);
    po.initial_guess = x0;
    po.record_stride = o.p.stride;
    out << "theta1 " << format_real(*po.theta1) << "\n";
    PicardResult res = bounded_solution_picard(bp.problem, grid, fields, po);
    json log;
    log["theta1"] = *po.theta1;
    log["deltas"] = res.deltas;
    log["iterations"] = res.iterations;
    log["converged"] = res.converged;
    for (std::size_t i = 0; i < res.deltas.size(); ++i)
      out << "iteration " << (i + 1) << " delta " << format_real(res.deltas[i]) << "\n";
    write_file(dir / "picard.json", log.dump(2) + "\n", out);
    ens = std::move(res.solution);
    ens.master_seed = seed;
  } else {
    ens = simulate_ensemble(bp.problem, x0, grid, o.p.replicas, seed, {o.p.stride});
  }

  std::ostringstream traj;
  write_trajectory_csv(traj, ens.replicas.front());
  write_file(dir / "trajectory.csv", traj.str(), out);
  std::ostringstream summary;
  write_ensemble_summary_csv(summary, grid_times(ens.grid()),
                             bootstrap_mean(squared_norms(ens), {1000, 0.95, labeled_seed(c.seed, "bootstrap")}));
  write_file(dir / "ensemble_summary.csv", summary.str(), out);
  return kExitOk;
}

// ---- verify -----------------------------------------------------------------

struct VerifyOpts {
  ProblemOpts p;
  std::string bound = "dissipativity";
  std::size_t resamples = 1000;
  double fit_until = 2.0;
};

int cmd_verify(const Common& c, const VerifyOpts& o, std::ostream& out) {
  const fs::path dir(c.out_dir);
  const BootstrapOptions boot{o.resamples, 0.95, labeled_seed(c.seed, "bootstrap")};
  const std::uint64_t seed = labeled_seed(c.seed, "verify");
  const TimeGrid grid{0.0, o.p.dt, o.p.steps};
  grid.validate();
  const SpectralState x0 = SpectralState::unit(o.p.modes, 0, o.p.x0_amplitude);

  json report;
  bool certified = false;
  std::size_t violations = 0;

  if (o.bound == "linear") {
    ProblemOpts lin = o.p;
    lin.problem = "linear";
    const BuiltProblem bp = build_problem(lin);
    const auto fields = generate_replica_fields(bp.problem, bounded_field_grid(bp.problem, grid, o.p.eps_tail),
                                                o.p.replicas, seed);
    PicardOptions po;
    po.eps_tail = o.p.eps_tail;
    po.record_stride = o.p.stride;
    const TrajectoryEnsemble ens = bounded_solution_picard(bp.problem, grid, fields, po).solution;
    std::vector<std::vector<double>> norms = squared_norms(ens);
    for (auto& row : norms)
      for (double& v : row) v = std::sqrt(v);
    const double bound = moment_bound_linear(bp.constants, 1.0, o.p.sigma);
    const std::vector<double> times = grid_times(ens.grid());
    const BoundReport rep = verify_bound(norms, times, std::vector<double>(times.size(), bound),
                                         Statistic::MeanNorm, boot);
    report = json::parse(bound_report_json(rep));
    certified = true;
    violations = rep.violations;
  } else if (o.bound == "radius") {
    const BuiltProblem bp = build_problem(o.p);
    const auto fields = generate_replica_fields(bp.problem, bounded_field_grid(bp.problem, grid, o.p.eps_tail),
                                                o.p.replicas, seed);
    PicardOptions po;
    po.tol = 1e-12;
    po.eps_tail = o.p.eps_tail;
    po.theta1 = compute_theta1(bp.constants);
    po.initial_guess = x0;
    po.record_stride = o.p.stride;
    const PicardResult res = bounded_solution_picard(bp.problem, grid, fields, po);
    const double r = radius_R(bp.constants);
    const std::vector<double> times = grid_times(res.solution.grid());
    const BoundReport rep = verify_bound(squared_norms(res.solution), times,
                                         std::vector<double>(times.size(), r * r),
                                         Statistic::MeanSquareNorm, boot);
    report = json::parse(bound_report_json(rep));
    report["theta1"] = *po.theta1;
    report["radius"] = r;
    report["deltas"] = res.deltas;
    certified = *po.theta1 < 1.0;
    violations = rep.violations;
  } else if (o.bound == "dissipativity" || o.bound == "convergence") {
    const BuiltProblem bp = build_problem(o.p);
    const auto fields = generate_replica_fields(bp.problem, grid, o.p.replicas, seed);
    const TrajectoryEnsemble a = simulate_ensemble(bp.problem, x0, grid, fields, seed, {o.p.stride});
    const std::vector<double> times = grid_times(a.grid());
    if (o.bound == "dissipativity") {
      const DissipativityCurve curve = dissipativity_curve(bp.constants, x0.norm_sq(), 0.0, times);
      const BoundReport rep = verify_bound(squared_norms(a), times, curve.values, Statistic::MeanSquareNorm, boot);
      report = json::parse(bound_report_json(rep));
      report["asymptote"] = curve.asymptote;
      report["rate"] = curve.rate;
      certified = curve.certified;
      violations = rep.violations;
    } else {
      SpectralState neg = x0;
      for (double& v : neg.coeffs) v = -v;
      const TrajectoryEnsemble b = simulate_ensemble(bp.problem, neg, grid, fields, seed, {o.p.stride});
      const ConvergenceCurve curve = convergence_curve(bp.constants, 4.0 * x0.norm_sq(), 0.0, times);
      const BoundReport rep = verify_bound(squared_differences(a, b), times, curve.values,
                                           Statistic::MeanSquareDifference, boot);
      report = json::parse(bound_report_json(rep));
      std::vector<double> ft, fv;
      for (std::size_t i = 0; i < times.size() && times[i] <= o.fit_until; ++i) {
        ft.push_back(times[i]);
        fv.push_back(rep.empirical[i]);
      }
      const DecayFit fit = fit_log_decay(ft, fv);
      report["certified_rate"] = curve.rate;
      report["fitted_rate"] = fit.rate;
      report["fit_half_width"] = fit.half_width;
      out << "fitted decay rate " << format_real(fit.rate) << " +- " << format_real(fit.half_width)
          << " (certified " << format_real(curve.rate) << ")\n";
      certified = curve.certified;
      violations = rep.violations;
    }
  } else {
    throw DomainError("bound must be one of dissipativity, convergence, linear, radius");
  }
  report["bound"] = o.bound;
  report["certified"] = certified;
  write_file(dir / ("verify_" + o.bound + ".json"), report.dump(2) + "\n", out);
  out << o.bound << ": " << violations << " violations" << (certified ? "" : " (not certified)") << "\n";
  return certified && violations > 0 ? kExitCheckFailed : kExitOk;
}

// ---- recurrence -------------------------------------------------------------

struct RecurrenceOpts {
  double epsilon = 0.1;
  double tau_max = 100.0;
  std::string signal = "sin";
  std::string input;
  double dt = 0.01;
  double span = 0.0;  // 0: twice tau_max
};

SampledPath read_path_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open input " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> ts, vs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      ts.push_back(std::stod(line.substr(0, comma)));
      vs.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected 't,value'");
    }
  }
  if (ts.size() < 2) throw DomainError("input path needs at least two rows");
  const double dt = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (std::abs(ts[i] - ts[i - 1] - dt) > 1e-6 * dt) throw GridMismatch("input times must be uniform");
  return {{ts.front(), dt, ts.size() - 1}, vs};
}

int cmd_recurrence(const Common& c, const RecurrenceOpts& o, std::ostream& out) {
  SampledPath path;
  if (!o.input.empty()) {
    path = read_path_csv(o.input);
  } else {
    if (!(o.dt > 0.0) || !(o.tau_max > 0.0)) throw DomainError("dt and tau_max must be positive");
    const double span = o.span > 0.0 ? o.span : 2.0 * o.tau_max;
    const auto n = static_cast<std::size_t>(std::llround(span / o.dt));
    path.grid = {0.0, o.dt, n};
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = path.grid.at(i);
      if (o.signal == "sin") {
        path.values.push_back(std::sin(t));
      } else if (o.signal == "quasi") {
        path.values.push_back(std::sin(t) + std::sin(std::numbers::sqrt2 * t));
      } else {
        throw DomainError("signal must be 'sin' or 'quasi'");
      }
    }
  }
  std::vector<double> taus;
  const auto kmax = static_cast<std::size_t>(std::floor(o.tau_max / path.grid.dt + 1e-9));
  for (std::size_t k = 0; k <= kmax; ++k) taus.push_back(static_cast<double>(k) * path.grid.dt);
  const AlmostPeriodSet set = epsilon_almost_periods(path, o.epsilon, taus);
  write_file(fs::path(c.out_dir) / "recurrence.json", recurrence_report_json(set), out);
  out << set.taus.size() << " almost periods, max gap " << format_real(set.max_gap) << "\n";
  return kExitOk;
}

// ---- example / sweep --------------------------------------------------------

struct ExampleOpts {
  ExampleConfig cfg;
  double hurst = 0.75;
  bool defaults = false;
};

int cmd_example(const Common& c, ExampleOpts o, std::ostream& out) {
  o.cfg.h = HurstParameter(o.hurst);
  o.cfg.seed = c.seed;
  o.cfg.threads = static_cast<std::size_t>(std::max(0, c.threads));
  const ExampleOutputs res = run_example(o.cfg, c.out_dir);
  for (const auto& p : res.data_files) out << "wrote " << p.string() << "\n";
  for (const auto& p : res.reports) out << "wrote " << p.string() << "\n";
  if (res.bounds_violated) {
    out << "a certified bound was violated\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::vector<double>& hs, std::ostream& out) {
  const auto rows = constants_sweep(hs);
  std::ostringstream os;
  write_sweep_csv(os, rows);
  write_file(fs::path(c.out_dir) / "sweep.csv", os.str(), out);
  for (const auto& r : rows)
    out << "H " << format_real(r.h) << "  C^ " << format_real(r.c_hat) << "  C~ " << format_real(r.c_tilde) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fbmlab: fractional noise, stochastic evolution equations and recurrence diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  Registry reg;
  Common common;
  reg.option(&app, "seed", common.seed, "master seed");
  reg.option(&app, "out", common.out_dir, "output directory");
  reg.option(&app, "threads", common.threads, "worker cap (0: all cores)");
  app.add_option("--config", common.config, "JSON config file")->check(CLI::ExistingFile);

  FbmOpts fbm;
  CLI::App* fbm_app = app.add_subcommand("fbm", "generate fractional Gaussian noise");
  reg.option(fbm_app, "hurst", fbm.hurst, "Hurst index in (0.5, 1)");
  reg.option(fbm_app, "steps", fbm.steps, "number of increments");
  reg.option(fbm_app, "dt", fbm.dt, "time step");
  reg.option(fbm_app, "method", fbm.method, "circulant | cholesky");
  reg.flag(fbm_app, "selftest", fbm.selftest, "Monte-Carlo autocovariance check");
  reg.option(fbm_app, "replicas", fbm.replicas, "self-test replicas");
  reg.option(fbm_app, "max_lag", fbm.max_lag, "largest lag checked by the self-test");

  SimulateOpts sim;
  CLI::App* sim_app = app.add_subcommand("simulate", "simulate an ensemble of solutions");
  add_problem_options(reg, sim_app, sim.p);
  reg.option(sim_app, "t0", sim.t0, "initial time");
  reg.flag(sim_app, "bounded", sim.bounded, "bounded solution by Picard iteration");
  reg.option(sim_app, "tol", sim.tol, "Picard tolerance on the mean-square sup delta");
  reg.option(sim_app, "max_iter", sim.max_iter, "Picard iteration cap");

  VerifyOpts ver;
  ver.p.replicas = 200;
  CLI::App* ver_app = app.add_subcommand("verify", "compare ensemble moments with a bound");
  add_problem_options(reg, ver_app, ver.p);
  reg.option(ver_app, "bound", ver.bound, "dissipativity | convergence | linear | radius");
  reg.option(ver_app, "resamples", ver.resamples, "bootstrap resamples");
  reg.option(ver_app, "fit_until", ver.fit_until, "end of the decay-fit window");

  RecurrenceOpts rec;
  CLI::App* rec_app = app.add_subcommand("recurrence", "epsilon-almost periods of a scalar path");
  reg.option(rec_app, "epsilon", rec.epsilon, "tolerance");
  reg.option(rec_app, "tau_max", rec.tau_max, "largest candidate shift");
  reg.option(rec_app, "signal", rec.signal, "built-in input: sin | quasi");
  reg.option(rec_app, "input", rec.input, "CSV `t,value` input instead of a built-in signal");
  reg.option(rec_app, "dt", rec.dt, "sampling step of the built-in signal");
  reg.option(rec_app, "span", rec.span, "length of the built-in signal (default 2 tau_max)");

  ExampleOpts ex;
  CLI::App* ex_app = app.add_subcommand("example", "stochastic heat equation pipeline");
  reg.flag(ex_app, "defaults", ex.defaults, "run with the default configuration");
  reg.option(ex_app, "hurst", ex.hurst, "Hurst index in (0.5, 1)");
  reg.option(ex_app, "modes", ex.cfg.n_modes, "Galerkin modes");
  reg.option(ex_app, "points", ex.cfg.physical_grid_points, "physical grid points");
  reg.option(ex_app, "dt", ex.cfg.dt, "time step of the surface run");
  reg.option(ex_app, "t_end", ex.cfg.t_end, "final time");
  reg.option(ex_app, "replicas", ex.cfg.replicas, "ensemble size");
  reg.option(ex_app, "sigma", ex.cfg.sigma, "noise covariance");
  reg.option(ex_app, "output_dt", ex.cfg.output_dt, "time spacing of the surface file");
  reg.flag(ex_app, "inhomogeneous_boundary", ex.cfg.inhomogeneous_boundary,
           "u(t,0) = sin t, u(t,1) = cos t by affine lifting");
  reg.option(ex_app, "x0_amplitude", ex.cfg.initial_amplitude, "initial amplitude on mode 1");
  reg.option(ex_app, "diagnostics_dt", ex.cfg.diagnostics_dt, "time step of the ensemble diagnostics");
  reg.option(ex_app, "diagnostics_stride", ex.cfg.diagnostics_stride, "record stride of the diagnostics");
  reg.option(ex_app, "compat_replicas", ex.cfg.compat_replicas, "replicas per compatibility ensemble");
  reg.option(ex_app, "compat_window", ex.cfg.compat_window, "window of the compatibility check");
  reg.option(ex_app, "epsilon", ex.cfg.epsilon, "almost-period tolerance");

  std::vector<double> hs{0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
  CLI::App* sweep_app = app.add_subcommand("sweep", "tabulate the noise constants over H");
  reg.option(sweep_app, "hurst", hs, "Hurst values");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (!common.config.empty()) reg.apply(load_config(common.config), {&app, chosen});
    if (common.threads < 0) throw DomainError("threads must be >= 0");
    set_thread_count(common.threads);
    if (chosen == fbm_app) return cmd_fbm(common, fbm, out);
    if (chosen == sim_app) return cmd_simulate(common, sim, out);
    if (chosen == ver_app) return cmd_verify(common, ver, out);
    if (chosen == rec_app) return cmd_recurrence(common, rec, out);
    if (chosen == ex_app) return cmd_example(common, ex, out);
    return cmd_sweep(common, hs, out);
  } catch (const NoContraction& e) {
    err << "error: " << e.what() << "\n";
    err << "theta1 = " << format_real(e.theta1()) << "\n";
    return kExitNoContraction;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace fbmlab
