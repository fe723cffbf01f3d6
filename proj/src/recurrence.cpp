#include "fbmlab/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "fbmlab/bounds.hpp"
#include "fbmlab/errors.hpp"
#include "fbmlab/io.hpp"
#include "fbmlab/parallel.hpp"
#include "fbmlab/seeding.hpp"

namespace fbmlab {

void SampledPath::validate() const {
  grid.validate();
  if (values.size() != grid.n_steps + 1) throw GridMismatch("sampled path needs one value per node");
}

namespace {

bool same_grid(const TimeGrid& a, const TimeGrid& b) {
  const double scale = std::max({1.0, std::abs(a.t0), std::abs(b.t0)});
  return a.n_steps == b.n_steps && std::abs(a.dt - b.dt) <= 1e-12 * std::max(a.dt, b.dt) &&
         std::abs(a.t0 - b.t0) <= 1e-9 * scale;
}

}  // namespace

double bebutov_distance(const SampledPath& p1, const SampledPath& p2) {
  p1.validate();
  p2.validate();
  if (!same_grid(p1.grid, p2.grid)) throw GridMismatch("Bebutov distance needs a shared grid");
  const TimeGrid& g = p1.grid;
  const double center = -g.t0 / g.dt;
  const double rounded = std::round(center);
  if (std::abs(center - rounded) > 1e-6 || rounded <= 0.0 || rounded >= static_cast<double>(g.n_steps))
    throw GridMismatch("Bebutov distance needs t = 0 as an interior grid node");
  const auto i0 = static_cast<std::size_t>(rounded);
  const std::size_t reach = std::min(i0, g.n_steps - i0);

  auto rho = [&](std::size_t i) { return std::abs(p1.values[i] - p2.values[i]); };
  double window_max = rho(i0);
  double best = window_max;  // T -> 0+
  for (std::size_t k = 1; k <= reach; ++k) {
    window_max = std::max({window_max, rho(i0 - k), rho(i0 + k)});
    best = std::max(best, std::min(window_max, 1.0 / (static_cast<double>(k) * g.dt)));
  }
  return best;
}

AlmostPeriodSet epsilon_almost_periods(const SampledPath& p, double epsilon,
                                       std::span<const double> tau_grid) {
  p.validate();
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  AlmostPeriodSet out;
  out.epsilon = epsilon;
  if (!tau_grid.empty()) {
    const auto [lo, hi] = std::minmax_element(tau_grid.begin(), tau_grid.end());
    out.search_range = {*lo, *hi};
  }
  const std::size_t n = p.values.size();
  for (double tau : tau_grid) {
    const double steps = std::abs(tau) / p.grid.dt;
    const double k_real = std::round(steps);
    if (std::abs(steps - k_real) > 1e-6 * std::max(1.0, steps))
      throw DomainError("almost-period candidates must be multiples of dt; got " + format_real(tau));
    const auto k = static_cast<std::size_t>(k_real);
    if (k >= n) continue;  // no overlap left
    double sup = 0.0;
    for (std::size_t j = 0; j + k < n && sup < epsilon; ++j)
      sup = std::max(sup, std::abs(p.values[j + k] - p.values[j]));
    if (sup < epsilon) out.taus.push_back(tau);
  }
  std::sort(out.taus.begin(), out.taus.end());
  if (out.taus.size() < 2) {
    out.max_gap = std::numeric_limits<double>::infinity();
  } else {
    out.max_gap = 0.0;
    for (std::size_t i = 1; i < out.taus.size(); ++i)
      out.max_gap = std::max(out.max_gap, out.taus[i] - out.taus[i - 1]);
  }
  return out;
}

namespace {

struct WeightedSupport {
  std::vector<double> x;
  std::vector<double> w;  // mu mass minus nu mass
};

WeightedSupport pool(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(mu.samples.size() + nu.samples.size());
  const double wm = 1.0 / static_cast<double>(mu.samples.size());
  const double wn = 1.0 / static_cast<double>(nu.samples.size());
  for (double x : mu.samples) pts.emplace_back(x, wm);
  for (double x : nu.samples) pts.emplace_back(x, -wn);
  std::sort(pts.begin(), pts.end());
  WeightedSupport s;
  for (const auto& [x, w] : pts) {
    if (!s.x.empty() && s.x.back() == x) {
      s.w.back() += w;
    } else {
      s.x.push_back(x);
      s.w.push_back(w);
    }
  }
  return s;
}

// Concave piecewise-linear function through (x_i, y_i), x strictly increasing.
struct Concave {
  std::vector<double> x;
  std::vector<double> y;

  double at(double t) const {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
  }

  // Keep the part on [lo, hi], adding exact endpoint values.
  void clip(double lo, double hi) {
    const double ylo = at(lo);
    const double yhi = at(hi);
    Concave out;
    out.x.push_back(lo);
    out.y.push_back(ylo);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > lo && x[i] < hi) {
        out.x.push_back(x[i]);
        out.y.push_back(y[i]);
      }
    }
    out.x.push_back(hi);
    out.y.push_back(yhi);
    *this = std::move(out);
  }

  // g(f) = max_{|f' - f| <= c} this(f'): split at the maximizer and move the
  // left branch left by c, the right branch right by c.
  void dilate(double c) {
    if (c <= 0.0) return;
    const std::size_t top = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    Concave out;
    out.x.reserve(x.size() + 1);
    out.y.reserve(x.size() + 1);
    for (std::size_t i = 0; i <= top; ++i) {
      out.x.push_back(x[i] - c);
      out.y.push_back(y[i]);
    }
    for (std::size_t i = top; i < x.size(); ++i) {
      out.x.push_back(x[i] + c);
      out.y.push_back(y[i]);
    }
    *this = std::move(out);
  }
};

// max sum_i w_i f_i  s.t. |f_i| <= s, |f_i - f_{i-1}| <= (1 - s)(x_i - x_{i-1}).
double chain_lp(const WeightedSupport& sup, double s) {
  if (s <= 0.0) return 0.0;
  const double lip = 1.0 - s;
  Concave v{{-s, s}, {-sup.w[0] * s, sup.w[0] * s}};
  for (std::size_t i = 1; i < sup.x.size(); ++i) {
    v.dilate(lip * (sup.x[i] - sup.x[i - 1]));
    v.clip(-s, s);
    for (std::size_t j = 0; j < v.x.size(); ++j) v.y[j] += sup.w[i] * v.x[j];
  }
  return *std::max_element(v.y.begin(), v.y.end());
}

}  // namespace

double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.samples.empty() || nu.samples.empty()) throw DomainError("empirical measures must be nonempty");
  const WeightedSupport s = pool(mu, nu);
  double cdf_gap = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < s.x.size(); ++i) {
    cdf_gap += s.w[i];
    total += std::abs(cdf_gap) * (s.x[i + 1] - s.x[i]);
  }
  return total;
}

BlDistance bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t exact_cutoff) {
  if (mu.samples.empty() || nu.samples.empty()) throw DomainError("empirical measures must be nonempty");
  const WeightedSupport sup = pool(mu, nu);
  if (sup.x.size() > exact_cutoff) return {std::min(2.0, wasserstein1(mu, nu)), true};
  if (std::all_of(sup.w.begin(), sup.w.end(), [](double w) { return std::abs(w) < 1e-15; }))
    return {0.0, false};

  // Golden-section search of the concave value over the split s.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = chain_lp(sup, c), fd = chain_lp(sup, d);
  double best = std::max({chain_lp(sup, 1.0), fc, fd});
  for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = chain_lp(sup, c);
      best = std::max(best, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = chain_lp(sup, d);
      best = std::max(best, fd);
    }
  }
  return {std::clamp(best, 0.0, 2.0), false};
}

std::string to_string(Summary s) { return s == Summary::Norm ? "norm" : "mode-1-coefficient"; }

namespace {

double summarize(const SpectralState& x, Summary summary) {
  return summary == Summary::Norm ? std::sqrt(x.norm_sq()) : x.coeffs.at(0);
}

}  // namespace

std::vector<EmpiricalMeasure> distribution_profile(const TrajectoryEnsemble& ensemble, Summary summary) {
  ensemble.validate();
  const std::size_t nodes = ensemble.replicas.front().states.size();
  std::vector<EmpiricalMeasure> out(nodes);
  for (auto& m : out) m.samples.reserve(ensemble.size());
  for (const Trajectory& tr : ensemble.replicas)
    for (std::size_t j = 0; j < nodes; ++j) out[j].samples.push_back(summarize(tr.states[j], summary));
  return out;
}

SampledPath mean_profile(const TrajectoryEnsemble& ensemble, Summary summary) {
  const auto profile = distribution_profile(ensemble, summary);
  SampledPath p{ensemble.grid(), {}};
  p.values.reserve(profile.size());
  for (const auto& m : profile) {
    p.values.push_back(std::accumulate(m.samples.begin(), m.samples.end(), 0.0) /
                       static_cast<double>(m.samples.size()));
  }
  return p;
}

namespace {

TrajectoryEnsemble bounded_ensemble(const EvolutionProblem& problem, const TimeGrid& grid,
                                    std::size_t replicas, std::uint64_t seed,
                                    const CompatibilityOptions& options) {
  const TimeGrid ext = bounded_field_grid(problem, grid, options.eps_tail);
  const auto fields = generate_replica_fields(problem, ext, replicas, seed);
  PicardOptions po;
  po.tol = options.picard_tol;
  po.max_iter = options.picard_max_iter;
  po.eps_tail = options.eps_tail;
  po.record_stride = options.record_stride;
  PicardResult res = bounded_solution_picard(problem, grid, fields, po);
  res.solution.master_seed = seed;
  return std::move(res.solution);
}

struct ProfileDistance {
  std::vector<double> per_node;
  double max = 0.0;
  bool upper_bound = false;
};

ProfileDistance profile_distance(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b,
                                 const CompatibilityOptions& options) {
  const auto pa = distribution_profile(a, options.summary);
  const auto pb = distribution_profile(b, options.summary);
  ProfileDistance d;
  d.per_node.resize(pa.size());
  std::vector<char> flags(pa.size(), 0);
  parallel_for(pa.size(), [&](std::size_t j) {
    const BlDistance bl = bl_distance(pa[j], pb[j], options.exact_cutoff);
    d.per_node[j] = bl.value;
    flags[j] = bl.upper_bound ? 1 : 0;
  });
  d.max = *std::max_element(d.per_node.begin(), d.per_node.end());
  d.upper_bound = std::any_of(flags.begin(), flags.end(), [](char f) { return f != 0; });
  return d;
}

}  // namespace

CompatibilityReport compatibility_check(const EvolutionProblem& problem, double tau,
                                        std::size_t replicas, const TimeGrid& grid,
                                        std::uint64_t seed, const CompatibilityOptions& options) {
  grid.validate();
  if (replicas < 2) throw DomainError("compatibility check needs at least two replicas");
  if (options.noise_floor_pairs < 2) throw DomainError("noise floor needs at least two pairs");
  const double steps = tau / grid.dt;
  if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, std::abs(steps)))
    throw DomainError("shift tau must be a multiple of dt");

  const TrajectoryEnsemble base = bounded_ensemble(problem, grid, replicas, labeled_seed(seed, "compat:base"), options);
  const TrajectoryEnsemble moved =
      bounded_ensemble(problem.shifted(tau), grid, replicas, labeled_seed(seed, "compat:shift"), options);
  const ProfileDistance d = profile_distance(base, moved, options);

  CompatibilityReport rep;
  rep.tau = tau;
  rep.times = grid_times(base.grid());
  rep.distances = d.per_node;
  rep.max_distance = d.max;
  rep.upper_bound = d.upper_bound;
  for (std::size_t i = 0; i < options.noise_floor_pairs; ++i) {
    const std::string tag = std::to_string(i);
    const TrajectoryEnsemble fa = bounded_ensemble(problem, grid, replicas, labeled_seed(seed, "compat:floor-a:" + tag), options);
    const TrajectoryEnsemble fb = bounded_ensemble(problem, grid, replicas, labeled_seed(seed, "compat:floor-b:" + tag), options);
    const ProfileDistance f = profile_distance(fa, fb, options);
    rep.floor_samples.push_back(f.max);
    rep.upper_bound = rep.upper_bound || f.upper_bound;
  }
  const double n = static_cast<double>(rep.floor_samples.size());
  rep.noise_floor = std::accumulate(rep.floor_samples.begin(), rep.floor_samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : rep.floor_samples) ss += (v - rep.noise_floor) * (v - rep.noise_floor);
  rep.noise_floor_sd = std::sqrt(ss / (n - 1.0));
  rep.verdict = rep.max_distance <= rep.noise_floor + options.floor_sigmas * rep.noise_floor_sd
                    ? "at-noise-floor"
                    : "above-noise-floor";
  return rep;
}

std::string recurrence_report_json(const AlmostPeriodSet& set) {
  nlohmann::ordered_json j;
  j["epsilon"] = set.epsilon;
  j["taus"] = set.taus;
  j["max_gap"] = set.max_gap;
  j["search_range"] = {set.search_range.lo, set.search_range.hi};
  return j.dump(2) + "\n";
}

std::string compatibility_report_json(const CompatibilityReport& report) {
  nlohmann::ordered_json j;
  j["tau"] = report.tau;
  j["distances"] = report.distances;
  j["noise_floor"] = report.noise_floor;
  j["verdict"] = report.verdict;
  j["times"] = report.times;
  j["max_distance"] = report.max_distance;
  j["noise_floor_sd"] = report.noise_floor_sd;
  j["floor_samples"] = report.floor_samples;
  j["upper_bound"] = report.upper_bound;
  return j.dump(2) + "\n";
}

}  // namespace fbmlab
