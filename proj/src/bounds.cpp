#include "fbmlab/bounds.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <ostream>
#include <random>

#include "fbmlab/errors.hpp"
#include "fbmlab/io.hpp"
#include "fbmlab/volterra.hpp"

namespace fbmlab {

void ProblemConstants::validate() const {
  if (!(n_stab >= 1.0)) throw DomainError("stability constant N must be >= 1");
  if (!(alpha > 0.0)) throw DomainError("decay rate alpha must be positive");
  if (!(lip >= 0.0) || !(m0 >= 0.0) || !(c1 >= 0.0) || !(c2 >= 0.0))
    throw DomainError("L, M0, C1, C2 must be nonnegative");
  qspec.validate();
}

double ConstantWithCheck::relative_gap() const {
  if (closed_form == 0.0) return std::abs(quadrature);
  return std::abs(quadrature - closed_form) / std::abs(closed_form);
}

namespace {

// c_H * sum_n ( \int_0^inf (sigma_n^{1/2} e^{-rate u})^{power} du )^{outer}
double mode_sum_quadrature(const ProblemConstants& consts, double rate, double power, double outer) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double sum = 0.0;
  for (double sigma : consts.qspec.eigenvalues) {
    if (sigma == 0.0) continue;
    const double amp = std::sqrt(sigma);
    auto f = [&](double u) { return std::pow(amp * std::exp(-rate * u), power); };
    const double integral = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-15);
    sum += std::pow(integral, outer);
  }
  return c_h(consts.h) * sum;
}

}  // namespace

ConstantWithCheck compute_c_hat(const ProblemConstants& consts) {
  consts.validate();
  const double H = consts.h.value();
  const double closed = c_h(consts.h) * std::pow(H / consts.alpha, 2.0 * H) * consts.qspec.trace();
  return {closed, mode_sum_quadrature(consts, consts.alpha, 1.0 / H, 2.0 * H)};
}

ConstantWithCheck compute_c_tilde(const ProblemConstants& consts) {
  consts.validate();
  const double e = 2.0 * consts.h.value() - 1.0;
  const double closed = c_h(consts.h) * std::pow(e / consts.alpha, e) * consts.qspec.trace();
  return {closed, mode_sum_quadrature(consts, consts.alpha / 2.0, 2.0 / e, e)};
}

double stationary_convolution_variance(const ProblemConstants& consts) {
  consts.validate();
  const double H = consts.h.value();
  return H * std::tgamma(2.0 * H) * std::pow(consts.alpha, -2.0 * H) * consts.qspec.trace();
}

double compute_theta1(const ProblemConstants& consts) {
  const double c_hat = compute_c_hat(consts).closed_form;
  const double nl = consts.n_stab * consts.lip;
  return 2.0 * nl * nl * (1.0 / (consts.alpha * consts.alpha) + c_hat);
}

LipschitzThresholds lipschitz_thresholds(const ProblemConstants& consts) {
  const double a = consts.alpha;
  const double n = consts.n_stab;
  const double root = std::sqrt(1.0 + compute_c_hat(consts).closed_form * a * a);
  const double c_tilde = compute_c_tilde(consts).closed_form;
  LipschitzThresholds t{};
  t.existence = a / (std::numbers::sqrt2 * n * root);
  t.compatibility = a / (2.0 * std::numbers::sqrt2 * n * root);
  t.convergence = std::min(t.compatibility, a / (n * std::sqrt(3.0 * (1.0 + c_tilde * a))));
  return t;
}

double radius_R(const ProblemConstants& consts) {
  const double a = consts.alpha;
  const double n = consts.n_stab;
  const double root = std::sqrt(1.0 + compute_c_hat(consts).closed_form * a * a);
  const double denom = a - std::numbers::sqrt2 * n * consts.lip * root;
  if (!(denom > 0.0)) {
    throw ThresholdViolated("L = " + format_real(consts.lip) +
                            " is not below the existence threshold; radius R is undefined");
  }
  return std::numbers::sqrt2 * n * consts.m0 * root / denom;
}

double moment_bound_linear(const ProblemConstants& consts, double sup_f_sq, double sup_g_sq) {
  consts.validate();
  const double H = consts.h.value();
  const double a = consts.alpha;
  const double bracket = sup_f_sq + big_c_h(consts.h) * std::pow(a, 2.0 - 2.0 * H) * sup_g_sq;
  return std::numbers::sqrt2 * consts.n_stab / a * std::sqrt(bracket);
}

double moment_bound_windowed(const ProblemConstants& consts, double horizon, double t_tilde,
                             double window_f_sq, double window_g_sq, double sup_f_sq,
                             double sup_g_sq) {
  consts.validate();
  if (!(t_tilde > horizon && horizon > 0.0)) throw DomainError("windowed bound needs t_tilde > T > 0");
  const double H = consts.h.value();
  const double a = consts.alpha;
  const double ch = big_c_h(consts.h) * std::pow(a, 2.0 - 2.0 * H);
  const double pre = 2.0 * consts.n_stab * consts.n_stab / (a * a);
  return pre * (window_f_sq + ch * window_g_sq) +
         pre * std::exp(-a * (t_tilde - horizon)) * (sup_f_sq + ch * sup_g_sq);
}

DissipativityCurve dissipativity_curve(const ProblemConstants& consts, double x_s_sq, double s,
                                       std::span<const double> times) {
  consts.validate();
  const double a = consts.alpha;
  const double n2 = consts.n_stab * consts.n_stab;
  const double c_tilde = compute_c_tilde(consts).closed_form;

  DissipativityCurve out;
  out.c3 = 6.0 * n2 * consts.c2 * (1.0 / a + c_tilde);
  out.c4 = 6.0 * n2 * consts.c1 * (1.0 / a + c_tilde);
  out.rate = a - out.c3;
  out.condition_lhs = consts.c2;
  out.condition_rhs = a / (consts.n_stab * std::sqrt(6.0 * (1.0 + a * c_tilde)));
  out.certified = consts.c2 <= out.condition_rhs && out.rate > 0.0;
  out.asymptote = out.c4 / out.rate;
  const double start = 3.0 * n2 * x_s_sq;
  out.values.reserve(times.size());
  for (double t : times) {
    if (t < s) throw DomainError("dissipativity curve is defined for t >= s");
    out.values.push_back(out.asymptote + std::exp(-out.rate * (t - s)) * (start - out.asymptote));
  }
  return out;
}

ConvergenceCurve convergence_curve(const ProblemConstants& consts, double delta0_sq, double s,
                                   std::span<const double> times) {
  consts.validate();
  const double a = consts.alpha;
  const double n2 = consts.n_stab * consts.n_stab;
  const double c_tilde = compute_c_tilde(consts).closed_form;
  ConvergenceCurve out;
  out.rate = a - 3.0 * n2 * consts.lip * consts.lip * (1.0 / a + c_tilde);
  out.certified = consts.lip < lipschitz_thresholds(consts).convergence;
  out.values.reserve(times.size());
  for (double t : times) {
    if (t < s) throw DomainError("convergence curve is defined for t >= s");
    out.values.push_back(3.0 * n2 * delta0_sq * std::exp(-out.rate * (t - s)));
  }
  return out;
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::MeanSquareNorm: return "mean-square-norm";
    case Statistic::MeanSquareDifference: return "mean-square-difference";
    case Statistic::MeanNorm: return "mean-norm";
  }
  return "unknown";
}

namespace {

// Type-7 sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

}  // namespace

EnsembleEstimate bootstrap_mean(const std::vector<std::vector<double>>& per_replica,
                                const BootstrapOptions& options) {
  if (per_replica.empty()) throw DomainError("bootstrap needs at least one replica");
  if (options.resamples < 2) throw DomainError("bootstrap needs at least two resamples");
  const std::size_t replicas = per_replica.size();
  const std::size_t points = per_replica.front().size();
  for (const auto& series : per_replica)
    if (series.size() != points) throw GridMismatch("replica series differ in length");

  EnsembleEstimate est;
  est.mean.assign(points, 0.0);
  for (const auto& series : per_replica)
    for (std::size_t j = 0; j < points; ++j) est.mean[j] += series[j];
  for (double& m : est.mean) m /= static_cast<double>(replicas);

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, replicas - 1);
  std::vector<std::vector<double>> means(points, std::vector<double>(options.resamples, 0.0));
  std::vector<double> acc(points);
  for (std::size_t b = 0; b < options.resamples; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < replicas; ++i) {
      const auto& series = per_replica[pick(rng)];
      for (std::size_t j = 0; j < points; ++j) acc[j] += series[j];
    }
    for (std::size_t j = 0; j < points; ++j) means[j][b] = acc[j] / static_cast<double>(replicas);
  }
  const double tail = (1.0 - options.level) / 2.0;
  est.ci_low.resize(points);
  est.ci_high.resize(points);
  for (std::size_t j = 0; j < points; ++j) {
    std::sort(means[j].begin(), means[j].end());
    est.ci_low[j] = quantile_sorted(means[j], tail);
    est.ci_high[j] = quantile_sorted(means[j], 1.0 - tail);
  }
  return est;
}

BoundReport verify_bound(const std::vector<std::vector<double>>& per_replica,
                         std::span<const double> times, std::span<const double> curve,
                         Statistic statistic, const BootstrapOptions& options) {
  if (times.size() != curve.size()) throw GridMismatch("bound curve and time grid differ in length");
  if (per_replica.empty() || per_replica.front().size() != times.size())
    throw GridMismatch("ensemble grid does not match the bound curve grid");
  const EnsembleEstimate est = bootstrap_mean(per_replica, options);

  BoundReport rep;
  rep.statistic = statistic;
  rep.times.assign(times.begin(), times.end());
  rep.empirical = est.mean;
  rep.ci_low = est.ci_low;
  rep.ci_high = est.ci_high;
  rep.theoretical.assign(curve.begin(), curve.end());
  rep.margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (rep.ci_low[j] > rep.theoretical[j]) ++rep.violations;
    rep.margin = std::min(rep.margin, rep.theoretical[j] - rep.empirical[j]);
  }
  return rep;
}

BoundReport verify_bound(const TrajectoryEnsemble& ensemble, std::span<const double> curve,
                         const BootstrapOptions& options) {
  const std::vector<double> times = grid_times(ensemble.grid());
  return verify_bound(squared_norms(ensemble), times, curve, Statistic::MeanSquareNorm, options);
}

BoundReport verify_bound(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b,
                         std::span<const double> curve, const BootstrapOptions& options) {
  const std::vector<double> times = grid_times(a.grid());
  return verify_bound(squared_differences(a, b), times, curve, Statistic::MeanSquareDifference, options);
}

DecayFit fit_log_decay(std::span<const double> times, std::span<const double> values, double level,
                       double floor) {
  if (times.size() != values.size()) throw GridMismatch("fit inputs differ in length");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (values[i] > floor && std::isfinite(values[i])) {
      xs.push_back(times[i]);
      ys.push_back(std::log(values[i]));
    }
  }
  DecayFit fit;
  fit.points = xs.size();
  if (xs.size() < 3) throw DomainError("decay fit needs at least three positive points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    sse += r * r;
  }
  const double se = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  fit.rate = -slope;
  fit.half_width = boost::math::quantile(dist, 0.5 + level / 2.0) * se;
  return fit;
}

std::vector<double> grid_times(const TimeGrid& grid) {
  std::vector<double> t(grid.n_steps + 1);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = grid.at(k);
  return t;
}

std::string bound_report_json(const BoundReport& report) {
  nlohmann::ordered_json j;
  j["statistic"] = to_string(report.statistic);
  j["times"] = report.times;
  j["empirical"] = report.empirical;
  nlohmann::ordered_json ci = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.ci_low.size(); ++i) ci.push_back({report.ci_low[i], report.ci_high[i]});
  j["ci"] = ci;
  j["theoretical"] = report.theoretical;
  j["violations"] = report.violations;
  j["margin"] = report.margin;
  return j.dump(2) + "\n";
}

void write_ensemble_summary_csv(std::ostream& out, std::span<const double> times,
                                const EnsembleEstimate& estimate) {
  out << "t,mean_sq_norm,ci_low,ci_high\r\n";
  for (std::size_t j = 0; j < times.size(); ++j) {
    out << format_real(times[j]) << ',' << format_real(estimate.mean[j]) << ','
        << format_real(estimate.ci_low[j]) << ',' << format_real(estimate.ci_high[j]) << "\r\n";
  }
}

}  // namespace fbmlab
