#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fbmlab/bounds.hpp"
#include "fbmlab/errors.hpp"
#include "fbmlab/volterra.hpp"
#include "support.hpp"

using namespace fbmlab;

namespace {

const double kPi2 = M_PI * M_PI;

ProblemConstants heat(double lip = 2.0 / 3.0) {
  ProblemConstants c;
  c.n_stab = 1.0;
  c.alpha = kPi2;
  c.lip = lip;
  c.m0 = 1.0;
  c.c1 = 1.0;
  c.c2 = 1.0;
  c.h = HurstParameter(0.75);
  c.qspec = CovarianceOperatorSpec{{1.0}};
  return c;
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("C^ and C~ against independent quadrature") {
  std::size_t seen = 0;
  for (const auto& r : testing::load_golden("volterra_golden.csv")) {
    if (r.op != "c_hat_integral" && r.op != "c_tilde_integral") continue;
    ProblemConstants c;
    c.alpha = r.a;
    c.h = HurstParameter(r.h);
    c.qspec = CovarianceOperatorSpec{{r.b}};
    const auto v = r.op == "c_hat_integral" ? compute_c_hat(c) : compute_c_tilde(c);
    INFO(r.op << " h=" << r.h << " alpha=" << r.a);
    CHECK(testing::rel_err(v.closed_form, r.value) < r.tolerance);
    CHECK(testing::rel_err(v.quadrature, r.value) < 1e-8);
    CHECK(v.relative_gap() < 1e-8);
    ++seen;
  }
  CHECK(seen == 7);
}

TEST_CASE("closed forms agree with quadrature across a grid") {
  for (double hv : {0.55, 0.65, 0.75, 0.85, 0.95})
    for (double a : {0.5, 30.0}) {
      ProblemConstants c;
      c.alpha = a;
      c.h = HurstParameter(hv);
      c.qspec = CovarianceOperatorSpec{{1.0, 0.3}};
      CHECK(compute_c_hat(c).relative_gap() < 1e-8);
      CHECK(compute_c_tilde(c).relative_gap() < 1e-8);
    }
}

TEST_CASE("C^ scaling and degenerate noise") {
  auto c = heat();
  c.qspec = CovarianceOperatorSpec{{0.0}};
  CHECK(compute_c_hat(c).closed_form == 0.0);
  CHECK(compute_c_tilde(c).closed_form == 0.0);
  c = heat();
  const double base = compute_c_hat(c).closed_form;
  c.alpha *= 2.0;
  CHECK(compute_c_hat(c).closed_form == doctest::Approx(base * std::pow(2.0, -1.5)).epsilon(1e-13));
  c = heat();
  CHECK(compute_c_tilde(c).closed_form == doctest::Approx(0.0602).epsilon(1e-3));
}

TEST_CASE("stationary variance exceeds C_H / alpha^{2H}") {
  for (const auto& r : testing::load_golden("volterra_golden.csv")) {
    if (r.op != "stationary_variance") continue;
    ProblemConstants c;
    c.alpha = r.a;
    c.h = HurstParameter(r.h);
    c.qspec = CovarianceOperatorSpec{{r.b}};
    CHECK(testing::rel_err(stationary_convolution_variance(c), r.value) < r.tolerance);
    CHECK(r.value > big_c_h(c.h) * std::pow(r.a, -2.0 * r.h));
  }
}

TEST_CASE("theta_1") {
  CHECK(compute_theta1(heat(0.0)) == 0.0);
  CHECK(compute_theta1(heat()) == doctest::Approx(0.014104628880621508).epsilon(1e-12));
  CHECK(compute_theta1(heat(4.0 / 3.0)) == doctest::Approx(4.0 * compute_theta1(heat())).epsilon(1e-14));
}

TEST_CASE("Lipschitz thresholds") {
  const auto t = lipschitz_thresholds(heat());
  CHECK(t.existence == doctest::Approx(5.6134248021073191).epsilon(1e-12));
  CHECK(t.compatibility == doctest::Approx(2.8067124010536595).epsilon(1e-12));
  CHECK(t.convergence == doctest::Approx(2.8067124010536595).epsilon(1e-12));
  CHECK(t.convergence > 2.0 / 3.0);
  auto c = heat();
  c.n_stab = 1e12;
  CHECK(lipschitz_thresholds(c).existence < 1e-11);
}

TEST_CASE("invariant-ball radius") {
  auto c = heat();
  CHECK(radius_R(c) == doctest::Approx(0.20215259622975704).epsilon(1e-12));
  double prev = radius_R(c);
  for (double m0 : {2.0, 5.0}) {
    c.m0 = m0;
    CHECK(radius_R(c) > prev);
    prev = radius_R(c);
  }
  c.m0 = 0.0;
  CHECK(radius_R(c) == 0.0);
  CHECK_THROWS_AS(radius_R(heat(6.0)), ThresholdViolated);
}

TEST_CASE("constants validation") {
  auto c = heat();
  c.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = heat();
  c.n_stab = 0.5;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = heat();
  c.lip = -1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("linear moment bound") {
  const auto c = heat();
  CHECK(moment_bound_linear(c, 0.0, 0.0) == 0.0);
  CHECK(moment_bound_linear(c, 1.0, 0.0) == doctest::Approx(std::sqrt(2.0) / kPi2).epsilon(1e-14));
  CHECK(moment_bound_linear(c, 1.0, 1.0) == doctest::Approx(0.18091085239985610).epsilon(1e-12));
}

TEST_CASE("windowed bound tends to the window term") {
  const auto c = heat();
  const double far = moment_bound_windowed(c, 1.0, 1e3, 0.5, 0.2, 4.0, 3.0);
  const double near = moment_bound_windowed(c, 1.0, 1.5, 0.5, 0.2, 4.0, 3.0);
  const double window_only = moment_bound_windowed(c, 1.0, 1e3, 0.5, 0.2, 0.0, 0.0);
  CHECK(far == doctest::Approx(window_only).epsilon(1e-14));
  CHECK(near > far);
  CHECK_THROWS_AS(moment_bound_windowed(c, 1.0, 1.0, 0, 0, 0, 0), DomainError);
}

TEST_CASE("dissipativity curve") {
  const auto c = heat();
  const std::vector<double> ts{0.5, 1.0, 2.0, 10.0};
  const auto d = dissipativity_curve(c, 2.0, 0.5, ts);
  CHECK(d.values[0] == doctest::Approx(3.0 * 2.0).epsilon(1e-14));
  CHECK(d.c3 == doctest::Approx(0.96905904588248178).epsilon(1e-12));
  CHECK(d.asymptote == doctest::Approx(0.10887636736950910).epsilon(1e-12));
  CHECK(d.condition_rhs == doctest::Approx(3.1913523237044070).epsilon(1e-12));
  CHECK(d.certified);
  for (std::size_t i = 1; i < ts.size(); ++i) CHECK(d.values[i] < d.values[i - 1]);
  CHECK(d.values.back() == doctest::Approx(d.asymptote).epsilon(1e-12));
  // starting at the balance point keeps the curve flat
  const auto flat = dissipativity_curve(c, d.asymptote / 3.0, 0.5, ts);
  for (double v : flat.values) CHECK(v == doctest::Approx(d.asymptote).epsilon(1e-13));
  CHECK_THROWS_AS(dissipativity_curve(c, 1.0, 1.0, ts), DomainError);
}

TEST_CASE("convergence curve") {
  const std::vector<double> ts{0.0, 0.1, 0.5};
  const auto z = convergence_curve(heat(), 0.0, 0.0, ts);
  for (double v : z.values) CHECK(v == 0.0);
  const auto k = convergence_curve(heat(), 0.25, 0.0, ts);
  CHECK(k.rate == doctest::Approx(9.6542579464488071).epsilon(1e-12));
  CHECK(k.values[0] == doctest::Approx(0.75));
  CHECK(k.values[2] == doctest::Approx(0.75 * std::exp(-k.rate * 0.5)).epsilon(1e-14));
  CHECK(k.certified);
  CHECK_FALSE(convergence_curve(heat(3.0), 0.25, 0.0, ts).certified);
}

TEST_CASE("bootstrap band") {
  std::vector<std::vector<double>> reps;
  for (int i = 0; i < 50; ++i) reps.push_back({static_cast<double>(i), 1.0});
  const auto e = bootstrap_mean(reps);
  CHECK(e.mean[0] == doctest::Approx(24.5));
  CHECK(e.ci_low[0] < 24.5);
  CHECK(e.ci_high[0] > 24.5);
  CHECK(e.ci_low[1] == 1.0);
  CHECK(e.ci_high[1] == 1.0);
  const auto again = bootstrap_mean(reps);
  CHECK(again.ci_low == e.ci_low);
  reps.push_back({1.0});
  CHECK_THROWS_AS(bootstrap_mean(reps), GridMismatch);
}

TEST_CASE("verify_bound counts CI-above-curve points only") {
  const std::vector<double> ts{0.0, 1.0, 2.0};
  std::vector<std::vector<double>> zero(10, std::vector<double>(3, 0.0));
  const std::vector<double> curve{1.0, 1.0, 1.0};
  const auto r0 = verify_bound(zero, ts, curve, Statistic::MeanSquareNorm);
  CHECK(r0.violations == 0);
  CHECK(r0.margin == 1.0);
  std::vector<std::vector<double>> big(10, std::vector<double>{0.5, 2.0, 0.5});
  const auto r1 = verify_bound(big, ts, curve, Statistic::MeanSquareNorm);
  CHECK(r1.violations == 1);
  CHECK(r1.margin == -1.0);
  const std::vector<double> shortc{1.0};
  CHECK_THROWS_AS(verify_bound(zero, ts, shortc, Statistic::MeanSquareNorm), GridMismatch);

  const auto j = nlohmann::json::parse(bound_report_json(r1));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(j["statistic"] == "mean-square-norm");
  CHECK(j["ci"].size() == 3);
  CHECK(j["violations"] == 1);
  CHECK(j.contains("theoretical"));
  CHECK(j.contains("margin"));
}

TEST_CASE("log-decay fit") {
  std::vector<double> ts, ys;
  for (int i = 0; i < 20; ++i) {
    ts.push_back(0.1 * i);
    ys.push_back(3.0 * std::exp(-2.5 * 0.1 * i));
  }
  const auto f = fit_log_decay(ts, ys);
  CHECK(f.rate == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(f.half_width < 1e-8);
  CHECK(f.points == 20);
  ys[3] = 0.0;
  CHECK(fit_log_decay(ts, ys).points == 19);
  CHECK_THROWS_AS(fit_log_decay(std::vector<double>{0, 1}, std::vector<double>{1, 1}), DomainError);
}

TEST_CASE("ensemble summary csv") {
  EnsembleEstimate e{{1.0, 0.5}, {0.75, 0.25}, {1.25, 0.75}};
  std::ostringstream os;
  write_ensemble_summary_csv(os, std::vector<double>{0.0, 0.5}, e);
  CHECK(os.str().rfind("t,mean_sq_norm,ci_low,ci_high\r\n", 0) == 0);
  CHECK(os.str().find("0.5,0.5,0.25,0.75\r\n") != std::string::npos);
}

}  // TEST_SUITE
