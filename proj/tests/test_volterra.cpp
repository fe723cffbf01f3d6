#include <doctest.h>

#include <cmath>

#include "fbmlab/errors.hpp"
#include "fbmlab/seeding.hpp"
#include "fbmlab/volterra.hpp"
#include "support.hpp"

using namespace fbmlab;

TEST_SUITE("volterra") {

TEST_CASE("golden kernel values") {
  const auto rows = testing::load_golden("volterra_golden.csv");
  REQUIRE(rows.size() > 20);
  std::size_t used = 0;
  for (const auto& r : rows) {
    const HurstParameter h(r.h);
    double got = 0.0;
    if (r.op == "c_h") got = c_h(h);
    else if (r.op == "big_c_h") got = big_c_h(h);
    else if (r.op == "kernel_K") got = kernel_K(h, r.a, r.b);
    else if (r.op == "kernel_dKdt") got = kernel_dKdt(h, r.a, r.b);
    else if (r.op == "kstar_indicator") {
      const double s = r.b;
      got = apply_KH_star(StepFunction::indicator(0.0, r.a), h, r.a, std::span<const double>(&s, 1))[0];
    } else if (r.op == "fbm_covariance") got = fbm_covariance(h, r.a, r.b);
    else continue;
    ++used;
    INFO(r.op << " h=" << r.h << " a=" << r.a << " b=" << r.b);
    CHECK(testing::rel_err(got, r.value) < r.tolerance);
  }
  CHECK(used >= 17);
}

TEST_CASE("golden second moments of step functions") {
  const auto rows = testing::load_golden("volterra_golden.csv");
  std::vector<StepFunction> phis{{{0, 1, 3}, {1, 2}}, {{0.5, 0.7, 1.0, 2.5}, {-1, 3, 0.5}}};
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.op != "step_second_moment") continue;
    CHECK(testing::rel_err(isometry_second_moment(phis.at(i), HurstParameter(r.h)), r.value) < r.tolerance);
    ++i;
  }
  CHECK(i == 2);
}

TEST_CASE("kernel constants") {
  const auto k = kernel_constants(HurstParameter(0.75));
  CHECK(k.c_h == doctest::Approx(0.2674).epsilon(1e-3));
  CHECK(k.big_c_h == doctest::Approx(k.c_h * std::pow(0.5, 0.5)).epsilon(1e-14));
  CHECK(c_h(HurstParameter(0.5 + 1e-10)) < 1e-4);
}

TEST_CASE("kernel K basic properties") {
  const HurstParameter h(0.75);
  CHECK(kernel_K(h, 0.5, 0.5) == 0.0);
  CHECK(kernel_K(h, 2.0, 0.5) >= kernel_K(h, 1.0, 0.5));
  CHECK_THROWS_AS(kernel_K(h, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(kernel_K(h, 1.0, 2.0), DomainError);
  CHECK_THROWS_AS(kernel_dKdt(h, 1.0, 1.0), DomainError);
}

TEST_CASE("K* of an indicator reproduces the kernel") {
  for (double hv : {0.6, 0.75, 0.9}) {
    const HurstParameter h(hv);
    for (double t : {0.3, 1.0, 2.7}) {
      std::vector<double> ss;
      for (int i = 1; i <= 5; ++i) ss.push_back(t * i / 6.0);
      const auto v = apply_KH_star(StepFunction::indicator(0.0, t), h, t, ss);
      for (std::size_t i = 0; i < ss.size(); ++i) CHECK(testing::rel_err(v[i], kernel_K(h, t, ss[i])) < 1e-6);
      // beyond t the indicator contributes nothing
      const double past = t * 1.2;
      CHECK(apply_KH_star(StepFunction::indicator(0.0, t), h, 2 * t, std::span<const double>(&past, 1))[0] == 0.0);
    }
  }
}

TEST_CASE("K* grid variant rejects the origin") {
  const HurstParameter h(0.75);
  const auto v = apply_KH_star(StepFunction::indicator(0.0, 1.0), h, 1.0, TimeGrid{0.0, 0.25, 4});
  CHECK(v.size() == 3);
  CHECK(testing::rel_err(v[1], kernel_K(h, 1.0, 0.5)) < 1e-6);
}

TEST_CASE("step function validation") {
  CHECK_THROWS_AS((StepFunction{{0.0}, {}}.validate()), DomainError);
  CHECK_THROWS_AS((StepFunction{{0.0, 0.0}, {1.0}}.validate()), DomainError);
  CHECK_THROWS_AS((StepFunction{{0.0, 1.0, 2.0}, {1.0}}.validate()), DomainError);
  CHECK_NOTHROW((StepFunction{{0.0, 1.0, 2.0}, {1.0, 3.0}}.validate()));
}

TEST_CASE("Wiener integral of a step function is the weighted increment sum") {
  const HurstParameter h(0.75);
  const FgnPath p = generate_fgn_circulant(h, {0.0, 0.25, 8}, 3);
  const auto pos = p.positions();
  const StepFunction phi{{0.0, 0.5, 1.5}, {2.0, -1.0}};
  CHECK(wiener_integral_step(phi, p) == doctest::Approx(2.0 * pos[2] - (pos[6] - pos[2])));
  CHECK_THROWS_AS(wiener_integral_step(StepFunction::indicator(0.0, 5.0), p), GridMismatch);
}

TEST_CASE("Wiener integral second moment matches the isometry") {
  const HurstParameter h(0.75);
  const TimeGrid g{0.0, 0.25, 12};
  const StepFunction phi{{0.0, 1.0, 3.0}, {1.0, 2.0}};
  const CirculantFgnSampler s(h, g.n_steps, g.dt);
  std::vector<double> vals;
  for (std::size_t r = 0; r < 20000; ++r) {
    const FgnPath p{s.sample(labeled_seed(8, "replica:" + std::to_string(r))), g, h, 0};
    vals.push_back(wiener_integral_step(phi, p));
  }
  double m2 = 0.0;
  for (double v : vals) m2 += v * v;
  m2 /= static_cast<double>(vals.size());
  const double want = isometry_second_moment(phi, h);
  CHECK(std::abs(m2 - want) < 4.0 * want * std::sqrt(2.0 / 20000.0));
}

TEST_CASE("L^{1/H} norm of a step function") {
  const HurstParameter h(0.75);
  const StepFunction phi{{0.0, 1.0, 3.0}, {1.0, -2.0}};
  CHECK(l_inv_h_norm(phi, h) == doctest::Approx(std::pow(1.0 + 2.0 * std::pow(2.0, 4.0 / 3.0), 0.75)));
}

TEST_CASE("the L^{1/H} inequality with constant c_H fails for a constant") {
  // For phi = 1 on [0, 1) the left side is Var B(1) = 1, the right side c_H.
  for (double hv : {0.6, 0.75, 0.9}) {
    const HurstParameter h(hv);
    const auto r = lemma24_check(StepFunction::indicator(0.0, 1.0), h);
    CHECK(r.lhs == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.rhs == doctest::Approx(c_h(h)).epsilon(1e-12));
    CHECK(r.ratio == doctest::Approx(1.0 / c_h(h)).epsilon(1e-10));
    CHECK_FALSE(r.holds);
  }
}

}  // TEST_SUITE
