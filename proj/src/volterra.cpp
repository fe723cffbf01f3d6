#include "fbmlab/volterra.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <string>

#include "fbmlab/errors.hpp"
#include "fbmlab/io.hpp"

namespace fbmlab {

namespace {

constexpr double kQuadTolerance = 1e-13;

double gk_integrate(auto&& f, double a, double b) {
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, kQuadTolerance,
                                                                      &error);
}

// Covariance of the increments of beta^H over [a, b] and [c, d].
double increment_covariance(double a, double b, double c, double d, double p) {
  return 0.5 * (std::pow(std::abs(b - c), p) + std::pow(std::abs(a - d), p) -
                std::pow(std::abs(a - c), p) - std::pow(std::abs(b - d), p));
}

}  // namespace

void StepFunction::validate() const {
  if (breakpoints.size() < 2) throw DomainError("step function needs at least two breakpoints");
  if (values.size() + 1 != breakpoints.size())
    throw DomainError("step function needs one value per piece");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1]))
      throw DomainError("step function breakpoints must be strictly increasing");
  }
}

StepFunction StepFunction::indicator(double a, double b, double value) {
  StepFunction phi{{a, b}, {value}};
  phi.validate();
  return phi;
}

double c_h(HurstParameter h) {
  const double H = h.value();
  const double log_beta = std::lgamma(2.0 - 2.0 * H) + std::lgamma(H - 0.5) - std::lgamma(1.5 - H);
  return std::sqrt(H * (2.0 * H - 1.0) * std::exp(-log_beta));
}

double big_c_h(HurstParameter h) {
  const double e = 2.0 * h.value() - 1.0;
  return c_h(h) * std::pow(e, e);
}

KernelConstants kernel_constants(HurstParameter h) { return {c_h(h), big_c_h(h), h}; }

double kernel_K(HurstParameter h, double t, double s) {
  if (!(s > 0.0) || s > t) {
    throw DomainError("kernel_K requires 0 < s <= t; got t=" + format_real(t) + ", s=" + format_real(s));
  }
  if (t == s) return 0.0;
  // With w = (u-s)^a, a = H - 1/2: (u-s)^(H-3/2) du = dw / a.
  const double a = h.value() - 0.5;
  const double inv_a = 1.0 / a;
  const double upper = std::pow(t - s, a);
  auto integrand = [&](double w) { return std::pow(s + std::pow(w, inv_a), a); };
  const double integral = gk_integrate(integrand, 0.0, upper) / a;
  return c_h(h) * std::pow(s, -a) * integral;
}

double kernel_dKdt(HurstParameter h, double t, double s) {
  if (!(s > 0.0) || !(t > s)) {
    throw DomainError("dK/dt requires 0 < s < t; got t=" + format_real(t) + ", s=" + format_real(s));
  }
  const double H = h.value();
  return c_h(h) * std::pow(t / s, H - 0.5) * std::pow(t - s, H - 1.5);
}

std::vector<double> apply_KH_star(const StepFunction& phi, HurstParameter h, double horizon,
                                  std::span<const double> points) {
  phi.validate();
  const double H = h.value();
  const double ch = c_h(h);
  boost::math::quadrature::tanh_sinh<double> tanh_sinh;

  std::vector<double> out(points.size(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double s = points[p];
    if (!(s > 0.0)) throw DomainError("K_H^* is evaluated at s > 0 only; got " + format_real(s));
    double acc = 0.0;
    for (std::size_t i = 0; i < phi.pieces(); ++i) {
      const double lo = std::max(phi.breakpoints[i], s);
      const double hi = std::min(phi.breakpoints[i + 1], horizon);
      if (!(hi > lo) || phi.values[i] == 0.0) continue;
      // xc is the signed distance to the nearer endpoint; it keeps t - s
      // accurate next to the pole at t = s.
      auto integrand = [&](double t, double xc) {
        const double gap = (lo == s && xc < 0.0) ? -xc : t - s;
        return ch * std::pow(t / s, H - 0.5) * std::pow(gap, H - 1.5);
      };
      acc += phi.values[i] * tanh_sinh.integrate(integrand, lo, hi, 1e-14);
    }
    out[p] = acc;
  }
  return out;
}

std::vector<double> apply_KH_star(const StepFunction& phi, HurstParameter h, double horizon,
                                  const TimeGrid& out_grid) {
  out_grid.validate();
  std::vector<double> nodes;
  for (std::size_t k = 1; k < out_grid.n_steps; ++k) nodes.push_back(out_grid.at(k));
  return apply_KH_star(phi, h, horizon, nodes);
}

double wiener_integral_step(const StepFunction& phi, const FgnPath& path) {
  phi.validate();
  const TimeGrid& grid = path.grid;
  const std::vector<double> b = path.positions();
  auto node_of = [&](double t) {
    const double x = (t - grid.t0) / grid.dt;
    const double k = std::round(x);
    if (k < 0.0 || k > static_cast<double>(grid.n_steps) || std::abs(x - k) > 0.5 + 1e-12) {
      throw GridMismatch("step-function breakpoint " + format_real(t) + " is off the path grid");
    }
    return static_cast<std::size_t>(k);
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < phi.pieces(); ++i) {
    sum += phi.values[i] * (b[node_of(phi.breakpoints[i + 1])] - b[node_of(phi.breakpoints[i])]);
  }
  return sum;
}

double isometry_second_moment(const StepFunction& phi, HurstParameter h) {
  phi.validate();
  const double p = h.two_h();
  double sum = 0.0;
  for (std::size_t i = 0; i < phi.pieces(); ++i) {
    for (std::size_t j = 0; j < phi.pieces(); ++j) {
      sum += phi.values[i] * phi.values[j] *
             increment_covariance(phi.breakpoints[i], phi.breakpoints[i + 1], phi.breakpoints[j],
                                  phi.breakpoints[j + 1], p);
    }
  }
  return sum;
}

double l_inv_h_norm(const StepFunction& phi, HurstParameter h) {
  phi.validate();
  const double q = 1.0 / h.value();
  double sum = 0.0;
  for (std::size_t i = 0; i < phi.pieces(); ++i) {
    sum += std::pow(std::abs(phi.values[i]), q) * (phi.breakpoints[i + 1] - phi.breakpoints[i]);
  }
  return std::pow(sum, h.value());
}

Lemma24Result lemma24_check(const StepFunction& phi, HurstParameter h) {
  StepFunction abs_phi = phi;
  for (double& v : abs_phi.values) v = std::abs(v);
  const double lhs = isometry_second_moment(abs_phi, h);
  const double norm = l_inv_h_norm(phi, h);
  const double rhs = c_h(h) * norm * norm;
  const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
  return {lhs, rhs, ratio, lhs <= rhs * (1.0 + 1e-9)};
}

}  // namespace fbmlab
