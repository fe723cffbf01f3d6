#include "fbmlab/fbm.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "fbmlab/errors.hpp"
#include "fbmlab/io.hpp"
#include "fbmlab/parallel.hpp"
#include "fbmlab/seeding.hpp"

namespace fbmlab {

HurstParameter::HurstParameter(double h) : h_(h) {
  if (!(h > 0.5 && h < 1.0)) {
    throw DomainError("Hurst parameter must lie in the open interval (0.5, 1); got " +
                      format_real(h));
  }
}

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step dt must be positive");
  if (n_steps < 1) throw DomainError("time grid needs at least one step");
  if (!std::isfinite(t0)) throw DomainError("grid origin must be finite");
}

double CovarianceOperatorSpec::trace() const noexcept {
  double s = 0.0;
  for (double v : eigenvalues) s += v;
  return s;
}

void CovarianceOperatorSpec::validate() const {
  if (eigenvalues.empty()) throw DomainError("covariance operator needs at least one mode");
  for (std::size_t n = 0; n < eigenvalues.size(); ++n) {
    if (!(eigenvalues[n] >= 0.0) || !std::isfinite(eigenvalues[n]))
      throw DomainError("covariance eigenvalue " + std::to_string(n + 1) + " must be >= 0");
    if (n > 0 && eigenvalues[n] > eigenvalues[n - 1])
      throw DomainError("covariance eigenvalues must be nonincreasing");
  }
}

CovarianceOperatorSpec CovarianceOperatorSpec::inverse_square(std::size_t modes) {
  CovarianceOperatorSpec q;
  q.eigenvalues.resize(modes);
  for (std::size_t n = 0; n < modes; ++n) {
    const double k = static_cast<double>(n + 1);
    q.eigenvalues[n] = 1.0 / (k * k);
  }
  return q;
}

double CovarianceOperatorSpec::inverse_square_tail(std::size_t modes) {
  // pi^2/6 - sum_{n<=M} n^-2
  double head = 0.0;
  for (std::size_t n = modes; n >= 1; --n) {
    const double k = static_cast<double>(n);
    head += 1.0 / (k * k);
  }
  return std::numbers::pi * std::numbers::pi / 6.0 - head;
}

std::vector<double> FgnPath::positions() const {
  std::vector<double> b(increments.size() + 1, 0.0);
  for (std::size_t k = 0; k < increments.size(); ++k) b[k + 1] = b[k] + increments[k];
  return b;
}

double fbm_covariance(HurstParameter h, double t, double s) {
  const double p = h.two_h();
  return 0.5 * (std::pow(std::abs(t), p) + std::pow(std::abs(s), p) - std::pow(std::abs(t - s), p));
}

double fgn_autocovariance(HurstParameter h, std::size_t lag, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  const double p = h.two_h();
  const double k = static_cast<double>(lag);
  const double below = lag == 0 ? 1.0 : std::pow(k - 1.0, p);
  const double unit = 0.5 * (std::pow(k + 1.0, p) - 2.0 * std::pow(k, p) + below);
  return std::pow(dt, p) * unit;
}

namespace {

// FFTW's planner is not reentrant; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

struct CirculantFgnSampler::Plan {
  explicit Plan(std::size_t m) : size(m) {
    FftwBuffer in(m), out(m);
    std::lock_guard lock(planner_mutex());
    handle = fftw_plan_dft_1d(static_cast<int>(m), in.data, out.data, FFTW_FORWARD, FFTW_ESTIMATE);
    if (handle == nullptr) throw Error("FFTW planning failed");
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(handle);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(handle, in, out); }

  std::size_t size;
  fftw_plan handle = nullptr;
};

CirculantFgnSampler::CirculantFgnSampler(HurstParameter h, std::size_t n_steps, double dt)
    : n_(n_steps) {
  TimeGrid{0.0, dt, n_steps}.validate();
  const std::size_t m = 2 * n_;
  plan_ = std::make_shared<Plan>(m);

  // First row of the circulant: gamma(0..n), then gamma(n-1..1).
  FftwBuffer row(m), eig(m);
  for (std::size_t j = 0; j <= n_; ++j) {
    row.data[j][0] = fgn_autocovariance(h, j, dt);
    row.data[j][1] = 0.0;
  }
  for (std::size_t j = 1; j < n_; ++j) {
    row.data[m - j][0] = row.data[j][0];
    row.data[m - j][1] = 0.0;
  }
  plan_->execute(row.data, eig.data);

  const double variance = fgn_autocovariance(h, 0, dt);
  sqrt_eigenvalues_.resize(m);
  min_eigenvalue_ = eig.data[0][0];
  for (std::size_t k = 0; k < m; ++k) {
    double lambda = eig.data[k][0];
    min_eigenvalue_ = std::min(min_eigenvalue_, lambda);
    if (lambda < 0.0) {
      if (lambda < -kClipTolerance * variance) {
        throw EmbeddingNotNonnegative("circulant embedding eigenvalue " + format_real(lambda) +
                                      " below tolerance; use the Cholesky sampler");
      }
      lambda = 0.0;
    }
    sqrt_eigenvalues_[k] = std::sqrt(lambda / static_cast<double>(m));
  }
}

std::vector<double> CirculantFgnSampler::sample(std::uint64_t seed) const {
  const std::size_t m = 2 * n_;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  FftwBuffer w(m), x(m);
  w.data[0][0] = sqrt_eigenvalues_[0] * normal(rng);
  w.data[0][1] = 0.0;
  w.data[n_][0] = sqrt_eigenvalues_[n_] * normal(rng);
  w.data[n_][1] = 0.0;
  for (std::size_t k = 1; k < n_; ++k) {
    const double a = sqrt_eigenvalues_[k] * std::numbers::sqrt2 / 2.0;
    const double re = a * normal(rng);
    const double im = a * normal(rng);
    w.data[k][0] = re;
    w.data[k][1] = im;
    w.data[m - k][0] = re;
    w.data[m - k][1] = -im;
  }
  plan_->execute(w.data, x.data);

  std::vector<double> out(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = x.data[j][0];
  return out;
}

CholeskyFbmSampler::CholeskyFbmSampler(HurstParameter h, std::size_t n_steps, double dt,
                                       std::size_t max_steps)
    : n_(n_steps) {
  TimeGrid{0.0, dt, n_steps}.validate();
  if (n_steps > max_steps) {
    throw DomainError("Cholesky sampler limited to " + std::to_string(max_steps) + " steps");
  }
  Eigen::MatrixXd cov(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = fbm_covariance(h, static_cast<double>(i + 1) * dt, static_cast<double>(j + 1) * dt);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw CovarianceNotPD("fBm covariance is numerically not positive definite at n_steps = " +
                          std::to_string(n_steps));
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  lower_.resize(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) lower_[i * n_ + j] = lower(i, j);
}

std::vector<double> CholeskyFbmSampler::sample(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n_);
  for (double& v : z) v = normal(rng);

  std::vector<double> inc(n_);
  double previous = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double* li = lower_.data() + i * n_;
    double b = 0.0;
    for (std::size_t j = 0; j <= i; ++j) b += li[j] * z[j];
    inc[i] = b - previous;
    previous = b;
  }
  return inc;
}

FgnPath generate_fgn_circulant(HurstParameter h, const TimeGrid& grid, std::uint64_t seed) {
  grid.validate();
  CirculantFgnSampler sampler(h, grid.n_steps, grid.dt);
  return FgnPath{sampler.sample(seed), grid, h, seed};
}

FgnPath generate_fbm_cholesky(HurstParameter h, const TimeGrid& grid, std::uint64_t seed,
                              std::size_t max_steps) {
  grid.validate();
  CholeskyFbmSampler sampler(h, grid.n_steps, grid.dt, max_steps);
  return FgnPath{sampler.sample(seed), grid, h, seed};
}

CylindricalFbmField generate_cylindrical_fbm(const CovarianceOperatorSpec& qspec, HurstParameter h,
                                             const TimeGrid& grid, std::uint64_t seed,
                                             const CirculantFgnSampler& sampler) {
  qspec.validate();
  grid.validate();
  if (sampler.n_steps() != grid.n_steps) throw GridMismatch("sampler length differs from grid");
  const std::size_t n = grid.n_steps;
  CylindricalFbmField field{std::vector<double>(qspec.size() * n, 0.0), qspec, h, grid, seed};
  for (std::size_t mode = 0; mode < qspec.size(); ++mode) {
    const double sigma = qspec.eigenvalues[mode];
    if (sigma == 0.0) continue;
    const double scale = std::sqrt(sigma);
    const std::vector<double> row = sampler.sample(mode_seed(seed, mode));
    for (std::size_t k = 0; k < n; ++k) field.mode_increments[mode * n + k] = scale * row[k];
  }
  return field;
}

CylindricalFbmField generate_cylindrical_fbm(const CovarianceOperatorSpec& qspec, HurstParameter h,
                                             const TimeGrid& grid, std::uint64_t seed) {
  grid.validate();
  CirculantFgnSampler sampler(h, grid.n_steps, grid.dt);
  return generate_cylindrical_fbm(qspec, h, grid, seed, sampler);
}

std::vector<LagCheck> fgn_autocovariance_selftest(HurstParameter h, std::size_t n_steps, double dt,
                                                  std::size_t replicas, std::uint64_t seed,
                                                  std::size_t max_lag, double sigmas) {
  if (replicas < 2) throw DomainError("self-test needs at least two replicas");
  if (n_steps == 0) throw DomainError("self-test needs at least one step");
  const std::size_t lags = std::min(max_lag, n_steps - 1) + 1;
  const CirculantFgnSampler sampler(h, n_steps, dt);
  std::vector<double> per(replicas * lags);
  parallel_for(replicas, [&](std::size_t r) {
    const std::vector<double> x = sampler.sample(labeled_seed(seed, "replica:" + std::to_string(r)));
    for (std::size_t k = 0; k < lags; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i + k < n_steps; ++i) s += x[i] * x[i + k];
      per[r * lags + k] = s / static_cast<double>(n_steps - k);
    }
  });
  std::vector<LagCheck> out;
  const double nr = static_cast<double>(replicas);
  for (std::size_t k = 0; k < lags; ++k) {
    double mean = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) mean += per[r * lags + k];
    mean /= nr;
    double ss = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) ss += (per[r * lags + k] - mean) * (per[r * lags + k] - mean);
    const double se = std::sqrt(ss / (nr - 1.0) / nr);
    const double expected = fgn_autocovariance(h, k, dt);
    out.push_back({k, expected, mean, se, std::abs(mean - expected) <= sigmas * se});
  }
  return out;
}

void write_fgn_csv(std::ostream& out, const FgnPath& path) {
  out << "t,increment\r\n";
  for (std::size_t k = 0; k < path.increments.size(); ++k) {
    out << format_real(path.grid.at(k)) << ',' << format_real(path.increments[k]) << "\r\n";
  }
}

}  // namespace fbmlab
