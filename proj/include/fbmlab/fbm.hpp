#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace fbmlab {

/// Hurst index restricted to (1/2, 1). Construction outside the open interval
/// throws DomainError.
class HurstParameter {
 public:
  explicit HurstParameter(double h);
  double value() const noexcept { return h_; }
  /// 2H, the exponent of the fBm variance.
  double two_h() const noexcept { return 2.0 * h_; }

 private:
  double h_;
};

/// Uniform grid t_k = t0 + k*dt, k = 0..n_steps.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t n_steps = 1;

  double at(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * dt; }
  double t_end() const noexcept { return at(n_steps); }
  /// Throws DomainError unless dt > 0 and n_steps >= 1.
  void validate() const;
};

/// Eigenvalues of the diagonal covariance operator Q, truncated to M modes.
struct CovarianceOperatorSpec {
  std::vector<double> eigenvalues;

  std::size_t size() const noexcept { return eigenvalues.size(); }
  double trace() const noexcept;
  /// Throws DomainError on negative or increasing entries, or an empty list.
  void validate() const;
  /// sigma_n = n^-2, n = 1..modes.
  static CovarianceOperatorSpec inverse_square(std::size_t modes = 16);
  /// Tail sum_{n > M} n^-2 dropped by truncating the inverse-square family.
  static double inverse_square_tail(std::size_t modes);
};

/// Increments of one fBm path on a grid; the path starts at 0.
struct FgnPath {
  std::vector<double> increments;
  TimeGrid grid;
  HurstParameter h;
  std::uint64_t seed = 0;

  /// Positions B(t_0) = 0, B(t_1), ..., B(t_n); length n_steps + 1.
  std::vector<double> positions() const;
};

/// M independent fGn rows, row n scaled by sqrt(sigma_n). Stored row-major.
struct CylindricalFbmField {
  std::vector<double> mode_increments;
  CovarianceOperatorSpec qspec;
  HurstParameter h;
  TimeGrid grid;
  std::uint64_t seed = 0;

  std::size_t modes() const noexcept { return qspec.size(); }
  std::span<const double> row(std::size_t mode) const {
    return {mode_increments.data() + mode * grid.n_steps, grid.n_steps};
  }
  double increment(std::size_t mode, std::size_t step) const {
    return mode_increments[mode * grid.n_steps + step];
  }
};

/// R_H(t, s) = (|t|^{2H} + |s|^{2H} - |t - s|^{2H}) / 2.
double fbm_covariance(HurstParameter h, double t, double s);

/// Autocovariance of unit-lag increments on a grid of spacing dt.
double fgn_autocovariance(HurstParameter h, std::size_t lag, double dt);

/// Exact fGn sampler by circulant embedding of the Toeplitz autocovariance.
///
/// The embedding eigenvalues are computed once at construction; each call to
/// sample() costs one complex FFT of length 2n. Eigenvalues in [-1e-10, 0)
/// (relative to the variance) are clipped to zero, larger negatives throw
/// EmbeddingNotNonnegative.
class CirculantFgnSampler {
 public:
  CirculantFgnSampler(HurstParameter h, std::size_t n_steps, double dt);

  std::size_t n_steps() const noexcept { return n_; }
  std::vector<double> sample(std::uint64_t seed) const;
  /// Smallest raw (pre-clipping) embedding eigenvalue, for diagnostics.
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

  static constexpr double kClipTolerance = 1e-10;

 private:
  struct Plan;
  std::size_t n_;
  std::vector<double> sqrt_eigenvalues_;
  double min_eigenvalue_;
  std::shared_ptr<Plan> plan_;
};

/// Reference fBm sampler from the Cholesky factor of the position covariance.
/// Cost is cubic in n_steps, which is capped (default 2048).
class CholeskyFbmSampler {
 public:
  CholeskyFbmSampler(HurstParameter h, std::size_t n_steps, double dt,
                     std::size_t max_steps = kDefaultMaxSteps);

  std::size_t n_steps() const noexcept { return n_; }
  /// Increments of one path.
  std::vector<double> sample(std::uint64_t seed) const;

  static constexpr std::size_t kDefaultMaxSteps = 2048;

 private:
  std::size_t n_;
  std::vector<double> lower_;  // row-major n x n Cholesky factor
};

FgnPath generate_fgn_circulant(HurstParameter h, const TimeGrid& grid, std::uint64_t seed);

FgnPath generate_fbm_cholesky(HurstParameter h, const TimeGrid& grid, std::uint64_t seed,
                              std::size_t max_steps = CholeskyFbmSampler::kDefaultMaxSteps);

/// Row n uses the substream mode_seed(seed, n); rows with sigma_n = 0 are zero.
CylindricalFbmField generate_cylindrical_fbm(const CovarianceOperatorSpec& qspec, HurstParameter h,
                                             const TimeGrid& grid, std::uint64_t seed);

/// Same as above with a prebuilt sampler (must match grid.n_steps).
CylindricalFbmField generate_cylindrical_fbm(const CovarianceOperatorSpec& qspec, HurstParameter h,
                                             const TimeGrid& grid, std::uint64_t seed,
                                             const CirculantFgnSampler& sampler);

struct LagCheck {
  std::size_t lag;
  double expected;
  double mean;            // replica mean of the per-path sample autocovariance
  double standard_error;  // replica standard deviation / sqrt(replicas)
  bool pass;              // |mean - expected| <= sigmas * standard_error
};

/// Monte-Carlo check of circulant fGn paths (replica r seeded by
/// labeled_seed(seed, "replica:<r>")) against the closed-form
/// autocovariance at lags 0..max_lag.
std::vector<LagCheck> fgn_autocovariance_selftest(HurstParameter h, std::size_t n_steps, double dt,
                                                  std::size_t replicas, std::uint64_t seed,
                                                  std::size_t max_lag = 10, double sigmas = 4.0);

/// CSV with header `t,increment`; t is the left end of each step.
void write_fgn_csv(std::ostream& out, const FgnPath& path);

}  // namespace fbmlab
