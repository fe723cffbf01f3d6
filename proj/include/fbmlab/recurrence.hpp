#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fbmlab/fbm.hpp"
#include "fbmlab/galerkin.hpp"

namespace fbmlab {

/// Scalar summary of a path sampled on a grid; one value per node.
struct SampledPath {
  TimeGrid grid;
  std::vector<double> values;

  void validate() const;
};

/// Uniformly weighted samples of a real random variable.
struct EmpiricalMeasure {
  std::vector<double> samples;
};

struct SearchRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct AlmostPeriodSet {
  double epsilon = 0.0;
  std::vector<double> taus;
  SearchRange search_range;
  /// Largest distance between consecutive accepted shifts; infinity when
  /// fewer than two shifts were accepted.
  double max_gap = 0.0;
};

/// d(p1, p2) = sup_{T>0} min(max_{|t|<=T} |p1(t) - p2(t)|, 1/T) over the
/// symmetric part of the window around t = 0. Exact for node-sampled paths:
/// on [T_k, T_{k+1}) the window maximum is constant, so the supremum is
/// attained at a node half-width (or as T -> 0+).
double bebutov_distance(const SampledPath& p1, const SampledPath& p2);

/// Shifts tau from tau_grid with max_t |p(t + tau) - p(t)| < epsilon over the
/// overlap of the window with its shift.
AlmostPeriodSet epsilon_almost_periods(const SampledPath& p, double epsilon,
                                       std::span<const double> tau_grid);

struct BlDistance {
  double value = 0.0;
  /// True when the pooled support exceeded the exact cutoff and the W1
  /// upper bound was returned instead.
  bool upper_bound = false;
};

/// Dudley bounded-Lipschitz distance sup{|int f dmu - int f dnu| :
/// Lip(f) + |f|_inf <= 1} between two 1-D empirical measures.
///
/// For a fixed split s = |f|_inf, L = 1 - s the inner problem is a chain LP
/// over f at the sorted pooled support, solved exactly by a concave
/// piecewise-linear dynamic program; the outer value is concave in s and
/// maximized by golden-section search.
BlDistance bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       std::size_t exact_cutoff = 400);

/// W1 distance between two 1-D empirical measures.
double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

enum class Summary { Norm, Mode1 };
std::string to_string(Summary s);

/// Per grid time, the empirical law of the summary across replicas.
std::vector<EmpiricalMeasure> distribution_profile(const TrajectoryEnsemble& ensemble, Summary summary);

/// Node-wise mean of the summary across replicas.
SampledPath mean_profile(const TrajectoryEnsemble& ensemble, Summary summary);

struct CompatibilityOptions {
  Summary summary = Summary::Norm;
  /// Independent pairs of unshifted ensembles used to calibrate the noise floor.
  std::size_t noise_floor_pairs = 8;
  /// Noise-floor standard deviations separating "at floor" from "above floor".
  double floor_sigmas = 3.0;
  /// Compare laws on every record_stride-th node.
  std::size_t record_stride = 1;
  double eps_tail = 1e-8;
  double picard_tol = 1e-10;
  std::size_t picard_max_iter = 50;
  std::size_t exact_cutoff = 400;
};

struct CompatibilityReport {
  double tau = 0.0;
  std::vector<double> times;
  std::vector<double> distances;  // bl distance per compared node
  double max_distance = 0.0;
  double noise_floor = 0.0;       // mean of max distances of unshifted pairs
  double noise_floor_sd = 0.0;
  std::vector<double> floor_samples;
  bool upper_bound = false;       // any W1 fallback used
  std::string verdict;            // "at-noise-floor" or "above-noise-floor"
};

/// Bounded solutions for (F, G) and (F^tau, G^tau) with independent noise;
/// reports max over the grid of the bl distance between the two laws and the
/// calibrated noise floor. tau must be a multiple of grid.dt.
CompatibilityReport compatibility_check(const EvolutionProblem& problem, double tau,
                                        std::size_t replicas, const TimeGrid& grid,
                                        std::uint64_t seed,
                                        const CompatibilityOptions& options = {});

/// JSON {epsilon, taus, max_gap, search_range}.
std::string recurrence_report_json(const AlmostPeriodSet& set);
/// JSON {tau, distances, noise_floor, verdict} plus supporting fields.
std::string compatibility_report_json(const CompatibilityReport& report);

}  // namespace fbmlab
