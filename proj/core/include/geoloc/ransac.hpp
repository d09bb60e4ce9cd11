#pragma once

// FDOAR: RANSAC over minimal FDOA samples. Each sample is solved by parameter
// homotopy from a shared generic basis; every feasible real solution is scored
// by how many measurements it explains within epsilon.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "geoloc/geometry.hpp"
#include "geoloc/homotopy.hpp"
#include "geoloc/solution_filter.hpp"
#include "geoloc/system_builder.hpp"

namespace geoloc {

struct RansacConfig {
  int maxiter = 20;
  double epsilon = 0.03;  // m/s
  int sample_size = 3;
  std::uint64_t rng_seed = 0;
  homotopy::TrackerConfig tracker;
  FilterConfig filter;
  // A continuation that converges on fewer than this fraction of basis paths
  // is redone as a fresh total-degree solve.
  double fallback_min_converged = 0.5;
  // Consecutive degenerate draws allowed before giving up on an iteration.
  int max_resamples = 1000;
  // Iterations run concurrently on this many workers (0 = auto). Paths inside
  // an iteration then run serially.
  unsigned threads = 1;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  std::vector<std::size_t> sample;  // measurement indices
  int resamples = 0;                // degenerate draws discarded first
  std::size_t paths = 0;
  std::size_t converged = 0;
  std::size_t feasible = 0;         // candidates scored in this iteration
  std::size_t rejected_complex = 0;
  std::size_t rejected_range = 0;   // nonpositive or inconsistent ranges
  std::size_t rejected_bound = 0;
  bool used_fallback = false;
  std::size_t best_score = 0;       // best over iterations 0..iteration
};

struct RansacEstimate {
  Vec3 emitter = Vec3::Zero();
  std::vector<bool> inlier_mask;  // one per scenario FDOA measurement
  std::size_t score = 0;
  double mean_inlier_residual = 0.0;  // m/s
  int iteration = 0;                  // iteration that produced the estimate
  std::vector<IterationRecord> trace;
};

class NoEstimateError : public GeolocError {
 public:
  NoEstimateError(const std::string& what, std::vector<IterationRecord> trace)
      : GeolocError(ErrorKind::no_estimate, what), trace_(std::move(trace)) {}
  const std::vector<IterationRecord>& trace() const { return trace_; }

 private:
  std::vector<IterationRecord> trace_;
};

struct InlierCount {
  std::size_t score = 0;
  std::vector<bool> mask;
  double mean_residual = 0.0;  // mean |f_hat - f| over inliers, 0 when none
};

/// Inlier iff |fdoa_forward(candidate) - value| < epsilon. A measurement whose
/// forward model is undefined at the candidate is never an inlier.
InlierCount count_inliers(const Vec3& candidate, std::span<const FdoaMeasurement> measurements,
                          double epsilon);

/// The FDOA family solved in every iteration. Its structure depends only on
/// the sample size, so one basis serves every scenario.
poly::ParameterizedSystem fdoar_family(int sample_size = 3);

homotopy::ParameterBasis make_fdoar_basis(const RansacConfig& config);

/// Throws NoEstimateError when no iteration yields a feasible candidate and
/// invalid_argument when too few measurements pass the bound check. A basis
/// from make_fdoar_basis may be passed to skip the generic solve.
RansacEstimate run_fdoar(const Scenario& scenario, const RansacConfig& config,
                         const homotopy::ParameterBasis* basis = nullptr);

/// iteration,sample,resamples,paths,converged,feasible,fallback,best_score
void write_trace_csv(std::ostream& os, std::span<const IterationRecord> trace);

}  // namespace geoloc
